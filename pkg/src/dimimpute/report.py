from __future__ import annotations

from dataclasses import asdict, dataclass, field


@dataclass
class ImputationReport:
    method: str
    fills: dict[str, int] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    runtime_s: float = 0.0
    remaining_missing: int = 0
    config: dict = field(default_factory=dict)
    accuracy: float | None = None
    attribute_accuracy: dict[str, float] = field(default_factory=dict)
    events: list[tuple] = field(default_factory=list)

    @property
    def total_fills(self) -> int:
        return sum(self.fills.values())

    def to_dict(self, timings: bool = True) -> dict:
        d = asdict(self)
        d["events"] = [list(e) for e in self.events]
        if not timings:
            d.pop("timings")
            d.pop("runtime_s")
        return d
