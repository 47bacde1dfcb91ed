import statistics

import numpy as np
import pytest

from dimimpute.distance import TableProvider
from dimimpute.evaluation import (BenchRecord, accuracy, attribute_accuracy, basic_knn_impute, format_report,
                                  inject_missing, mode_impute, run_benchmark, write_report_csv)
from dimimpute.schema import AttributeDef, DimensionSchema, HierarchyDef
from dimimpute.synthetic import HierarchySpec, SyntheticConfig, generate
from dimimpute.table import InstanceTable

S = DimensionSchema("Id", tuple(AttributeDef(n) for n in ("Id", "A", "B")), (HierarchyDef("H", ("Id", "A", "B")),))


def table_ab(rows):
    return InstanceTable.from_records(S, [{"Id": str(i), "A": a, "B": b} for i, (a, b) in enumerate(rows)])


def complete(n=100, seed=0):
    return generate(SyntheticConfig(n_rows=n), seed)


def test_inject_rate_zero():
    schema, t = complete()
    out, mask = inject_missing(t, {a: 0.0 for a in schema.names[1:]}, 1)
    assert out.equals(t) and mask == {}


def test_inject_full_column():
    schema, t = complete()
    out, mask = inject_missing(t, {"H1_L2": 1.0}, 1)
    assert out.column("H1_L2") == [None] * 100 and len(mask) == 100


def test_inject_count_and_determinism():
    schema, t = complete()
    a, ma = inject_missing(t, {"H1_L3": 0.1}, 42)
    b, mb = inject_missing(t, {"H1_L3": 0.1}, 42)
    assert len(ma) == 10 and ma == mb and a.equals(b)
    _, mc = inject_missing(t, {"H1_L3": 0.1}, 43)
    assert mc != ma


def test_inject_rejects_id():
    schema, t = complete()
    with pytest.raises(ValueError, match="id"):
        inject_missing(t, {"Id": 0.1}, 0)


def test_mask_records_originals():
    schema, t = complete()
    out, mask = inject_missing(t, {a: 0.3 for a in schema.names[1:]}, 5)
    rows = {rid: r for r, rid in enumerate(t.ids())}
    for (rid, a), v in mask.items():
        assert t.get(rows[rid], a) == v and out.get(rows[rid], a) is None


def test_accuracy_cases():
    t = table_ab([("x", "p"), ("y", "q"), ("z", None), ("w", "s")])
    mask = {("0", "B"): "p", ("1", "B"): "q", ("2", "B"): "r", ("3", "B"): " s "}
    assert accuracy(t, mask) == 0.75
    assert accuracy(t, {("0", "B"): "p"}) == 1.0
    assert accuracy(t, {("2", "B"): "r"}) == 0.0
    assert attribute_accuracy(t, mask)["B"] == 0.75
    with pytest.raises(ValueError):
        accuracy(t, {})


def test_mode_impute():
    t = table_ab([("A", None), ("A", None), ("B", None), (None, None), ("B", None), (None, None), ("A", None)])
    assert mode_impute(t, S) == 2
    assert t.column("A")[3] == "A"
    tie = table_ab([("A", None), ("B", None), (None, None)])
    mode_impute(tie, S)
    assert tie.get(2, "A") == "A"
    assert tie.column("B") == [None] * 3


def test_knn_copies_unique_neighbour():
    t = table_ab([("x", "p"), ("x", None)])
    assert basic_knn_impute(t, S, k=5) == 1
    assert t.get(1, "B") == "p"


def test_knn_hand_run_fixture():
    rows = [("a1", None), ("a1", "p"), ("a2", "q"), ("a3", "q"), ("a1", "r")]
    t = table_ab(rows)
    prov = TableProvider({("A", "a1", "a2"): 0.2, ("A", "a1", "a3"): 0.6})
    basic_knn_impute(t, S, k=3, provider=prov)
    # neighbours by distance: r1 (0), r4 (0), r2 (0.2); Dudani: 1, 1, 0 -> p and r tie at 1, p wins
    assert t.get(0, "B") == "p"
    t2 = table_ab(rows)
    basic_knn_impute(t2, S, k=4, provider=prov)
    # adding r3 (0.6): weights 1, 1, 2/3, 0; q now has 2/3 but p/r keep 1
    assert t2.get(0, "B") == "p"


def test_knn_k_larger_than_candidates():
    t = table_ab([("x", None), ("y", "p"), ("z", "p")])
    basic_knn_impute(t, S, k=50)
    assert t.get(0, "B") == "p"


def test_knn_no_candidate():
    t = table_ab([("x", None), ("y", None)])
    assert basic_knn_impute(t, S) == 0


def test_mode_accuracy_tracks_modal_share():
    # one hierarchy whose level-2 value has modal share 0.5 by construction
    cfg = SyntheticConfig(n_rows=400, hierarchies=(HierarchySpec("H1", (2, 1), dominant=0.5),),
                          weak_labels=False, id_weaks={})
    accs, shares = [], []
    for seed in range(20):
        schema, t = generate(cfg, seed)
        masked, mask = inject_missing(t, {"H1_L2": 0.2}, seed)
        col = t.column("H1_L2")
        shares.append(max(col.count(v) for v in set(col)) / len(col))
        mode_impute(masked, schema)
        accs.append(accuracy(masked, mask))
    assert abs(statistics.fmean(accs) - statistics.fmean(shares)) <= 0.05


def test_benchmark_grid_shape_and_determinism():
    schema, t = complete(60)
    rates = [0.01, 0.05, 0.1, 0.2, 0.3, 0.4]
    recs = run_benchmark(t, schema, rates, ["h_olapknn", "mode"], repeats=2, seed=3)
    assert len(recs) == 12
    again = run_benchmark(t, schema, rates, ["h_olapknn", "mode"], repeats=2, seed=3)
    assert format_report(recs, timings=False) == format_report(again, timings=False)


def test_rate_zero_skipped_with_note():
    schema, t = complete(30)
    (rec,) = run_benchmark(t, schema, [0.0], ["knn"], repeats=1, seed=0)
    assert rec.mean_accuracy is None and "empty mask" in rec.note


def test_unknown_method():
    schema, t = complete(10)
    with pytest.raises(ValueError, match="unknown method"):
        run_benchmark(t, schema, [0.1], ["magic"], repeats=1)


def test_report_formats(tmp_path):
    recs = [BenchRecord("mode", 0.1, 2, 0.5, 0.1, 0.01)]
    line = format_report(recs)
    assert '"mean_runtime_s": 0.01' in line and line.endswith("\n")
    assert "mean_runtime_s" not in format_report(recs, timings=False)
    with open(tmp_path / "r.csv", "w", newline="") as fh:
        write_report_csv(recs, fh)
    assert (tmp_path / "r.csv").read_text().splitlines()[0].startswith("method,rate,repeats")
