"""Print every intermediate quantity of the five-row product example."""
from pathlib import Path

from dimimpute.distance import TableProvider, build_distance_model, dependency_degree, hierarchy_weights
from dimimpute.olapknn import h_olapknn
from dimimpute.schema import load_schema
from dimimpute.table import load_csv, to_csv_text

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"


def main() -> None:
    schema = load_schema(DATA / "product_schema.yaml")
    table = load_csv(DATA / "product.csv", schema)
    prov = TableProvider({("Brand", "BrandA", "BrandB"): 0.71, ("Name", "Cookies", "Chips"): 0.8})
    model = build_distance_model(schema, table, prov, level_weight="cardinality")
    print("level weights:", model.level_weights)
    for a in ("Brand", "Name"):
        print(f"gamma({a} -> Id_Sub) = {dependency_degree(table, a, 'Id_Sub'):.3f}")
    print("hierarchy weights (target H1):", hierarchy_weights(table, schema, "H1"))
    for h in ("H1", "H2", "Name"):
        print(f"distance P1-P2 on {h}: {model.hierarchy_distance(table, 0, 1, h)}")
    print(f"dimension distance P1-P2: {model.dimension_distance(table, 0, 1, 'H1'):.4f}")
    report = h_olapknn(table, schema, provider=prov)
    print("fills:", report.fills)
    print(to_csv_text(table), end="")


if __name__ == "__main__":
    main()
