from pathlib import Path

import pytest

from dimimpute.distance import TableProvider
from dimimpute.schema import load_schema
from dimimpute.table import load_csv

DATA = Path(__file__).parent / "data"


@pytest.fixture
def product_schema():
    return load_schema(DATA / "product_schema.yaml")


@pytest.fixture
def product_table(product_schema):
    return load_csv(DATA / "product.csv", product_schema)


@pytest.fixture
def product_provider():
    """Attribute distances of the worked example between P1 and P2."""
    return TableProvider({("Brand", "BrandA", "BrandB"): 0.71, ("Name", "Cookies", "Chips"): 0.8})
