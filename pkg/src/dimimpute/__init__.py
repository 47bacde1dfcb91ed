"""Completion of missing qualitative values in data-warehouse dimension tables."""
from .distance import DistanceModel, build_distance_model
from .hier_impute import hierarchical_imputation
from .olapknn import ImputeConfig, h_olapknn
from .schema import DimensionSchema, load_schema, parse_schema, validate_schema, validate_strictness
from .table import InstanceTable, load_csv, write_csv

__version__ = "0.1.0"

__all__ = [
    "DimensionSchema", "DistanceModel", "ImputeConfig", "InstanceTable", "build_distance_model",
    "h_olapknn", "hierarchical_imputation", "load_csv", "load_schema", "parse_schema",
    "validate_schema", "validate_strictness", "write_csv",
]
