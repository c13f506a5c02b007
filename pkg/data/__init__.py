from .dataset import ColumnKind, ColumnSchema, Dataset, MISSING_MARKERS, load_csv
from .homogenizer import (
    BinStrategy,
    FeatureGroup,
    Homogenizer,
    encode_binary,
    fit_homogenizer,
    group_argmax_decode,
)
from .split import DEFAULT_RATIOS, DataSplit, stratified_split
from .synthetic import make_blobs, make_rings, make_synthetic

__all__ = (
    'ColumnKind',
    'ColumnSchema',
    'Dataset',
    'MISSING_MARKERS',
    'load_csv',
    'BinStrategy',
    'FeatureGroup',
    'Homogenizer',
    'encode_binary',
    'fit_homogenizer',
    'group_argmax_decode',
    'DEFAULT_RATIOS',
    'DataSplit',
    'stratified_split',
    'make_blobs',
    'make_rings',
    'make_synthetic',
)
