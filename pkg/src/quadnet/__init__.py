"""Quadruplet-loss item embeddings for similar and complementary recommendations."""

from quadnet.catalog import Catalog, CoPurchaseEdge, Item, load_catalog, load_edges
from quadnet.errors import DataError, NumericError, QuadnetError
from quadnet.featurizer import FeatureStore, hash_featurize, load_vectors
from quadnet.loss import LossBreakdown, LossConfig
from quadnet.projector import ProjectionParams, forward, init_params
from quadnet.quadgen import Quadruplet, SplitDataset, generate, split_by_anchor
from quadnet.trainer import TrainConfig, TrainState, train

__version__ = "0.1.0"

__all__ = [
    "Catalog",
    "CoPurchaseEdge",
    "DataError",
    "FeatureStore",
    "Item",
    "LossBreakdown",
    "LossConfig",
    "NumericError",
    "ProjectionParams",
    "QuadnetError",
    "Quadruplet",
    "SplitDataset",
    "TrainConfig",
    "TrainState",
    "forward",
    "generate",
    "hash_featurize",
    "init_params",
    "load_catalog",
    "load_edges",
    "load_vectors",
    "split_by_anchor",
    "train",
]
