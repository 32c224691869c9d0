"""Exact nearest-neighbour search over projected catalog items."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from quadnet.catalog import Catalog
from quadnet.errors import DataError
from quadnet.featurizer import FeatureStore
from quadnet.projector import ProjectionParams, forward


@dataclass
class EmbeddingIndex:
    ids: list[str]
    units: np.ndarray
    categories: list[str]
    degenerate_ids: list[str]

    def __post_init__(self):
        self._pos = {item_id: i for i, item_id in enumerate(self.ids)}

    def __len__(self):
        return len(self.ids)

    def position(self, item_id: str) -> int:
        try:
            return self._pos[item_id]
        except KeyError:
            raise DataError(f"anchor {item_id!r} is not in the index") from None

    def distances_from(self, item_id: str) -> np.ndarray:
        diff = self.units - self.units[self.position(item_id)]
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def build_index(catalog: Catalog, store: FeatureStore, params: ProjectionParams,
                batch_size: int = 4096) -> EmbeddingIndex:
    ids = catalog.ids
    store.require(ids)
    units, degenerate = [], []
    for start in range(0, len(ids), batch_size):
        units.append(forward(params, store.rows(ids[start:start + batch_size])))
    unit = np.concatenate([p.unit for p in units]) if units else np.zeros((0, params.dims[2]))
    bad = np.concatenate([p.degenerate for p in units]) if units else np.zeros(0, bool)
    degenerate = [i for i, b in zip(ids, bad) if b]
    keep = [i for i, b in zip(ids, bad) if not b]
    if not keep:
        raise DataError("embedding index is empty (every projection is degenerate)")
    return EmbeddingIndex(keep, unit[~bad], [catalog.category_of(i) for i in keep], degenerate)


def _ranked(index: EmbeddingIndex, cand: np.ndarray, key: np.ndarray, dist: np.ndarray, k: int):
    # lexsort: last key is primary; ties fall back to id order
    ids = np.array(index.ids, dtype=object)[cand]
    order = np.lexsort((ids.astype(str), key[cand]))
    return [(index.ids[cand[j]], float(dist[cand[j]])) for j in order[:k]]


def query_similar(index: EmbeddingIndex, anchor: str, k: int) -> list[tuple[str, float]]:
    """The k closest items to ``anchor``, ascending, anchor excluded."""
    dist = index.distances_from(anchor)
    cand = np.flatnonzero(np.arange(len(index)) != index.position(anchor))
    return _ranked(index, cand, dist, dist, k)


def query_complementary(index: EmbeddingIndex, anchor: str, k: int, m_s: float, m_c: float,
                        category_filter: bool = True) -> list[tuple[str, float]]:
    """Items in the band (m_s, m_c], closest to the band centre first.

    With ``category_filter`` items sharing the anchor's category are dropped.
    """
    pos = index.position(anchor)
    dist = index.distances_from(anchor)
    mask = (dist > m_s) & (dist <= m_c)
    mask[pos] = False
    if category_filter:
        mask &= np.array([c != index.categories[pos] for c in index.categories])
    cand = np.flatnonzero(mask)
    centre = (m_s + m_c) / 2
    return _ranked(index, cand, np.abs(dist - centre), dist, k)
