"""Build (anchor, similar, complementary, negative) quadruplets and split them.

Complementary pairs come from cross-category co-purchase edges, taken as
directed anchor -> complementary pairs. Each pair gets a similar item drawn
from the anchor's category and a negative drawn from the whole catalog. The
train/test split is by anchor, so no anchor appears on both sides.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from quadnet.catalog import Catalog, CoPurchaseEdge
from quadnet.errors import DataError

MAX_NEGATIVE_ATTEMPTS = 100


class NoSimilarAvailable(DataError):
    pass


class NegativeSamplingError(DataError):
    pass


@dataclass(frozen=True)
class Quadruplet:
    anchor: str
    similar: str
    complementary: str
    negative: str

    def ids(self) -> tuple[str, str, str, str]:
        return (self.anchor, self.similar, self.complementary, self.negative)


@dataclass
class GenStats:
    edges: int = 0
    same_category: int = 0
    duplicate_pairs: int = 0
    pairs: int = 0
    no_similar: int = 0
    no_negative: int = 0
    quadruplets: int = 0


@dataclass
class SplitDataset:
    train: list[Quadruplet]
    test: list[Quadruplet]
    seed: int | None = None
    fraction: float = 0.9
    stats: GenStats = field(default_factory=GenStats)

    def anchors(self, side: str) -> set[str]:
        return {q.anchor for q in getattr(self, side)}


def build_pairs(catalog: Catalog, edges: list[CoPurchaseEdge],
                stats: GenStats | None = None) -> list[tuple[str, str]]:
    """Cross-category (anchor, complementary) pairs, first occurrence order."""
    stats = stats if stats is not None else GenStats()
    seen = set()
    pairs = []
    for e in edges:
        stats.edges += 1
        if catalog.category_of(e.source) == catalog.category_of(e.target):
            stats.same_category += 1
            continue
        key = (e.source, e.target)
        if key in seen:
            stats.duplicate_pairs += 1
            continue
        seen.add(key)
        pairs.append(key)
    stats.pairs = len(pairs)
    return pairs


def sample_similar(catalog: Catalog, anchor: str, rng: np.random.Generator) -> str:
    """Uniform draw from the anchor's category, never the anchor itself."""
    members = catalog.category_members(catalog.category_of(anchor))
    if len(members) < 2:
        raise NoSimilarAvailable(f"category of {anchor!r} has no other items")
    pos = members.index(anchor)
    k = int(rng.integers(len(members) - 1))
    return members[k + 1 if k >= pos else k]


def sample_negative(catalog: Catalog, anchor: str, complementary: str, similar: str,
                    rng: np.random.Generator, ids: list[str] | None = None) -> str:
    """Uniform draw over the catalog rejecting the other three roles.

    No category filtering is applied, so a negative can occasionally be a
    same-category or co-purchased item.
    """
    ids = ids if ids is not None else catalog.ids
    taken = {anchor, complementary, similar}
    for _ in range(MAX_NEGATIVE_ATTEMPTS):
        cand = ids[int(rng.integers(len(ids)))]
        if cand not in taken:
            return cand
    raise NegativeSamplingError(
        f"no negative found for anchor {anchor!r} after {MAX_NEGATIVE_ATTEMPTS} attempts"
    )


def generate(catalog: Catalog, edges: list[CoPurchaseEdge], rng: np.random.Generator,
             similars_per_pair: int = 1, stats: GenStats | None = None) -> list[Quadruplet]:
    stats = stats if stats is not None else GenStats()
    if similars_per_pair < 1:
        raise DataError("similars_per_pair must be >= 1")
    ids = catalog.ids
    quads = []
    for anchor, comp in build_pairs(catalog, edges, stats):
        for _ in range(similars_per_pair):
            try:
                sim = sample_similar(catalog, anchor, rng)
            except NoSimilarAvailable:
                stats.no_similar += 1
                continue
            try:
                neg = sample_negative(catalog, anchor, comp, sim, rng, ids)
            except NegativeSamplingError:
                stats.no_negative += 1
                continue
            quads.append(Quadruplet(anchor, sim, comp, neg))
    stats.quadruplets = len(quads)
    if not quads:
        raise DataError(
            f"zero quadruplets produced ({stats.edges} edges, {stats.same_category} same-category, "
            f"{stats.no_similar} without similar, {stats.no_negative} without negative)"
        )
    return quads


def split_by_anchor(quads: list[Quadruplet], train_fraction: float,
                    rng: np.random.Generator) -> SplitDataset:
    """Shuffle distinct anchors, send the first floor(fraction * n) to train."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train fraction must be in (0, 1), got {train_fraction}")
    anchors = list(dict.fromkeys(q.anchor for q in quads))
    if len(anchors) < 2:
        raise DataError(f"need at least 2 distinct anchors to split, got {len(anchors)}")
    order = rng.permutation(len(anchors))
    n_train = math.floor(train_fraction * len(anchors))
    if n_train == 0 or n_train == len(anchors):
        raise DataError(
            f"split of {len(anchors)} anchors at fraction {train_fraction} leaves one side empty"
        )
    train_anchors = {anchors[i] for i in order[:n_train]}
    train = [q for q in quads if q.anchor in train_anchors]
    test = [q for q in quads if q.anchor not in train_anchors]
    return SplitDataset(train, test, fraction=train_fraction)


def write_quads(quads: list[Quadruplet], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for q in quads:
            fh.write("\t".join(q.ids()) + "\n")


def read_quads(path: str | Path) -> list[Quadruplet]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: cannot read quadruplets ({exc})") from exc
    quads = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = [p.strip() for p in line.split("\t")]
        if len(parts) != 4 or not all(parts):
            raise DataError(f"{path}:{lineno}: expected 4 tab-separated ids")
        quads.append(Quadruplet(*parts))
    if not quads:
        raise DataError(f"{path}: no quadruplets")
    return quads


def write_split(split: SplitDataset, out_dir: str | Path) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_quads(split.train, out_dir / "train.tsv")
    write_quads(split.test, out_dir / "test.tsv")
    s = split.stats
    manifest = {
        "seed": split.seed,
        "fraction": split.fraction,
        "counts": {
            "train_quadruplets": len(split.train),
            "test_quadruplets": len(split.test),
            "train_anchors": len(split.anchors("train")),
            "test_anchors": len(split.anchors("test")),
        },
        "skipped": {
            "same_category_edges": s.same_category,
            "duplicate_pairs": s.duplicate_pairs,
            "no_similar": s.no_similar,
            "no_negative": s.no_negative,
        },
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
