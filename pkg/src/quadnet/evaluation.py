"""Ranking/band accuracies and distance distributions on a quadruplet set.

Distances here are computed with correctly rounded summation (``math.fsum``)
and the summary statistics with exact rational arithmetic (``statistics``),
so reports do not depend on BLAS or reduction order and are bit-reproducible.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from quadnet.errors import DataError
from quadnet.featurizer import FeatureStore
from quadnet.loss import LossConfig
from quadnet.projector import ProjectionParams, forward
from quadnet.quadgen import Quadruplet

RELATIONS = ("similar", "complementary", "negative")
N_BINS = 100
# float edges k/50, used for both binning and the CSV
BIN_EDGES = np.arange(N_BINS + 1) / 50.0


def ranking_correct(d_as: float, d_ac: float, d_an: float) -> int:
    """1 iff d(a,s) < d(a,c) < d(a,n), ties count as wrong."""
    return int(d_as < d_ac < d_an)


def classify_pair(d: float, config: LossConfig) -> str:
    if d <= config.m_s:
        return "similar"
    if d <= config.m_c:
        return "complementary"
    return "negative"


def exact_row_distances(u: np.ndarray, v: np.ndarray) -> list[float]:
    diff = u - v
    return [math.sqrt(math.fsum(row)) for row in (diff * diff).tolist()]


def histogram(distances) -> list[int]:
    d = np.asarray(distances, dtype=np.float64)
    bins = np.clip(np.searchsorted(BIN_EDGES, d, side="right") - 1, 0, N_BINS - 1)
    return np.bincount(bins, minlength=N_BINS).astype(int).tolist()


def describe(distances: list[float]) -> dict:
    if not distances:
        return {"mean": 0.0, "std_dev": 0.0, "count": 0}
    return {
        "mean": statistics.mean(distances),
        "std_dev": math.sqrt(statistics.pvariance(distances)),
        "count": len(distances),
    }


@dataclass
class EvalReport:
    ranking_acc: float
    comp_acc: float
    sim_acc: float
    dist_stats: dict
    histograms: dict
    count: int
    degenerate_skipped: int
    margins: dict

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def report_from_distances(d_as: list[float], d_ac: list[float], d_an: list[float],
                          config: LossConfig, degenerate_skipped: int = 0) -> EvalReport:
    n = len(d_as)
    if n == 0:
        raise DataError("empty evaluation set")
    ranked = sum(ranking_correct(*t) for t in zip(d_as, d_ac, d_an))
    sim_ok = sum(classify_pair(d, config) == "similar" for d in d_as)
    comp_ok = sum(classify_pair(d, config) == "complementary" for d in d_ac)
    per_rel = dict(zip(RELATIONS, (d_as, d_ac, d_an)))
    return EvalReport(
        ranking_acc=ranked / n,
        comp_acc=comp_ok / n,
        sim_acc=sim_ok / n,
        dist_stats={k: describe(v) for k, v in per_rel.items()},
        histograms={k: histogram(v) for k, v in per_rel.items()},
        count=n,
        degenerate_skipped=degenerate_skipped,
        margins={"m_s": config.m_s, "m_c": config.m_c, "m_n": config.m_n},
    )


def embed(params: ProjectionParams, store: FeatureStore, ids) -> tuple[dict, set]:
    """Project each distinct id once; returns (id -> unit vector, degenerate ids)."""
    ids = list(dict.fromkeys(ids))
    proj = forward(params, store.rows(ids))
    units = dict(zip(ids, proj.unit))
    return units, {i for i, bad in zip(ids, proj.degenerate) if bad}


def quad_distances(quads: list[Quadruplet], params: ProjectionParams, store: FeatureStore):
    """Anchor distances for each relation, skipping quadruplets with a degenerate point."""
    store.require(i for q in quads for i in q.ids())
    units, bad = embed(params, store, (i for q in quads for i in q.ids()))
    kept = [q for q in quads if bad.isdisjoint(q.ids())]
    dim = params.dims[2]
    a, s, c, n = (np.array([units[q.ids()[r]] for q in kept]).reshape(-1, dim) for r in range(4))
    return exact_row_distances(a, s), exact_row_distances(a, c), exact_row_distances(a, n), len(quads) - len(kept)


def evaluate(quads: list[Quadruplet], params: ProjectionParams, store: FeatureStore,
             config: LossConfig) -> EvalReport:
    if not quads:
        raise DataError("empty test set")
    d_as, d_ac, d_an, skipped = quad_distances(quads, params, store)
    return report_from_distances(d_as, d_ac, d_an, config, skipped)


def emit_histograms(report: EvalReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_low", "bin_high"] + [f"count_{r}" for r in RELATIONS])
        for k in range(N_BINS):
            counts = [report.histograms[r][k] if r in report.histograms else 0 for r in RELATIONS]
            w.writerow([f"{BIN_EDGES[k]:.2f}", f"{BIN_EDGES[k + 1]:.2f}", *counts])
