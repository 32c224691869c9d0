"""Quadruplet and triplet hinge losses on unit-normalized embeddings.

Quadruplet mode, per example, with distances measured from the anchor:

    sim  = max(d_as - m_s, 0)
    comp = max(d_ac - m_c, 0) + max(m_s - d_ac, 0)
    neg  = max(m_n - d_an, 0)

Triplet mode replaces all three with max(d_ac - d_an + margin, 0), reported
under ``l_comp``. Batch losses are means over examples; the L2 term is the
sum of squared weight-matrix entries (biases excluded), scaled by lambda.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from quadnet.projector import ProjectionParams, row_distances

EPS_DIST = 1e-12

MODES = ("quadruplet", "triplet")


@dataclass(frozen=True)
class LossConfig:
    m_s: float = 0.1
    m_c: float = 0.4
    m_n: float = 0.8
    lam: float = 1e-4
    mode: str = "quadruplet"
    triplet_margin: float = 0.2

    def __post_init__(self):
        if not 0 < self.m_s < self.m_c < self.m_n:
            raise ValueError(
                f"margins must satisfy 0 < m_s < m_c < m_n, got "
                f"({self.m_s}, {self.m_c}, {self.m_n})"
            )
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.triplet_margin <= 0:
            raise ValueError("triplet margin must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LossBreakdown:
    l_sim: float
    l_comp: float
    l_neg: float
    l_reg: float
    total: float

    def to_dict(self) -> dict:
        return asdict(self)


def loss_sim(d_as, m_s):
    return np.maximum(np.asarray(d_as) - m_s, 0.0)


def loss_comp(d_ac, m_s, m_c):
    d_ac = np.asarray(d_ac)
    return np.maximum(d_ac - m_c, 0.0) + np.maximum(m_s - d_ac, 0.0)


def loss_neg(d_an, m_n):
    return np.maximum(m_n - np.asarray(d_an), 0.0)


def loss_triplet(d_ac, d_an, margin):
    # (d_ac + margin) first, so d_an == d_ac + margin gives an exact zero
    return np.maximum((np.asarray(d_ac) + margin) - np.asarray(d_an), 0.0)


def l2_penalty(params: ProjectionParams) -> float:
    return float(np.sum(params.w1 ** 2) + np.sum(params.w2 ** 2))


def l2_gradient(params: ProjectionParams, lam: float) -> ProjectionParams:
    return ProjectionParams(2 * lam * params.w1, np.zeros_like(params.b1),
                            2 * lam * params.w2, np.zeros_like(params.b2))


def breakdown_from_distances(d_as, d_ac, d_an, config: LossConfig, l_reg: float = 0.0) -> LossBreakdown:
    d_as, d_ac, d_an = (np.atleast_1d(np.asarray(d, dtype=np.float64)) for d in (d_as, d_ac, d_an))
    if config.mode == "triplet":
        l_sim = l_neg = 0.0
        l_comp = float(np.mean(loss_triplet(d_ac, d_an, config.triplet_margin)))
    else:
        l_sim = float(np.mean(loss_sim(d_as, config.m_s)))
        l_comp = float(np.mean(loss_comp(d_ac, config.m_s, config.m_c)))
        l_neg = float(np.mean(loss_neg(d_an, config.m_n)))
    total = l_sim + l_comp + l_neg + config.lam * l_reg
    return LossBreakdown(l_sim, l_comp, l_neg, l_reg, total)


def total_loss(units, params: ProjectionParams | None, config: LossConfig) -> LossBreakdown:
    """Batch-mean loss for unit projections ``(a, s, c, n)``, each ``(n, d)``."""
    a, s, c, n = (np.atleast_2d(u) for u in units)
    l_reg = l2_penalty(params) if params is not None else 0.0
    return breakdown_from_distances(row_distances(a, s), row_distances(a, c),
                                    row_distances(a, n), config, l_reg)


def _dist_grad(u, v, d):
    """d(distance)/du for each row; zero where the points coincide."""
    safe = np.where(d > EPS_DIST, d, 1.0)
    g = (u - v) / safe[:, None]
    g[d <= EPS_DIST] = 0.0
    return g


def loss_gradients(units, config: LossConfig):
    """Gradients of the batch-mean hinge loss w.r.t. each of ``(a, s, c, n)``.

    Subgradient 0 is taken at hinge kinks. The L2 term is not included; see
    :func:`l2_gradient`.
    """
    a, s, c, n = (np.atleast_2d(u) for u in units)
    batch = len(a)
    d_as, d_ac, d_an = row_distances(a, s), row_distances(a, c), row_distances(a, n)

    if config.mode == "triplet":
        active = ((d_ac + config.triplet_margin) - d_an > 0).astype(np.float64)
        k_s = np.zeros(batch)
        k_c = active
        k_n = -active
    else:
        k_s = (d_as > config.m_s).astype(np.float64)
        k_c = (d_ac > config.m_c).astype(np.float64) - (d_ac < config.m_s)
        k_n = -(d_an < config.m_n).astype(np.float64)

    g_as = _dist_grad(a, s, d_as) * (k_s / batch)[:, None]
    g_ac = _dist_grad(a, c, d_ac) * (k_c / batch)[:, None]
    g_an = _dist_grad(a, n, d_an) * (k_n / batch)[:, None]
    return g_as + g_ac + g_an, -g_as, -g_ac, -g_an
