"""Two-layer ReLU projection with unit normalization, forward and backward.

    raw  = W2 @ relu(W1 @ x + b1) + b2
    unit = raw / |raw|

Everything works on row batches: ``x`` is ``(n, d_in)``. Rows whose raw norm
is at most ``EPS_NORM`` are flagged degenerate; their unit vector is zero and
they contribute no gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from quadnet.errors import NumericError

EPS_NORM = 1e-12

DEFAULT_HIDDEN = 256
DEFAULT_OUT = 128


@dataclass
class ProjectionParams:
    w1: np.ndarray  # (hidden, d_in)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (d_out, hidden)
    b2: np.ndarray  # (d_out,)

    NAMES = ("w1", "b1", "w2", "b2")

    def __post_init__(self):
        h, d_in = self.w1.shape
        d_out, h2 = self.w2.shape
        if h2 != h or self.b1.shape != (h,) or self.b2.shape != (d_out,):
            raise ValueError(
                f"inconsistent shapes w1{self.w1.shape} b1{self.b1.shape} "
                f"w2{self.w2.shape} b2{self.b2.shape}"
            )

    @property
    def dims(self) -> tuple[int, int, int]:
        """(d_in, hidden, d_out)"""
        return self.w1.shape[1], self.w1.shape[0], self.w2.shape[0]

    def arrays(self) -> list[np.ndarray]:
        return [getattr(self, f.name) for f in fields(self)]

    def copy(self) -> "ProjectionParams":
        return ProjectionParams(*(a.copy() for a in self.arrays()))

    def zeros_like(self) -> "ProjectionParams":
        return ProjectionParams(*(np.zeros_like(a) for a in self.arrays()))

    def all_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.arrays())


def init_params(dims: tuple[int, int, int], rng: np.random.Generator) -> ProjectionParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
    d_in, hidden, d_out = dims
    if min(dims) < 1:
        raise ValueError(f"dimensions must be positive, got {dims}")
    lim1 = 1.0 / np.sqrt(d_in)
    lim2 = 1.0 / np.sqrt(hidden)
    w1 = rng.uniform(-lim1, lim1, size=(hidden, d_in))
    w2 = rng.uniform(-lim2, lim2, size=(d_out, hidden))
    return ProjectionParams(w1, np.zeros(hidden), w2, np.zeros(d_out))


@dataclass
class Projection:
    """Projected points plus the intermediates backward needs."""

    x: np.ndarray
    pre: np.ndarray
    hidden: np.ndarray
    raw: np.ndarray
    raw_norm: np.ndarray
    unit: np.ndarray
    degenerate: np.ndarray

    def __len__(self):
        return len(self.raw)


def forward(params: ProjectionParams, x: np.ndarray) -> Projection:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != params.dims[0]:
        raise ValueError(f"input dimension {x.shape[1]} != {params.dims[0]}")
    pre = x @ params.w1.T + params.b1
    hidden = np.maximum(pre, 0.0)
    raw = hidden @ params.w2.T + params.b2
    norm = np.sqrt(np.einsum("ij,ij->i", raw, raw))
    degenerate = norm <= EPS_NORM
    safe = np.where(degenerate, 1.0, norm)
    unit = np.where(degenerate[:, None], 0.0, raw / safe[:, None])
    return Projection(x, pre, hidden, raw, norm, unit, degenerate)


def project(params: ProjectionParams, x: np.ndarray) -> np.ndarray:
    """Unit vectors only."""
    return forward(params, x).unit


def distance(p: Projection | np.ndarray, q: Projection | np.ndarray) -> float:
    """Euclidean distance between two single normalized points."""
    u, v = _single_unit(p), _single_unit(q)
    return float(np.sqrt(np.sum((u - v) ** 2)))


def _single_unit(p):
    if isinstance(p, Projection):
        if len(p) != 1:
            raise ValueError("distance() takes single points")
        if p.degenerate[0]:
            raise NumericError("cannot measure distance to a degenerate projection")
        return p.unit[0]
    u = np.asarray(p, dtype=np.float64)
    if np.linalg.norm(u) <= EPS_NORM:
        raise NumericError("cannot measure distance to a zero vector")
    return u


def row_distances(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    diff = u - v
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def backward(params: ProjectionParams, proj: Projection, grad_unit: np.ndarray) -> ProjectionParams:
    """Gradient of a scalar loss w.r.t. params given dL/d(unit) per row.

    Row contributions are summed. Degenerate rows contribute zero.
    """
    g = np.asarray(grad_unit, dtype=np.float64).reshape(proj.unit.shape)
    u = proj.unit
    # d unit / d raw = (I - u u^T) / |raw|
    radial = np.einsum("ij,ij->i", u, g)
    safe = np.where(proj.degenerate, 1.0, proj.raw_norm)
    g_raw = (g - u * radial[:, None]) / safe[:, None]
    g_raw[proj.degenerate] = 0.0

    gw2 = g_raw.T @ proj.hidden
    gb2 = g_raw.sum(axis=0)
    g_pre = (g_raw @ params.w2) * (proj.pre > 0)
    gw1 = g_pre.T @ proj.x
    gb1 = g_pre.sum(axis=0)
    return ProjectionParams(gw1, gb1, gw2, gb2)
