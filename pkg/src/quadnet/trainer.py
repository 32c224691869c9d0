"""Minibatch training of the projection and checkpoint I/O.

Every quadruplet contributes four rows to one stacked forward pass; gradients
from the loss flow back through a single backward call. Randomness (weight
init and per-epoch shuffles) comes from one generator seeded by
``TrainConfig.seed``, so a run is reproducible bit for bit on one platform.
"""

from __future__ import annotations

import hashlib
import json
import logging
import struct
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from quadnet.errors import DataError, NumericError
from quadnet.featurizer import FeatureStore
from quadnet.loss import LossBreakdown, LossConfig, l2_gradient, l2_penalty, loss_gradients, total_loss
from quadnet.projector import DEFAULT_HIDDEN, DEFAULT_OUT, ProjectionParams, backward, forward, init_params
from quadnet.quadgen import Quadruplet

log = logging.getLogger(__name__)

OPTIMIZERS = ("adam", "sgd")
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 512
    learning_rate: float = 0.001
    epochs: int = 30
    optimizer: str = "adam"
    seed: int = 0
    hidden: int = DEFAULT_HIDDEN
    out_dim: int = DEFAULT_OUT
    loss: LossConfig = field(default_factory=LossConfig)

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1 or self.hidden < 1 or self.out_dim < 1:
            raise ValueError("batch_size, epochs, hidden and out_dim must be positive")
        # lr 0 is allowed: it freezes the params, which is useful as a control
        if self.learning_rate < 0:
            raise ValueError(f"learning rate must be >= 0, got {self.learning_rate}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")


@dataclass
class TrainState:
    params: ProjectionParams
    m: ProjectionParams | None = None
    v: ProjectionParams | None = None
    step: int = 0
    epoch: int = 0
    history: list[LossBreakdown] = field(default_factory=list)
    seed: int = 0
    degenerate_skipped: int = 0
    meta: dict = field(default_factory=dict)


class Adam:
    def __init__(self, lr: float, state: TrainState):
        self.lr = lr
        self.state = state
        if state.m is None:
            state.m = state.params.zeros_like()
            state.v = state.params.zeros_like()

    def step(self, grads: ProjectionParams) -> None:
        st = self.state
        st.step += 1
        c1 = 1 - ADAM_BETA1 ** st.step
        c2 = 1 - ADAM_BETA2 ** st.step
        for p, m, v, g in zip(st.params.arrays(), st.m.arrays(), st.v.arrays(), grads.arrays()):
            m *= ADAM_BETA1
            m += (1 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1 - ADAM_BETA2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)


class SGD:
    def __init__(self, lr: float, state: TrainState):
        self.lr = lr
        self.state = state

    def step(self, grads: ProjectionParams) -> None:
        self.state.step += 1
        for p, g in zip(self.state.params.arrays(), grads.arrays()):
            p -= self.lr * g


def quad_index(quads: list[Quadruplet], store: FeatureStore) -> np.ndarray:
    """``(n, 4)`` row indices into ``store.matrix``; fails on any missing id."""
    store.require(i for q in quads for i in q.ids())
    lookup = {item_id: k for k, item_id in enumerate(store.ids)}
    return np.array([[lookup[i] for i in q.ids()] for q in quads], dtype=np.int64).reshape(-1, 4)


def batch_step(params: ProjectionParams, x: np.ndarray, config: LossConfig):
    """Loss and parameter gradient for one batch.

    ``x`` stacks the role blocks ``[a; s; c; n]``, each ``(b, d_in)``.
    Quadruplets with any degenerate projection are dropped from the batch.
    Returns ``(breakdown, grads, n_used)``; breakdown is None when nothing is
    usable.
    """
    proj = forward(params, x)
    b = len(x) // 4
    units = proj.unit.reshape(4, b, -1)
    ok = ~proj.degenerate.reshape(4, b).any(axis=0)
    n_used = int(ok.sum())
    grads = l2_gradient(params, config.lam)
    if n_used == 0:
        return None, grads, 0
    used = tuple(u[ok] for u in units)
    breakdown = total_loss(used, params, config)
    g_units = np.zeros_like(units)
    for role, g in enumerate(loss_gradients(used, config)):
        g_units[role, ok] = g
    g = backward(params, proj, g_units.reshape(4 * b, -1))
    for acc, part in zip(grads.arrays(), g.arrays()):
        acc += part
    return breakdown, grads, n_used


def _epoch_mean(parts: list[tuple[LossBreakdown, int]], lam: float) -> LossBreakdown:
    total_n = sum(n for _, n in parts)
    if total_n == 0:
        return LossBreakdown(0.0, 0.0, 0.0, 0.0, 0.0)
    avg = {k: sum(getattr(bd, k) * n for bd, n in parts) / total_n
           for k in ("l_sim", "l_comp", "l_neg", "l_reg")}
    return LossBreakdown(**avg, total=avg["l_sim"] + avg["l_comp"] + avg["l_neg"] + lam * avg["l_reg"])


def train(quads: list[Quadruplet], store: FeatureStore, config: TrainConfig,
          on_epoch: Callable[[dict], None] | None = None) -> TrainState:
    if not quads:
        raise DataError("no training quadruplets")
    idx = quad_index(quads, store)
    rng = np.random.default_rng(config.seed)
    params = init_params((store.dim, config.hidden, config.out_dim), rng)
    state = TrainState(params=params, seed=config.seed, meta={
        "featurizer": store.meta,
        "loss": config.loss.to_dict(),
        "train": {k: v for k, v in asdict(config).items() if k != "loss"},
    })
    opt = Adam(config.learning_rate, state) if config.optimizer == "adam" else SGD(config.learning_rate, state)

    n = len(idx)
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(n)
        parts = []
        for batch_no, start in enumerate(range(0, n, config.batch_size)):
            rows = idx[order[start:start + config.batch_size]]
            x = store.matrix[rows.T.reshape(-1)]
            breakdown, grads, used = batch_step(state.params, x, config.loss)
            state.degenerate_skipped += len(rows) - used
            if breakdown is not None:
                if not np.isfinite(breakdown.total):
                    raise NumericError(f"non-finite loss in epoch {epoch}, batch {batch_no}")
                parts.append((breakdown, used))
            if not grads.all_finite():
                raise NumericError(f"non-finite gradient in epoch {epoch}, batch {batch_no}")
            opt.step(grads)
        mean = _epoch_mean(parts, config.loss.lam)
        state.history.append(mean)
        state.epoch = epoch
        if on_epoch is not None:
            on_epoch({"epoch": epoch, **mean.to_dict(),
                      "wall_ms": round((time.perf_counter() - t0) * 1000, 3)})
    return state


# --- checkpoints -----------------------------------------------------------

CKPT_MAGIC = b"QUADNET\x00"
CKPT_VERSION = 1
_PREFIX = struct.Struct("<8sIQ")  # magic, version, header length


class CheckpointError(DataError):
    pass


def _tensors(state: TrainState) -> list[tuple[str, np.ndarray]]:
    out = [(f"params.{k}", a) for k, a in zip(ProjectionParams.NAMES, state.params.arrays())]
    if state.m is not None:
        out += [(f"adam_m.{k}", a) for k, a in zip(ProjectionParams.NAMES, state.m.arrays())]
        out += [(f"adam_v.{k}", a) for k, a in zip(ProjectionParams.NAMES, state.v.arrays())]
    return out


def save_checkpoint(state: TrainState, path: str | Path) -> None:
    """Write a self-describing binary checkpoint.

    Layout: 8-byte magic, uint32 version, uint64 header length, a UTF-8 JSON
    header, then each tensor as little-endian float64 in row-major order at
    the offset the header lists.
    """
    tensors = _tensors(state)
    layout, chunks, offset = [], [], 0
    for name, arr in tensors:
        data = np.ascontiguousarray(arr, dtype="<f8").tobytes(order="C")
        layout.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(data)})
        chunks.append(data)
        offset += len(data)
    payload = b"".join(chunks)
    header = {
        "format": "quadnet-checkpoint",
        "version": CKPT_VERSION,
        "dtype": "<f8",
        "order": "C",
        "dims": list(state.params.dims),
        "seed": state.seed,
        "epoch": state.epoch,
        "step": state.step,
        "degenerate_skipped": state.degenerate_skipped,
        "history": [h.to_dict() for h in state.history],
        "meta": state.meta,
        "tensors": layout,
        "payload_bytes": len(payload),
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(CKPT_MAGIC, CKPT_VERSION, len(hbytes)))
        fh.write(hbytes)
        fh.write(payload)


def load_checkpoint(path: str | Path, expected_dims: tuple[int, int, int] | None = None) -> TrainState:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"{path}: cannot read checkpoint ({exc})") from exc
    if len(blob) < _PREFIX.size:
        raise CheckpointError(f"{path}: corrupt checkpoint (truncated prefix)")
    magic, version, hlen = _PREFIX.unpack_from(blob)
    if magic != CKPT_MAGIC:
        raise CheckpointError(f"{path}: not a quadnet checkpoint")
    if version != CKPT_VERSION:
        raise CheckpointError(f"{path}: checkpoint version {version}, expected {CKPT_VERSION}")
    start = _PREFIX.size
    try:
        header = json.loads(blob[start:start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt checkpoint header ({exc})") from exc
    payload = blob[start + hlen:]
    if len(payload) != header["payload_bytes"]:
        raise CheckpointError(
            f"{path}: corrupt checkpoint (payload {len(payload)} bytes, expected {header['payload_bytes']})"
        )
    if hashlib.sha256(payload).hexdigest() != header["payload_sha256"]:
        raise CheckpointError(f"{path}: corrupt checkpoint (checksum mismatch)")

    arrays = {}
    for t in header["tensors"]:
        raw = payload[t["offset"]:t["offset"] + t["nbytes"]]
        arrays[t["name"]] = np.frombuffer(raw, dtype="<f8").reshape(t["shape"]).astype(np.float64)

    def group(prefix):
        keys = [f"{prefix}.{k}" for k in ProjectionParams.NAMES]
        if not all(k in arrays for k in keys):
            return None
        return ProjectionParams(*(arrays[k] for k in keys))

    params = group("params")
    if params is None:
        raise CheckpointError(f"{path}: checkpoint has no parameter tensors")
    if tuple(header["dims"]) != params.dims:
        raise CheckpointError(f"{path}: header dims {header['dims']} disagree with tensors {params.dims}")
    if expected_dims is not None and tuple(expected_dims) != params.dims:
        raise CheckpointError(f"{path}: dimension mismatch, checkpoint {params.dims} vs expected {tuple(expected_dims)}")
    return TrainState(
        params=params,
        m=group("adam_m"),
        v=group("adam_v"),
        step=header["step"],
        epoch=header["epoch"],
        history=[LossBreakdown(**h) for h in header["history"]],
        seed=header["seed"],
        degenerate_skipped=header["degenerate_skipped"],
        meta=header["meta"],
    )


def with_loss(config: TrainConfig, **changes) -> TrainConfig:
    return replace(config, loss=replace(config.loss, **changes))
