"""Text feature vectors for catalog items.

Two sources are supported: precomputed vectors read from a file (one line per
item: id, a tab, then space-separated reals), and a built-in signed feature
hashing of title tokens. Loaded vectors are passed through unchanged; hashed
vectors are scaled to unit norm.
"""

from __future__ import annotations

import hashlib
import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from quadnet.catalog import Catalog
from quadnet.errors import DataError

log = logging.getLogger(__name__)

DEFAULT_DIM = 512

_WORD = re.compile(r"\w+")


class FeatureStore:
    """Read-only mapping from item id to a fixed-dimension feature vector."""

    def __init__(self, ids: list[str], matrix: np.ndarray, meta: dict | None = None):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(ids):
            raise DataError("feature matrix must be 2-D with one row per id")
        self._index = {item_id: i for i, item_id in enumerate(ids)}
        if len(self._index) != len(ids):
            raise DataError("duplicate ids in feature store")
        self.ids = list(ids)
        self.matrix = matrix
        self.matrix.setflags(write=False)
        self.meta = dict(meta or {})
        self.missing: list[str] = []
        self.empty: list[str] = []

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, item_id: object) -> bool:
        return item_id in self._index

    def get(self, item_id: str) -> np.ndarray:
        try:
            return self.matrix[self._index[item_id]]
        except KeyError:
            raise DataError(f"no feature vector for item id {item_id!r}") from None

    def rows(self, item_ids: Iterable[str]) -> np.ndarray:
        """Stack vectors for ``item_ids`` into an ``(n, dim)`` array."""
        try:
            idx = [self._index[i] for i in item_ids]
        except KeyError as exc:
            raise DataError(f"no feature vector for item id {exc.args[0]!r}") from None
        return self.matrix[idx]

    def require(self, item_ids: Iterable[str]) -> None:
        """Fail up front, naming the first id that has no vector."""
        for item_id in item_ids:
            if item_id not in self._index:
                raise DataError(f"no feature vector for item id {item_id!r}")


def get(store: FeatureStore, item_id: str) -> np.ndarray:
    return store.get(item_id)


def load_vectors(path: str | Path, catalog: Catalog | None = None) -> FeatureStore:
    """Read a vector file.

    Mixed dimensions and non-finite entries are fatal. Catalog items absent
    from the file are listed on ``store.missing``.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: cannot read vectors ({exc})") from exc

    ids: list[str] = []
    rows: list[list[float]] = []
    dim = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        item_id, sep, rest = line.partition("\t")
        item_id = item_id.strip()
        if not sep or not item_id:
            raise DataError(f"{path}:{lineno}: expected '<id>\\t<values>'")
        try:
            values = [float(tok) for tok in rest.split()]
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: bad number ({exc})") from exc
        if not all(math.isfinite(v) for v in values):
            raise DataError(f"{path}:{lineno}: non-finite entry for item {item_id!r}")
        if dim is None:
            dim = len(values)
            if dim == 0:
                raise DataError(f"{path}:{lineno}: empty vector for item {item_id!r}")
        elif len(values) != dim:
            raise DataError(
                f"{path}:{lineno}: dimension mismatch for item {item_id!r} "
                f"({len(values)} != {dim})"
            )
        ids.append(item_id)
        rows.append(values)

    if dim is None:
        raise DataError(f"{path}: no vectors")
    store = FeatureStore(ids, np.array(rows, dtype=np.float64), meta={"kind": "vectors", "path": str(path)})
    if catalog is not None:
        store.missing = [i for i in catalog.ids if i not in store]
        if store.missing:
            log.warning("%s: %d catalog items have no vector", path, len(store.missing))
    return store


def write_vectors(store: FeatureStore, path: str | Path) -> None:
    # repr() round-trips float64 exactly
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for item_id, row in zip(store.ids, store.matrix):
            fh.write(item_id + "\t" + " ".join(repr(float(v)) for v in row) + "\n")


@dataclass(frozen=True)
class HashConfig:
    dim: int = DEFAULT_DIM
    seed: int = 0
    word_ngrams: tuple[int, ...] = (1,)
    char_ngrams: tuple[int, ...] = (3,)


def tokenize(title: str, config: HashConfig) -> list[str]:
    """Word n-grams and character n-grams of the lowercased title.

    Tokens are prefixed by kind so that a word and a character gram with the
    same spelling land in different buckets.
    """
    text = " ".join(title.lower().split())
    words = _WORD.findall(text)
    tokens = []
    for n in config.word_ngrams:
        tokens += ["w%d:%s" % (n, " ".join(words[i:i + n])) for i in range(len(words) - n + 1)]
    for n in config.char_ngrams:
        tokens += ["c%d:%s" % (n, text[i:i + n]) for i in range(len(text) - n + 1)]
    return tokens


def _bucket(token: str, key: bytes, dim: int) -> tuple[int, float]:
    h = int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=key).digest(), "little")
    sign = -1.0 if h >> 63 else 1.0
    return (h & 0x7FFF_FFFF_FFFF_FFFF) % dim, sign


def hash_vector(title: str, config: HashConfig) -> np.ndarray:
    key = config.seed.to_bytes(8, "little", signed=True)
    vec = np.zeros(config.dim)
    for tok in tokenize(title, config):
        idx, sign = _bucket(tok, key, config.dim)
        vec[idx] += sign
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


def hash_featurize(catalog: Catalog, dim: int = DEFAULT_DIM, seed: int = 0,
                   config: HashConfig | None = None) -> FeatureStore:
    """Signed feature hashing of item titles, scaled to unit norm.

    Items whose token set hashes to the zero vector keep the zero vector and
    are listed on ``store.empty``.
    """
    if config is None:
        config = HashConfig(dim=dim, seed=seed)
    if config.dim < 8:
        raise DataError(f"hash dimension must be at least 8, got {config.dim}")
    ids = catalog.ids
    matrix = np.zeros((len(ids), config.dim))
    empty = []
    for row, item_id in enumerate(ids):
        matrix[row] = hash_vector(catalog[item_id].title, config)
        if not matrix[row].any():
            empty.append(item_id)
    meta = {"kind": "hash", "dim": config.dim, "seed": config.seed,
            "word_ngrams": list(config.word_ngrams), "char_ngrams": list(config.char_ngrams)}
    store = FeatureStore(ids, matrix, meta=meta)
    store.empty = empty
    if empty:
        log.warning("%d items hashed to the zero vector", len(empty))
    return store
