"""Planted synthetic catalog for offline benchmarks.

Each category owns a pool of made-up words and titles are drawn mostly from
that pool, so same-category items share tokens. Categories are paired by a
complement map and co-purchase edges link items across each pair. A few
same-category edges are mixed in; pair building is expected to drop them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from quadnet.catalog import CoPurchaseEdge, Item

_ONSETS = list("bdfgklmnprstvz") + ["br", "st", "tr", "pl", "gr", "sh", "ch"]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ou", "ea"]
FILLERS = ["classic", "new", "premium", "basic", "deluxe", "soft", "light", "slim",
           "casual", "modern", "vintage", "sport", "everyday", "pack", "set", "size"]


@dataclass
class SampleConfig:
    n_categories: int = 40
    items_per_category: int = 50
    pool_size: int = 12
    title_tokens: int = 4
    edges_per_item: int = 5
    same_category_rate: float = 0.05
    seed: int = 0


@dataclass
class Sample:
    items: list[Item]
    edges: list[CoPurchaseEdge]
    complement: dict[str, str]


def _word(rng: np.random.Generator) -> str:
    n = int(rng.integers(2, 4))
    return "".join(_ONSETS[rng.integers(len(_ONSETS))] + _VOWELS[rng.integers(len(_VOWELS))]
                   for _ in range(n))


def make_sample(config: SampleConfig | None = None) -> Sample:
    cfg = config or SampleConfig()
    if cfg.n_categories < 2 or cfg.n_categories % 2:
        raise ValueError("n_categories must be an even number >= 2")
    rng = np.random.default_rng(cfg.seed)
    categories = [f"cat{k:02d}" for k in range(cfg.n_categories)]

    used = set(FILLERS)
    pools = {}
    for cat in categories:
        pool = []
        while len(pool) < cfg.pool_size:
            w = _word(rng)
            if w not in used:
                used.add(w)
                pool.append(w)
        pools[cat] = pool

    perm = rng.permutation(cfg.n_categories)
    complement = {}
    for i in range(0, len(perm), 2):
        x, y = categories[perm[i]], categories[perm[i + 1]]
        complement[x], complement[y] = y, x

    items = []
    members: dict[str, list[str]] = {}
    for ci, cat in enumerate(categories):
        for j in range(cfg.items_per_category):
            words = list(rng.choice(pools[cat], size=cfg.title_tokens, replace=False))
            words.insert(int(rng.integers(len(words) + 1)), FILLERS[rng.integers(len(FILLERS))])
            item = Item(f"c{ci:02d}-i{j:03d}", " ".join(words), cat)
            items.append(item)
            members.setdefault(cat, []).append(item.id)

    edges = []
    for item in items:
        partners = members[complement[item.category]]
        for _ in range(cfg.edges_per_item):
            edges.append(CoPurchaseEdge(item.id, partners[rng.integers(len(partners))]))
        if rng.random() < cfg.same_category_rate:
            own = members[item.category]
            other = own[rng.integers(len(own))]
            if other != item.id:
                edges.append(CoPurchaseEdge(item.id, other))
    return Sample(items, edges, complement)
