"""Item catalog and co-purchase edge loading.

Catalog files come in two flavours:

* JSONL, one object per line with keys ``id``, ``title`` and ``category``;
* TSV, three tab-separated columns ``id``, ``title``, ``category`` and no header.

Edge files are two tab-separated columns, source id then target id. Malformed
rows are skipped and counted rather than treated as fatal.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from quadnet.errors import DataError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Item:
    id: str
    title: str
    category: str


@dataclass(frozen=True)
class CoPurchaseEdge:
    source: str
    target: str


@dataclass
class LoadStats:
    rows: int = 0
    kept: int = 0
    malformed: int = 0
    duplicates: int = 0
    self_loops: int = 0
    dangling: int = 0
    problems: list[str] = field(default_factory=list)

    def note(self, msg: str) -> None:
        # keep the first few messages only, dirty dumps can have millions
        if len(self.problems) < 20:
            self.problems.append(msg)
        log.debug(msg)


class Catalog:
    """Immutable collection of items indexed by id and by category."""

    def __init__(self, items: Iterable[Item], stats: LoadStats | None = None):
        self._items: dict[str, Item] = {}
        self._by_category: dict[str, list[str]] = {}
        self.stats = stats or LoadStats()
        for item in items:
            if item.id in self._items:
                self.stats.duplicates += 1
                continue
            self._items[item.id] = item
            self._by_category.setdefault(item.category, []).append(item.id)

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, item_id: object) -> bool:
        return item_id in self._items

    def __iter__(self):
        return iter(self._items.values())

    def __getitem__(self, item_id: str) -> Item:
        try:
            return self._items[item_id]
        except KeyError:
            raise DataError(f"unknown item id {item_id!r}") from None

    @property
    def ids(self) -> list[str]:
        return list(self._items)

    @property
    def categories(self) -> list[str]:
        return list(self._by_category)

    @property
    def by_category(self) -> dict[str, list[str]]:
        return {k: list(v) for k, v in self._by_category.items()}

    def category_of(self, item_id: str) -> str:
        return self[item_id].category

    def category_members(self, category: str) -> list[str]:
        """Internal list for a category; callers must not mutate it."""
        return self._by_category.get(category, _EMPTY)


_EMPTY: list[str] = []


def items_in_category(catalog: Catalog, category: str) -> list[str]:
    """Item ids in ``category`` in insertion order; empty for unknown labels."""
    return list(catalog.category_members(category))


def _parse_jsonl(line: str) -> tuple[str, str, str]:
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("row is not a JSON object")
    return obj["id"], obj["title"], obj["category"]


def _parse_tsv(line: str) -> tuple[str, str, str]:
    parts = line.split("\t")
    if len(parts) != 3:
        raise ValueError(f"expected 3 tab-separated columns, got {len(parts)}")
    return parts[0], parts[1], parts[2]


def _read_lines(path: Path) -> list[str]:
    try:
        return path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: cannot read catalog ({exc})") from exc


def load_catalog(path: str | Path, format: str | None = None) -> Catalog:
    """Load a catalog file.

    ``format`` is ``"jsonl"`` or ``"tsv"``; when omitted it is inferred from
    the file suffix (``.jsonl``/``.json`` mean JSONL, anything else TSV).
    Duplicate ids keep their first occurrence. A file with no valid rows is
    an error.
    """
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix in (".jsonl", ".json") else "tsv"
    if format not in ("jsonl", "tsv"):
        raise DataError(f"unknown catalog format {format!r}")
    parse = _parse_jsonl if format == "jsonl" else _parse_tsv

    stats = LoadStats()
    items = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        stats.rows += 1
        try:
            raw_id, title, category = parse(line)
            if not all(isinstance(v, str) for v in (raw_id, title, category)):
                raise ValueError("id, title and category must be strings")
            item_id, title, category = raw_id.strip(), title.strip(), category.strip()
            if not item_id or not title or not category:
                raise ValueError("empty id, title or category")
        except (ValueError, KeyError) as exc:
            stats.malformed += 1
            stats.note(f"{path}:{lineno}: skipped malformed row ({exc})")
            continue
        items.append(Item(item_id, title, category))

    catalog = Catalog(items, stats)
    stats.kept = len(catalog)
    if not len(catalog):
        raise DataError(f"{path}: zero valid rows")
    if stats.malformed or stats.duplicates:
        log.warning(
            "%s: %d items kept, %d malformed rows, %d duplicate ids",
            path, stats.kept, stats.malformed, stats.duplicates,
        )
    return catalog


def load_edges(path: str | Path, catalog: Catalog) -> list[CoPurchaseEdge]:
    """Load a co-purchase edge list, dropping self-loops and dangling edges.

    Duplicate edges are kept here; pair building deduplicates them. Use
    :func:`load_edges_with_stats` to also get the skip counters.
    """
    return load_edges_with_stats(path, catalog)[0]


def load_edges_with_stats(path: str | Path, catalog: Catalog) -> tuple[list[CoPurchaseEdge], LoadStats]:
    path = Path(path)
    stats = LoadStats()
    edges = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        stats.rows += 1
        parts = [p.strip() for p in line.split("\t")]
        if len(parts) != 2 or not parts[0] or not parts[1]:
            stats.malformed += 1
            stats.note(f"{path}:{lineno}: skipped malformed edge line")
            continue
        source, target = parts
        if source == target:
            stats.self_loops += 1
            continue
        if source not in catalog or target not in catalog:
            stats.dangling += 1
            missing = source if source not in catalog else target
            stats.note(f"{path}:{lineno}: dropped edge, unknown id {missing!r}")
            continue
        edges.append(CoPurchaseEdge(source, target))
    stats.kept = len(edges)
    if stats.malformed or stats.self_loops or stats.dangling:
        log.warning(
            "%s: %d edges kept, %d malformed, %d self-loops, %d dangling",
            path, stats.kept, stats.malformed, stats.self_loops, stats.dangling,
        )
    return edges, stats


def write_catalog(catalog: Iterable[Item], path: str | Path, format: str | None = None) -> None:
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix in (".jsonl", ".json") else "tsv"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for item in catalog:
            if format == "jsonl":
                row = {"id": item.id, "title": item.title, "category": item.category}
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")
            else:
                fh.write(f"{item.id}\t{item.title}\t{item.category}\n")


def write_edges(edges: Iterable[CoPurchaseEdge], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in edges:
            fh.write(f"{e.source}\t{e.target}\n")
