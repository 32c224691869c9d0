"""Command line entry point: ``quadnet <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Options may also come from ``--config FILE.json``; explicit flags win. The
config may hold flat keys (option names with dashes or underscores) and/or a
section per subcommand, e.g. ``{"seed": 3, "train": {"epochs": 5}}``.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from quadnet.catalog import Catalog, load_catalog, load_edges_with_stats, write_catalog, write_edges
from quadnet.errors import DataError, QuadnetError
from quadnet.evaluation import emit_histograms, evaluate
from quadnet.featurizer import FeatureStore, HashConfig, hash_featurize, load_vectors, write_vectors
from quadnet.loss import MODES, LossConfig
from quadnet.quadgen import GenStats, generate, read_quads, split_by_anchor, write_split
from quadnet.retrieve import build_index, query_complementary, query_similar
from quadnet.sample import SampleConfig, make_sample
from quadnet.trainer import TrainConfig, load_checkpoint, save_checkpoint, train

log = logging.getLogger("quadnet")

EXIT_USAGE = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="JSON file with option defaults")
    p.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    p.add_argument("--threads", type=int, default=None, help="cap BLAS worker threads")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _features(p: argparse.ArgumentParser, required_catalog: bool) -> None:
    p.add_argument("--catalog", type=Path, required=required_catalog, help="catalog .tsv or .jsonl")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--vectors", type=Path, help="precomputed vector file")
    g.add_argument("--hash-dim", type=int, help="hashed title features of this size")
    p.add_argument("--hash-seed", type=int, help="hash key (default: --seed)")


def _margins(p: argparse.ArgumentParser, defaults: bool) -> None:
    d = LossConfig() if defaults else None
    p.add_argument("--m-s", type=float, default=d and d.m_s)
    p.add_argument("--m-c", type=float, default=d and d.m_c)
    p.add_argument("--m-n", type=float, default=d and d.m_n)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="quadnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = [_common()]

    p = sub.add_parser("gen-sample", parents=common, help="write the planted synthetic dataset")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--format", choices=("tsv", "jsonl"), default="tsv")
    p.add_argument("--categories", type=int, default=SampleConfig.n_categories)
    p.add_argument("--items-per-category", type=int, default=SampleConfig.items_per_category)
    p.add_argument("--edges-per-item", type=int, default=SampleConfig.edges_per_item)

    p = sub.add_parser("gen-quads", parents=common, help="build and split quadruplets")
    p.add_argument("--catalog", type=Path, required=True)
    p.add_argument("--edges", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--train-fraction", type=float, default=0.9)
    p.add_argument("--similars-per-pair", type=int, default=1)

    p = sub.add_parser("featurize", parents=common, help="write hashed title vectors")
    p.add_argument("--catalog", type=Path, required=True)
    p.add_argument("--hash-dim", type=int, default=512)
    p.add_argument("--hash-seed", type=int)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("train", parents=common, help="train the projection")
    p.add_argument("--quads", type=Path, required=True, help="training quadruplet file")
    _features(p, required_catalog=False)
    p.add_argument("--out", type=Path, required=True, help="checkpoint path")
    p.add_argument("--log", type=Path, help="JSON-lines epoch log (default: <out>.log.jsonl)")
    p.add_argument("--mode", choices=MODES, default="quadruplet")
    _margins(p, defaults=True)
    p.add_argument("--lam", type=float, default=LossConfig.lam, help="L2 weight")
    p.add_argument("--triplet-margin", type=float, default=LossConfig.triplet_margin)
    p.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    p.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)
    p.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    p.add_argument("--optimizer", choices=("adam", "sgd"), default=TrainConfig.optimizer)
    p.add_argument("--hidden", type=int, default=TrainConfig.hidden)
    p.add_argument("--out-dim", type=int, default=TrainConfig.out_dim)

    p = sub.add_parser("eval", parents=common, help="evaluate a checkpoint on quadruplets")
    p.add_argument("--quads", type=Path, required=True)
    p.add_argument("--ckpt", type=Path, required=True)
    _features(p, required_catalog=False)
    _margins(p, defaults=False)
    p.add_argument("--out", type=Path, required=True, help="report JSON")
    p.add_argument("--hist", type=Path, help="histogram CSV")

    p = sub.add_parser("recommend", parents=common, help="similar and complementary items for an anchor")
    p.add_argument("--ckpt", type=Path, required=True)
    _features(p, required_catalog=True)
    _margins(p, defaults=False)
    p.add_argument("--anchor", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--no-category-filter", dest="category_filter", action="store_false")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        cfg = json.loads(args.config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"{args.config}: cannot read config ({exc})") from exc
    if not isinstance(cfg, dict):
        raise UsageError(f"{args.config}: config must be a JSON object")
    section = cfg.pop(args.command, {})
    flat = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
    merged = {k.replace("-", "_"): v for k, v in {**flat, **section}.items()}
    known = vars(args)
    unknown = sorted(set(merged) - set(known))
    if unknown:
        raise UsageError(f"{args.config}: unknown option(s) {', '.join(unknown)}")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    for k, v in merged.items():
        if isinstance(sub.get_default(k), Path) or k in _PATH_KEYS:
            v = Path(v) if v is not None else None
        sub.set_defaults(**{k: v})
    return parser.parse_args(argv)


_PATH_KEYS = {"catalog", "edges", "out", "quads", "vectors", "ckpt", "hist", "log"}


# --- subcommands -----------------------------------------------------------

def _store(args, catalog: Catalog | None, meta: dict | None = None) -> FeatureStore:
    if args.vectors is not None:
        return load_vectors(args.vectors, catalog)
    if args.hash_dim is None and meta and meta.get("kind") == "vectors":
        return load_vectors(meta["path"], catalog)
    if catalog is None:
        raise UsageError("hashed features need --catalog")
    if args.hash_dim is not None:
        seed = args.hash_seed if args.hash_seed is not None else args.seed
        return hash_featurize(catalog, config=HashConfig(dim=args.hash_dim, seed=seed))
    if meta and meta.get("kind") == "hash":
        return hash_featurize(catalog, config=HashConfig(
            dim=meta["dim"], seed=meta["seed"],
            word_ngrams=tuple(meta["word_ngrams"]), char_ngrams=tuple(meta["char_ngrams"])))
    seed = args.hash_seed if args.hash_seed is not None else args.seed
    return hash_featurize(catalog, config=HashConfig(seed=seed))


def _loss_config(args, base: dict | None = None) -> LossConfig:
    fields = dict(base or {})
    for name in ("m_s", "m_c", "m_n"):
        if getattr(args, name, None) is not None:
            fields[name] = getattr(args, name)
    try:
        return LossConfig(**fields)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_gen_sample(args) -> None:
    cfg = SampleConfig(n_categories=args.categories, items_per_category=args.items_per_category,
                       edges_per_item=args.edges_per_item, seed=args.seed)
    try:
        sample = make_sample(cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    args.out.mkdir(parents=True, exist_ok=True)
    write_catalog(sample.items, args.out / f"catalog.{args.format}", args.format)
    write_edges(sample.edges, args.out / "edges.tsv")
    (args.out / "complement.json").write_text(json.dumps(sample.complement, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(sample.items)} items and {len(sample.edges)} edges to {args.out}")


def cmd_gen_quads(args) -> None:
    catalog = load_catalog(args.catalog)
    edges, _ = load_edges_with_stats(args.edges, catalog)
    rng = np.random.default_rng(args.seed)
    stats = GenStats()
    quads = generate(catalog, edges, rng, similars_per_pair=args.similars_per_pair, stats=stats)
    split = split_by_anchor(quads, args.train_fraction, rng)
    split.seed, split.stats = args.seed, stats
    manifest = write_split(split, args.out)
    print(json.dumps(manifest["counts"], sort_keys=True))


def cmd_featurize(args) -> None:
    catalog = load_catalog(args.catalog)
    seed = args.hash_seed if args.hash_seed is not None else args.seed
    store = hash_featurize(catalog, config=HashConfig(dim=args.hash_dim, seed=seed))
    write_vectors(store, args.out)
    print(f"wrote {len(store)} vectors of dim {store.dim} to {args.out}")


def cmd_train(args) -> None:
    try:
        loss = LossConfig(m_s=args.m_s, m_c=args.m_c, m_n=args.m_n, lam=args.lam,
                          mode=args.mode, triplet_margin=args.triplet_margin)
        config = TrainConfig(batch_size=args.batch_size, learning_rate=args.lr, epochs=args.epochs,
                             optimizer=args.optimizer, seed=args.seed, hidden=args.hidden,
                             out_dim=args.out_dim, loss=loss)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    quads = read_quads(args.quads)
    catalog = load_catalog(args.catalog) if args.catalog else None
    store = _store(args, catalog)
    log_path = args.log or args.out.with_name(args.out.name + ".log.jsonl")
    with open(log_path, "w", encoding="utf-8") as fh:
        def on_epoch(row):
            fh.write(json.dumps(row, sort_keys=True) + "\n")
            fh.flush()
            log.info("epoch %d total %.6f", row["epoch"], row["total"])
        state = train(quads, store, config, on_epoch=on_epoch)
    save_checkpoint(state, args.out)
    last = state.history[-1]
    print(f"trained {state.epoch} epochs, final loss {last.total:.6f}; checkpoint {args.out}")


def cmd_eval(args) -> None:
    state = load_checkpoint(args.ckpt)
    quads = read_quads(args.quads)
    catalog = load_catalog(args.catalog) if args.catalog else None
    store = _store(args, catalog, state.meta.get("featurizer"))
    if store.dim != state.params.dims[0]:
        raise DataError(f"feature dim {store.dim} does not match checkpoint input dim {state.params.dims[0]}")
    loss = _loss_config(args, state.meta.get("loss"))
    report = evaluate(quads, state.params, store, loss)
    args.out.write_text(report.to_json())
    if args.hist:
        emit_histograms(report, args.hist)
    print(f"ranking_acc {report.ranking_acc:.4f} sim_acc {report.sim_acc:.4f} "
          f"comp_acc {report.comp_acc:.4f} (n={report.count})")


def cmd_recommend(args) -> None:
    state = load_checkpoint(args.ckpt)
    catalog = load_catalog(args.catalog)
    store = _store(args, catalog, state.meta.get("featurizer"))
    if store.dim != state.params.dims[0]:
        raise DataError(f"feature dim {store.dim} does not match checkpoint input dim {state.params.dims[0]}")
    loss = _loss_config(args, state.meta.get("loss"))
    index = build_index(catalog, store, state.params)
    similar = query_similar(index, args.anchor, args.k)
    comp = query_complementary(index, args.anchor, args.k, loss.m_s, loss.m_c,
                               category_filter=args.category_filter)
    out = sys.stdout
    out.write("relation\trank\titem_id\tdistance\tcategory\ttitle\n")
    for relation, rows in (("similar", similar), ("complementary", comp)):
        for rank, (item_id, d) in enumerate(rows, start=1):
            item = catalog[item_id]
            out.write(f"{relation}\t{rank}\t{item_id}\t{d:.6f}\t{item.category}\t{item.title}\n")


COMMANDS = {
    "gen-sample": cmd_gen_sample,
    "gen-quads": cmd_gen_quads,
    "featurize": cmd_featurize,
    "train": cmd_train,
    "eval": cmd_eval,
    "recommend": cmd_recommend,
}


def _thread_limit(n):
    if n is None:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"quadnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with _thread_limit(args.threads):
            COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"quadnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QuadnetError as exc:
        print(f"quadnet: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
