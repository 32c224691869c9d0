"""Planted-benchmark experiment: quadruplet vs triplet vs untrained.

Prints ranking / similarity / complementary accuracy for each model and the
mean/std of anchor distances before and after training, then writes the
distance histograms as CSV for plotting.

    python scripts/run_benchmark.py --out runs/bench --seed 0
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np

from quadnet.catalog import Catalog
from quadnet.evaluation import emit_histograms, evaluate
from quadnet.featurizer import hash_featurize
from quadnet.projector import init_params
from quadnet.quadgen import generate, split_by_anchor
from quadnet.sample import SampleConfig, make_sample
from quadnet.trainer import TrainConfig, save_checkpoint, train, with_loss


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("runs/bench"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--categories", type=int, default=40)
    ap.add_argument("--items-per-category", type=int, default=50)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    sample = make_sample(SampleConfig(n_categories=args.categories,
                                      items_per_category=args.items_per_category, seed=args.seed))
    catalog = Catalog(sample.items)
    rng = np.random.default_rng(args.seed)
    split = split_by_anchor(generate(catalog, sample.edges, rng), 0.9, rng)
    store = hash_featurize(catalog, dim=512, seed=args.seed)
    config = TrainConfig(epochs=args.epochs, seed=args.seed)
    print(f"{len(catalog)} items, {len(split.train)} train / {len(split.test)} test quadruplets")

    untrained = init_params((store.dim, config.hidden, config.out_dim), np.random.default_rng(args.seed))
    models = {"untrained": untrained}
    for mode in ("quadruplet", "triplet"):
        t0 = time.perf_counter()
        state = train(split.train, store, with_loss(config, mode=mode))
        print(f"{mode}: {args.epochs} epochs in {time.perf_counter() - t0:.1f}s, "
              f"loss {state.history[0].total:.4f} -> {state.history[-1].total:.4f}")
        save_checkpoint(state, args.out / f"{mode}.ckpt")
        models[mode] = state.params

    print(f"\n{'model':<12}{'split':<7}{'ranking':>9}{'sim':>7}{'comp':>7}"
          f"{'d_as':>16}{'d_ac':>16}{'d_an':>16}")
    summary = {}
    for name, params in models.items():
        for side in ("train", "test"):
            r = evaluate(getattr(split, side), params, store, config.loss)
            summary[f"{name}/{side}"] = r.to_dict()
            st = r.dist_stats
            cells = "".join(f"{st[k]['mean']:>9.3f}±{st[k]['std_dev']:.3f}"
                            for k in ("similar", "complementary", "negative"))
            print(f"{name:<12}{side:<7}{r.ranking_acc:>9.4f}{r.sim_acc:>7.3f}{r.comp_acc:>7.3f}{cells}")
            if side == "test":
                emit_histograms(r, args.out / f"hist_{name}.csv")
    (args.out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"\nwrote checkpoints, histograms and summary.json to {args.out}")


if __name__ == "__main__":
    main()
