"""Train baseline, HOG+RF and CNN on one synthetic suite and compare them on held-out terrains.

    python scripts/compare_classifiers.py --epochs 20 --out results/compare.json
"""
import argparse
import json
import logging
import time
from pathlib import Path

from traversability import generate_dataset, generate_terrain_suite
from traversability.classifier import TrainConfig, baseline_train, cnn_train, evaluate, rf_train


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n-train", type=int, default=10, help="training terrains")
    ap.add_argument("--n-eval", type=int, default=4, help="held-out terrains")
    ap.add_argument("--train-trajectories", type=int, default=400)
    ap.add_argument("--eval-trajectories", type=int, default=100)
    ap.add_argument("--epochs", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, help="write the results as JSON here")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    t0 = time.perf_counter()
    train_maps, eval_maps = generate_terrain_suite(args.n_train, args.n_eval, master_seed=args.seed)
    train = generate_dataset(train_maps, n_trajectories=args.train_trajectories, seed=args.seed + 1)
    test = generate_dataset(eval_maps, n_trajectories=args.eval_trajectories, seed=args.seed + 2)
    logging.info("train %d samples (%.3f positive), eval %d (%.3f positive)",
                 len(train), train.positive_fraction, len(test), test.positive_fraction)

    results = {"train_samples": len(train), "eval_samples": len(test),
               "train_positive_fraction": train.positive_fraction,
               "eval_positive_fraction": test.positive_fraction, "models": {}}
    fitters = {
        "baseline": lambda: baseline_train(train),
        "rf": lambda: rf_train(train, seed=args.seed),
        "cnn": lambda: cnn_train(train, TrainConfig(epochs=args.epochs, seed=args.seed)),
    }
    for name, fit in fitters.items():
        t = time.perf_counter()
        model = fit()
        fit_s = time.perf_counter() - t
        report = evaluate(model, test)
        results["models"][name] = {**report.to_dict(), "fit_seconds": fit_s}
        logging.info("%-8s ACC %.3f  AUC %s  (%.0f s)", name, report.accuracy,
                     "n/a" if report.auc is None else f"{report.auc:.3f}", fit_s)
    results["total_seconds"] = time.perf_counter() - t0
    text = json.dumps(results, indent=2, sort_keys=True)
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text + "\n")
    print(text)


if __name__ == "__main__":
    main()
