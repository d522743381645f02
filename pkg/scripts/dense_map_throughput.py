"""Time dense oriented-map evaluation on one synthetic terrain.

Uses a trained model file if given, otherwise a freshly initialized CNN (the
cost of inference does not depend on the weights).

    python scripts/dense_map_throughput.py --size-px 256 --overlay results/overlay.png
"""
import argparse
import json
from pathlib import Path

from traversability.classifier import CnnClassifier, load_model
from traversability.classifier.cnn import CnnModel
from traversability.terraingen import SuiteRanges, generate_terrain_suite
from traversability.travmap import (
    build_oriented_map,
    evaluations_per_square_meter,
    min_over_orientations,
    render_overlay,
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--model", type=Path, help="model.tvm to evaluate")
    ap.add_argument("--size-px", type=int, default=256)
    ap.add_argument("--stride-px", type=int, default=5)
    ap.add_argument("--orientations", type=int, default=32)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--overlay", type=Path, help="also render the minimum-over-orientations overlay here")
    args = ap.parse_args()

    _, (hm,) = generate_terrain_suite(1, 1, master_seed=args.seed, ranges=SuiteRanges(size_px=args.size_px))
    model = load_model(args.model) if args.model else CnnClassifier(CnnModel.init(args.seed))
    m = build_oriented_map(hm, model, args.stride_px, args.orientations)
    per_m2 = evaluations_per_square_meter(args.stride_px * hm.resolution, args.orientations)
    stats = dict(m.stats, patches_per_m2=per_m2, seconds_per_m2=per_m2 / m.stats["patches_per_second"])
    if args.overlay:
        args.overlay.parent.mkdir(parents=True, exist_ok=True)
        render_overlay(hm, min_over_orientations(m), args.overlay, args.stride_px)
    print(json.dumps(stats, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
