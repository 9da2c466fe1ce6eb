"""Fidelity/novelty tradeoff under flipK perturbation of a training fixture.

Each cell is replaced, with probability K%, by the same column's value in a
random record. Prints overall accuracy and mean DCR per K.

    python3 scripts/flipk_experiment.py --rows 3000 --ks 0 5 20 50 90
"""

import argparse

from synqa.evaluate import report
from synqa.fixtures import flip_k, mixed_dataset, split


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=3000)
    ap.add_argument("--ks", type=float, nargs="+", default=[0, 5, 20, 50, 90])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--holdout", action="store_true", help="also split off a holdout and report dcr_share")
    args = ap.parse_args()

    data = mixed_dataset(args.rows * (2 if args.holdout else 1), seed=args.seed)
    trn, hol = split(data, 0.5, seed=args.seed) if args.holdout else (data, None)
    print(f"{'K':>5} {'overall':>9} {'overall_max':>12} {'dcr_training':>13} {'dcr_share':>10} {'ims_training':>13}")
    for k in args.ks:
        m = report(flip_k(trn, k, seed=args.seed + 1), trn, hol, seed=args.seed).metrics
        share = m.distances["dcr_share"]
        print(
            f"{k:>5g} {m.accuracy['overall']:>9.4f} {m.accuracy['overall_max']:>12.4f} "
            f"{m.distances['dcr_training']:>13.4f} {'-' if share is None else f'{share:.4f}':>10} "
            f"{m.distances['ims_training']:>13.4f}"
        )


if __name__ == "__main__":
    main()
