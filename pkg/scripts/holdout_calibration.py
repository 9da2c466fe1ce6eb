"""Score a holdout split as if it were synthetic data.

Splits a mixed-type fixture in half, evaluates the holdout half against the
training half and prints each metric next to its holdout reference.

    python3 scripts/holdout_calibration.py --rows 10000 --seeds 0 1 2
"""

import argparse
import json

from synqa.evaluate import report
from synqa.fixtures import mixed_dataset, split


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=10_000)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--json", action="store_true", help="print full metrics documents")
    args = ap.parse_args()

    for seed in args.seeds:
        trn, hol = split(mixed_dataset(args.rows, seed=seed), 0.5, seed=seed)
        doc = report(hol.with_name("syn"), trn, hol, seed=seed).metrics.to_dict()
        if args.json:
            print(json.dumps(doc, indent=2))
            continue
        acc, sim, dist = doc["accuracy"], doc["similarity"], doc["distances"]
        print(
            f"seed {seed}: overall {acc['overall']} (max {acc['overall_max']}), "
            f"auc {sim['discriminator_auc_training_synthetic']}, "
            f"dcr trn/hol {dist['dcr_training']}/{dist['dcr_holdout']}, dcr_share {dist['dcr_share']}"
        )


if __name__ == "__main__":
    main()
