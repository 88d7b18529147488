#!/usr/bin/env python3
"""Window detector precision/recall on the synthetic corpus.

    python3 scripts/window_corpus_report.py --images 100 --seeds 0 1 2
"""

import argparse
import time

from planloc.synth import evaluate_window_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--images", type=int, default=100)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--iou", type=float, default=0.5)
    args = ap.parse_args()

    for seed in args.seeds:
        t0 = time.perf_counter()
        res = evaluate_window_corpus(args.images, seed=seed,
                                     iou_threshold=args.iou)
        print(f"seed {seed}: precision {res['precision']:.3f} "
              f"recall {res['recall']:.3f} "
              f"(tp {res['tp']}, fp {res['fp']}, fn {res['fn']}; "
              f"{time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
