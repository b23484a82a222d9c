#!/usr/bin/env python3
"""Render the synthetic glyph dataset to a label-directory tree of PGMs.

Usage: make_toy_dataset.py --out data/glyphs [--per-class 200] [--seed 7]
"""

import argparse

from emonet.dataset import save_dataset_dir
from emonet.glyphs import make_glyph_dataset


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory root")
    parser.add_argument("--per-class", type=int, default=200)
    parser.add_argument("--side", type=int, default=28)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    x, y = make_glyph_dataset(n_per_class=args.per_class, side=args.side,
                              seed=args.seed)
    save_dataset_dir(x, y, args.out)
    print(f"wrote {len(x)} samples under {args.out}")


if __name__ == "__main__":
    main()
