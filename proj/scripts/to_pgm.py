#!/usr/bin/env python3
"""Convert images (JPEG, PNG, TIFF, ...) to binary PGM for lipkey.

Color inputs use the same integer weighting as lipkey's to_gray:
round_half_up(0.30 R + 0.59 G + 0.11 B).

    scripts/to_pgm.py photo.jpg out.pgm
    scripts/to_pgm.py --out-dir pgm/ faces/*.tiff
"""

import argparse
import sys
from pathlib import Path

import numpy as np
from PIL import Image


def to_gray(img: Image.Image) -> Image.Image:
    if img.mode in ("L", "I;16", "I", "F"):
        arr = np.asarray(img.convert("F"))
        if img.mode != "L" and arr.max() > 255:
            arr = arr * (255.0 / arr.max())
        return Image.fromarray(np.clip(np.rint(arr), 0, 255).astype(np.uint8), "L")
    rgb = np.asarray(img.convert("RGB"), dtype=np.int32)
    scaled = 30 * rgb[..., 0] + 59 * rgb[..., 1] + 11 * rgb[..., 2]
    gray = np.minimum(255, (scaled + 50) // 100).astype(np.uint8)
    return Image.fromarray(gray, "L")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("inputs", nargs="+", type=Path)
    ap.add_argument("--out-dir", type=Path, help="write <stem>.pgm files here")
    args = ap.parse_args()

    if args.out_dir is None:
        if len(args.inputs) != 2:
            ap.error("give INPUT OUTPUT, or --out-dir with any number of inputs")
        pairs = [(args.inputs[0], args.inputs[1])]
    else:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        pairs = [(p, args.out_dir / (p.stem + ".pgm")) for p in args.inputs]

    for src, dst in pairs:
        with Image.open(src) as img:
            to_gray(img).save(dst, format="PPM")
    return 0


if __name__ == "__main__":
    sys.exit(main())
