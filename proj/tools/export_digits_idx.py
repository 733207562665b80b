#!/usr/bin/env python3
"""Write the scikit-learn 8x8 digits as gzip-compressed IDX files.

Usage: export_digits_idx.py OUT_DIR
Produces OUT_DIR/digits-images-idx3-ubyte.gz and OUT_DIR/digits-labels-idx1-ubyte.gz.
Pixel values 0..16 are rescaled to 0..255.
"""
import gzip
import os
import struct
import sys

import numpy as np
from sklearn.datasets import load_digits


def main():
    if len(sys.argv) != 2:
        print(__doc__, file=sys.stderr)
        return 2
    out = sys.argv[1]
    os.makedirs(out, exist_ok=True)
    d = load_digits()
    images = np.rint(d.images * (255.0 / 16.0)).astype(np.uint8)
    labels = d.target.astype(np.uint8)
    n, rows, cols = images.shape
    # mtime=0 keeps the files byte-reproducible.
    with gzip.GzipFile(os.path.join(out, "digits-images-idx3-ubyte.gz"), "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, n, rows, cols))
        f.write(images.tobytes())
    with gzip.GzipFile(os.path.join(out, "digits-labels-idx1-ubyte.gz"), "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels.tobytes())
    print(f"wrote {n} images of {rows}x{cols} to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
