#!/usr/bin/env python3
"""Convert the digit subset shipped in the `mnist` npm package to IDX files.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/mnist_from_npm.py package data/mnist

The package stores each class as a flat list of pixel/255 values rounded to
three decimals, so round(v * 255) recovers the original bytes. Samples are
written in a fixed pseudo-random order (seed 0) so that any prefix mixes all
ten classes.
"""
import gzip
import json
import struct
import sys
from pathlib import Path

import numpy as np


def main() -> None:
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    package, out = Path(sys.argv[1]), Path(sys.argv[2])
    images, labels = [], []
    for digit in range(10):
        flat = json.loads((package / "src" / "digits" / f"{digit}.json").read_text())["data"]
        pixels = np.rint(np.asarray(flat) * 255.0).astype(np.uint8).reshape(-1, 784)
        images.append(pixels)
        labels.append(np.full(len(pixels), digit, dtype=np.uint8))
    images = np.concatenate(images)
    labels = np.concatenate(labels)
    order = np.random.default_rng(0).permutation(len(labels))
    images, labels = images[order], labels[order]

    out.mkdir(parents=True, exist_ok=True)
    with gzip.GzipFile(out / "train-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        f.write(images.tobytes())
    with gzip.GzipFile(out / "train-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(labels.tobytes())
    print(f"wrote {len(labels)} samples to {out}")


if __name__ == "__main__":
    main()
