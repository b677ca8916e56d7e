#!/usr/bin/env python3
# Copyright (C) 2026 The mivae Authors
# SPDX-License-Identifier: Apache-2.0
"""Convert the per-digit JSON files shipped by the npm `mnist` package into
IDX image/label files.

The package stores 784 floats per image in [0, 1], rounded to three decimals;
bytes are recovered as round(255 * v). Samples are interleaved with a fixed
permutation so any prefix is class balanced.

    npm pack mnist && tar xzf mnist-1.1.0.tgz
    python3 tools/mnist_json_to_idx.py package/src/digits $MIVAE_DATA_DIR
"""
import argparse
import json
import random
import struct
from pathlib import Path


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits_dir", type=Path)
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    samples = []
    for label in range(10):
        values = json.loads((args.digits_dir / f"{label}.json").read_text())["data"]
        assert len(values) % 784 == 0
        for i in range(len(values) // 784):
            px = bytes(min(255, max(0, round(v * 255))) for v in values[i * 784:(i + 1) * 784])
            samples.append((px, label))

    random.Random(args.seed).shuffle(samples)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    n = len(samples)
    with open(args.out_dir / "mnist10k-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        for px, _ in samples:
            f.write(px)
    with open(args.out_dir / "mnist10k-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(bytes(label for _, label in samples))
    print(f"wrote {n} samples to {args.out_dir}")


if __name__ == "__main__":
    main()
