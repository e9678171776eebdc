#!/usr/bin/env python3
"""Convert the digits bundled in the npm `mnist` package into gzipped IDX files.

The npm package (MIT license, (c) 2015 Juan Cazala) ships 10,000 MNIST digits as
JSON arrays of pixel intensities in [0, 1] rounded to three decimals. Rounding
intensity * 255 recovers the original byte exactly.

Usage: import_npm_mnist.py <extracted npm package dir> <output dir> [train_fraction]

Each digit class is split train/test by `train_fraction` (default 0.8) and the
resulting sets are interleaved round-robin across classes so every prefix is
close to class balanced.
"""
import gzip
import json
import os
import struct
import sys


def write_idx_images(path, images):
    with gzip.GzipFile(path, "wb", compresslevel=9, mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_idx_labels(path, labels):
    with gzip.GzipFile(path, "wb", compresslevel=9, mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def interleave(per_class):
    out = []
    longest = max(len(v) for v in per_class)
    for i in range(longest):
        for d, items in enumerate(per_class):
            if i < len(items):
                out.append((items[i], d))
    return out


def main():
    if len(sys.argv) < 3:
        print(__doc__)
        return 2
    src, dst = sys.argv[1], sys.argv[2]
    frac = float(sys.argv[3]) if len(sys.argv) > 3 else 0.8
    train, test = [], []
    for d in range(10):
        with open(os.path.join(src, "src", "digits", f"{d}.json")) as f:
            flat = json.load(f)["data"]
        n = len(flat) // 784
        imgs = [[int(round(v * 255)) for v in flat[i * 784:(i + 1) * 784]] for i in range(n)]
        cut = int(round(n * frac))
        train.append(imgs[:cut])
        test.append(imgs[cut:])
    os.makedirs(dst, exist_ok=True)
    for name, split in (("train", train), ("t10k", test)):
        pairs = interleave(split)
        write_idx_images(os.path.join(dst, f"{name}-images-idx3-ubyte.gz"), [p[0] for p in pairs])
        write_idx_labels(os.path.join(dst, f"{name}-labels-idx1-ubyte.gz"), [p[1] for p in pairs])
        print(name, len(pairs))
    return 0


if __name__ == "__main__":
    sys.exit(main())
