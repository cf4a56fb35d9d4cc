#!/usr/bin/env python3
"""Write the 8x8 UCI optical digits set (bundled with scikit-learn) as IDX files.

The 1797 samples are shuffled with a fixed seed and split into 1297 training
and 500 test samples. Pixel values keep their native 0..16 range.
"""
import argparse
import gzip
import os
import struct

import numpy as np


def write_idx_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, images.shape[0], 8, 8))
        f.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, labels.shape[0]))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    import sklearn

    default_csv = os.path.join(os.path.dirname(sklearn.__file__), "datasets", "data", "digits.csv.gz")
    parser = argparse.ArgumentParser()
    parser.add_argument("--csv", default=default_csv)
    parser.add_argument("--out", default="data/digits")
    parser.add_argument("--test", type=int, default=500)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    with gzip.open(args.csv, "rt") as f:
        raw = np.loadtxt(f, delimiter=",", dtype=np.int64)
    images, labels = raw[:, :64], raw[:, 64]
    order = np.random.RandomState(args.seed).permutation(len(labels))
    images, labels = images[order], labels[order]
    n_train = len(labels) - args.test

    os.makedirs(args.out, exist_ok=True)
    write_idx_images(os.path.join(args.out, "train-images-idx3-ubyte"), images[:n_train])
    write_idx_labels(os.path.join(args.out, "train-labels-idx1-ubyte"), labels[:n_train])
    write_idx_images(os.path.join(args.out, "t10k-images-idx3-ubyte"), images[n_train:])
    write_idx_labels(os.path.join(args.out, "t10k-labels-idx1-ubyte"), labels[n_train:])
    print(f"wrote {n_train} train / {args.test} test samples to {args.out}")


if __name__ == "__main__":
    main()
