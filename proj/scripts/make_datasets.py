#!/usr/bin/env python3
"""Regenerates the bundled datasets under data/ from scikit-learn's packaged copies.

iris.csv: Fisher's Iris with a header and species names.
digits-idx/: the 8x8 UCI handwritten digits upsampled to 28x28 and written in
IDX format (MNIST layout), used when real MNIST files are not available.
"""
import gzip
import os
import struct

import numpy as np
from sklearn import datasets

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")


def write_iris():
    iris = datasets.load_iris()
    names = ["sepal_length", "sepal_width", "petal_length", "petal_width", "species"]
    with open(os.path.join(ROOT, "iris.csv"), "w") as f:
        f.write(",".join(names) + "\n")
        for row, label in zip(iris.data, iris.target):
            f.write(",".join(f"{v:.1f}" for v in row) + "," + iris.target_names[label] + "\n")


def upsample(img8):
    # bilinear resample 8x8 (values 0..16) onto a 20x20 box centred in 28x28, as MNIST does
    src = np.linspace(0, 7, 20)
    out = np.zeros((28, 28))
    for r, y in enumerate(src):
        y0 = int(np.floor(y)); y1 = min(y0 + 1, 7); fy = y - y0
        for c, x in enumerate(src):
            x0 = int(np.floor(x)); x1 = min(x0 + 1, 7); fx = x - x0
            v = (img8[y0, x0] * (1 - fy) * (1 - fx) + img8[y0, x1] * (1 - fy) * fx
                 + img8[y1, x0] * fy * (1 - fx) + img8[y1, x1] * fy * fx)
            out[r + 4, c + 4] = v
    return np.clip(np.rint(out * 255.0 / 16.0), 0, 255).astype(np.uint8)


def write_digits():
    digits = datasets.load_digits()
    images = np.stack([upsample(im) for im in digits.images])
    labels = digits.target.astype(np.uint8)
    out = os.path.join(ROOT, "digits-idx")
    os.makedirs(out, exist_ok=True)
    with gzip.GzipFile(os.path.join(out, "train-images-idx3-ubyte.gz"), "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        f.write(images.tobytes())
    with gzip.GzipFile(os.path.join(out, "train-labels-idx1-ubyte.gz"), "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(labels.tobytes())


if __name__ == "__main__":
    write_iris()
    write_digits()
