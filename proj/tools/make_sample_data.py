#!/usr/bin/env python3
"""Regenerate the tiny sample dataset under data/.

Synthetic grayscale scenes: a brightness gradient plus a few Gaussian
blobs and a bar or two, enough structure for the toy configs to learn
from. Deterministic; writes binary 8-bit PGM.
"""

import pathlib

import numpy as np


def scene(h, w, seed):
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:h, 0:w].astype(np.float64)
    img = 0.2 + 0.5 * rng.random() + (rng.random() - 0.5) * 0.6 * x / w
    img = img + (rng.random() - 0.5) * 0.6 * y / h
    for _ in range(int(rng.integers(2, 5))):
        cy, cx = rng.random() * h, rng.random() * w
        sig = (0.05 + 0.15 * rng.random()) * min(h, w)
        amp = (rng.random() - 0.5) * 0.8
        img = img + amp * np.exp(-((y - cy) ** 2 + (x - cx) ** 2) / (2 * sig**2))
    for _ in range(int(rng.integers(1, 3))):
        x0 = int(rng.integers(0, w - 8))
        img[:, x0 : x0 + 3] += (rng.random() - 0.5) * 0.5
    return np.clip(img, 0.0, 1.0)


def write_pgm(path, img):
    h, w = img.shape
    data = np.rint(img * 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode())
        f.write(data.tobytes())


def main():
    root = pathlib.Path(__file__).resolve().parent.parent / "data"
    for sub, count, base_seed in [("train", 8, 100), ("test", 3, 200)]:
        d = root / sub
        d.mkdir(parents=True, exist_ok=True)
        for i in range(count):
            write_pgm(d / f"{sub}_{i:02d}.pgm", scene(96, 96, base_seed + i))
    print(f"wrote {root}")


if __name__ == "__main__":
    main()
