#!/usr/bin/env python3
"""Regenerate the bundled digit-image fixture used by the integration tests.

Builds an IDX3 file of 2,200 grayscale 28x28 images from scikit-learn's
handwritten-digits dataset (1,797 8x8 images, UCI ML repository). Each 8x8
image is upsampled by 3x pixel repetition to 24x24, zero-padded by 2 pixels
per side to 28x28, and scaled from the 0..16 intensity range to 0..240. The
count is topped up to 2,200 with seeded low-noise copies of randomly chosen
originals, and the whole set is shuffled with the same fixed seed, so the
output is fully deterministic.

Usage: python3 tools/make_digits_fixture.py
"""

import struct
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits

OUT = Path(__file__).resolve().parent.parent / "crates/binquant-cli/tests/data/digits.idx3"
TARGET = 2200
SEED = 0


def main() -> None:
    rng = np.random.RandomState(SEED)
    base = load_digits().images.astype(np.float64)  # (1797, 8, 8), values 0..16

    n_extra = TARGET - base.shape[0]
    if n_extra < 0:
        raise SystemExit("TARGET is smaller than the source dataset")
    picks = rng.choice(base.shape[0], size=n_extra, replace=False)
    noisy = np.clip(base[picks] + rng.normal(0.0, 0.75, size=(n_extra, 8, 8)), 0.0, 16.0)
    images = np.concatenate([base, noisy], axis=0)
    images = images[rng.permutation(TARGET)]

    up = np.repeat(np.repeat(images, 3, axis=1), 3, axis=2)  # 24x24
    padded = np.pad(up, ((0, 0), (2, 2), (2, 2)))  # 28x28
    pixels = np.clip(np.round(padded * 15.0), 0, 255).astype(np.uint8)

    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "wb") as f:
        f.write(struct.pack(">IIII", 2051, TARGET, 28, 28))
        f.write(pixels.tobytes())

    norms = np.linalg.norm(pixels.reshape(TARGET, -1) / 255.0, axis=1)
    print(f"wrote {OUT} ({OUT.stat().st_size} bytes)")
    print(f"mean pixel {pixels.mean():.2f}, mean vector norm {norms.mean():.2f}")


if __name__ == "__main__":
    main()
