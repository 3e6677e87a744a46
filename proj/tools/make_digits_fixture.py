#!/usr/bin/env python3
"""Regenerates the IDX digit fixtures under fixtures/.

Takes the 1797 8x8 handwritten-digit scans bundled with scikit-learn,
upsamples them bilinearly to 28x28, and writes a 1000-example balanced
training split plus a 500-example eval split in big-endian IDX format
(image magic 0x00000803, label magic 0x00000801). Deterministic: rerunning
reproduces the committed files byte for byte (see fixtures/MANIFEST.sha256).
"""

import hashlib
import struct
import sys
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits

OUT_DIR = Path(__file__).resolve().parent.parent / "fixtures"
TRAIN_PER_CLASS = 100
EVAL_PER_CLASS = 50
SIZE = 28


def upsample_bilinear(img8: np.ndarray, size: int) -> np.ndarray:
    src = img8.astype(np.float64) * (255.0 / 16.0)
    # Sample the 8x8 grid at size x size positions (align-corners style).
    pos = np.linspace(0.0, img8.shape[0] - 1.0, size)
    i0 = np.floor(pos).astype(int)
    i1 = np.minimum(i0 + 1, img8.shape[0] - 1)
    frac = pos - i0
    rows = src[i0][:, :] * (1.0 - frac)[:, None] + src[i1][:, :] * frac[:, None]
    out = rows[:, i0] * (1.0 - frac)[None, :] + rows[:, i1] * frac[None, :]
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def write_idx(images: np.ndarray, labels: np.ndarray, img_path: Path,
              lab_path: Path) -> None:
    n = images.shape[0]
    with open(img_path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, SIZE, SIZE))
        f.write(images.tobytes())
    with open(lab_path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(labels.astype(np.uint8).tobytes())


def main() -> int:
    digits = load_digits()
    by_class = {c: np.where(digits.target == c)[0] for c in range(10)}
    for c, idx in by_class.items():
        need = TRAIN_PER_CLASS + EVAL_PER_CLASS
        if len(idx) < need:
            print(f"class {c} has only {len(idx)} examples, need {need}")
            return 1

    # Interleave classes so any prefix of the file stays balanced, then give
    # the order one seeded shuffle.
    train_idx = np.array(
        [by_class[c][k] for k in range(TRAIN_PER_CLASS) for c in range(10)])
    eval_idx = np.array([
        by_class[c][TRAIN_PER_CLASS + k]
        for k in range(EVAL_PER_CLASS)
        for c in range(10)
    ])
    rng = np.random.default_rng(20240401)
    rng.shuffle(train_idx)
    rng.shuffle(eval_idx)

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    outputs = []
    for split, idx in (("train", train_idx), ("eval", eval_idx)):
        images = np.stack(
            [upsample_bilinear(digits.images[i], SIZE) for i in idx])
        labels = digits.target[idx]
        img_path = OUT_DIR / f"digits-{split}-images-idx3-ubyte"
        lab_path = OUT_DIR / f"digits-{split}-labels-idx1-ubyte"
        write_idx(images, labels, img_path, lab_path)
        outputs += [img_path, lab_path]
        print(f"{split}: {len(idx)} examples -> {img_path.name}")

    manifest = OUT_DIR / "MANIFEST.sha256"
    fixture_files = sorted(p for p in OUT_DIR.iterdir()
                           if p.name != "MANIFEST.sha256")
    with open(manifest, "w") as f:
        for p in fixture_files:
            digest = hashlib.sha256(p.read_bytes()).hexdigest()
            f.write(f"{digest}  {p.name}\n")
    print(f"manifest: {manifest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
