#!/usr/bin/env python3
"""Build the 256x256 grayscale test suite as binary PGM files.

Images come from the scikit-image data module (bundled sample images), are
converted to luma, center-cropped to a square and resampled to 256x256.
A manifest with SHA-256 hashes is written next to the images so reports can
record exactly which inputs were used.

    python3 scripts/fetch_suite.py [OUT_DIR]      # default: data/suite
"""
import hashlib
import json
import sys
from pathlib import Path

import numpy as np
from skimage import color, data, transform

SUITE = [
    "camera",
    "astronaut",
    "chelsea",
    "coffee",
    "rocket",
    "coins",
    "moon",
    "clock",
    "brick",
    "grass",
    "gravel",
    "immunohistochemistry",
]

SIZE = 256


def to_gray_u8(img):
    if img.ndim == 3:
        if img.shape[2] == 4:
            img = img[..., :3]
        img = color.rgb2gray(img)
    img = np.asarray(img, dtype=np.float64)
    if img.max() > 1.0:
        img = img / 255.0
    h, w = img.shape
    s = min(h, w)
    top, left = (h - s) // 2, (w - s) // 2
    img = img[top : top + s, left : left + s]
    img = transform.resize(img, (SIZE, SIZE), anti_aliasing=True)
    return np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)


def write_pgm(path, img):
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(img.tobytes())


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data/suite")
    out.mkdir(parents=True, exist_ok=True)
    manifest = []
    for name in SUITE:
        img = to_gray_u8(getattr(data, name)())
        path = out / f"{name}.pgm"
        write_pgm(path, img)
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        manifest.append({"name": name, "file": path.name, "sha256": digest})
        print(f"{path}  {digest[:16]}")
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
