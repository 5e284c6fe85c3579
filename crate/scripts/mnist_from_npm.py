"""Convert the 10,000 digits bundled in the npm `mnist` package to gzipped IDX files.

Usage:
    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/mnist_from_npm.py package/src/digits crates/core/tests/data
"""
import gzip
import json
import random
import struct
import sys
from pathlib import Path


def main(digits_dir: str, out_dir: str) -> None:
    samples = []
    for label in range(10):
        pixels = json.loads(Path(digits_dir, f"{label}.json").read_text())["data"]
        assert len(pixels) % 784 == 0
        for k in range(len(pixels) // 784):
            row = pixels[k * 784:(k + 1) * 784]
            samples.append((label, bytes(min(255, max(0, round(v * 255))) for v in row)))
    random.Random(20240101).shuffle(samples)
    n = len(samples)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with gzip.GzipFile(out / "mnist10k-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        for _, img in samples:
            f.write(img)
    with gzip.GzipFile(out / "mnist10k-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(bytes(label for label, _ in samples))
    print(f"wrote {n} samples to {out}")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
