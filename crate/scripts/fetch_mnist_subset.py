#!/usr/bin/env python3
"""Build a 10,000-digit MNIST subset in gzipped IDX format.

The digits come from the `mnist` npm package (JSON, pixels in [0,1] rounded
to three decimals). Pixels are mapped back to bytes with round(v * 255).

usage: fetch_mnist_subset.py [OUT_DIR]   (default: data/mnist10k)
"""
import gzip
import json
import os
import struct
import subprocess
import sys
import tarfile
import tempfile


def main():
    out_dir = sys.argv[1] if len(sys.argv) > 1 else os.path.join("data", "mnist10k")
    os.makedirs(out_dir, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(["npm", "pack", "mnist@1.1.0"], cwd=tmp, check=True,
                       stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
        with tarfile.open(os.path.join(tmp, "mnist-1.1.0.tgz")) as tar:
            tar.extractall(tmp)
        samples = []
        for digit in range(10):
            with open(os.path.join(tmp, "package", "src", "digits", f"{digit}.json")) as f:
                data = json.load(f)["data"]
            assert len(data) % 784 == 0
            for i in range(len(data) // 784):
                samples.append((data[i * 784:(i + 1) * 784], digit))

    # interleave classes deterministically so prefixes stay balanced
    by_class = [[s for s in samples if s[1] == d] for d in range(10)]
    ordered = []
    while any(by_class):
        for d in range(10):
            if by_class[d]:
                ordered.append(by_class[d].pop(0))

    n = len(ordered)
    images = bytearray(struct.pack(">IIII", 0x803, n, 28, 28))
    labels = bytearray(struct.pack(">II", 0x801, n))
    for pixels, digit in ordered:
        images.extend(min(255, max(0, round(v * 255))) for v in pixels)
        labels.append(digit)
    for name, payload in (("images-idx3-ubyte.gz", images), ("labels-idx1-ubyte.gz", labels)):
        with open(os.path.join(out_dir, name), "wb") as raw:
            with gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as f:
                f.write(payload)
    print(f"wrote {n} digits to {out_dir}")


if __name__ == "__main__":
    main()
