#!/usr/bin/env python3
# Copyright 2026 The strsbp Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes a fixed MNIST subset as IDX files.

The source is the 5000-image MNIST sample bundled with mlxtend
(mnist_5k.csv.gz: 784 pixel columns followed by the label). It can be given
as the CSV itself, as an mlxtend wheel, or found in an installed mlxtend.
"""

import argparse
import gzip
import importlib.util
import pathlib
import random
import struct
import sys
import zipfile

_MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def read_source(path):
    if path is None:
        spec = importlib.util.find_spec("mlxtend")
        if spec is None or spec.origin is None:
            sys.exit("mlxtend is not installed; pass --source")
        path = pathlib.Path(spec.origin).parent / "data" / "data" / "mnist_5k.csv.gz"
    path = pathlib.Path(path)
    if path.suffix == ".whl":
        with zipfile.ZipFile(path) as wheel:
            raw = wheel.read(_MEMBER)
    else:
        raw = path.read_bytes()
    text = gzip.decompress(raw).decode() if raw[:2] == b"\x1f\x8b" else raw.decode()
    rows = []
    for line in text.splitlines():
        values = [int(float(v)) for v in line.split(",")]
        rows.append((bytes(values[:784]), values[784]))
    return rows


def write_idx(images_path, labels_path, rows):
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(rows), 28, 28))
        for pixels, _ in rows:
            f.write(pixels)
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", 0x801, len(rows)))
        f.write(bytes(label for _, label in rows))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--source", help="mnist_5k.csv.gz or an mlxtend wheel")
    parser.add_argument("--out", default="data/mnist_subset")
    parser.add_argument("--train", type=int, default=2000)
    parser.add_argument("--test", type=int, default=500)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rows = read_source(args.source)
    if args.train + args.test > len(rows):
        sys.exit(f"source has only {len(rows)} images")
    random.Random(args.seed).shuffle(rows)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_idx(out / "train-images.idx3-ubyte", out / "train-labels.idx1-ubyte",
              rows[: args.train])
    write_idx(out / "test-images.idx3-ubyte", out / "test-labels.idx1-ubyte",
              rows[args.train : args.train + args.test])
    print(f"wrote {args.train} train / {args.test} test images to {out}")


if __name__ == "__main__":
    main()
