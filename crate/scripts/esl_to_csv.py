#!/usr/bin/env python3
"""Convert the Elements of Statistical Learning copies of spam and zipUSPS
into the CSV layout the acceptance suite reads (x1..xP, y, predefined).

  spam:    spam.data (57 features + label per line), spam.traintest (0 train, 1 test)
  zipUSPS: zip.train and zip.test (digit followed by 256 pixels), optionally gzipped

usage: esl_to_csv.py spam SRC_DIR OUT.csv
       esl_to_csv.py zipUSPS SRC_DIR OUT.csv
"""

import csv
import gzip
import sys
from pathlib import Path


def read_lines(path):
    if not path.exists():
        gz = path.with_name(path.name + ".gz")
        if gz.exists():
            path = gz
    if path.suffix == ".gz":
        with gzip.open(path, "rt") as f:
            return [l.split() for l in f if l.strip()]
    with open(path) as f:
        return [l.split() for l in f if l.strip()]


def spam(src):
    rows = read_lines(src / "spam.data")
    flags = [r[0] for r in read_lines(src / "spam.traintest")]
    if len(rows) != len(flags):
        sys.exit(f"spam.data has {len(rows)} rows, spam.traintest {len(flags)}")
    for r, f in zip(rows, flags):
        yield r[:-1], r[-1], "test" if f == "1" else "train"


def zip_usps(src):
    for part in ("train", "test"):
        for r in read_lines(src / f"zip.{part}"):
            yield r[1:], str(int(float(r[0]))), part


def main():
    if len(sys.argv) != 4 or sys.argv[1] not in ("spam", "zipUSPS"):
        sys.exit(__doc__)
    kind, src, out = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])
    rows = list(spam(src) if kind == "spam" else zip_usps(src))
    p = len(rows[0][0])
    with open(out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([f"x{j + 1}" for j in range(p)] + ["y", "predefined"])
        for x, y, flag in rows:
            if len(x) != p:
                sys.exit("ragged input rows")
            w.writerow(x + [y, flag])
    print(f"wrote {out}: {len(rows)} rows, {p} features")


if __name__ == "__main__":
    main()
