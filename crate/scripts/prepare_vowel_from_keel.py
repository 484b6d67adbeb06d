"""Write data/vowel.csv from the KEEL copy of the vowel data.

The KEEL file has columns TT (0 = train, 1 = test), speaker, sex,
ten formant features and the class (0..10). The output keeps the
features as x1..x10, the class as y (1..11) and TT as `predefined`.

usage: python scripts/prepare_vowel_from_keel.py KEEL_WHEEL_OR_DAT [OUT]
"""

import csv
import sys
import zipfile
from pathlib import Path


def read_rows(src: Path):
    if src.suffix == ".whl":
        with zipfile.ZipFile(src) as z:
            text = z.read("keel_ds/data/balanced/raw/vowel.dat").decode()
    else:
        text = src.read_text()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        yield line.split(",")


def main():
    src = Path(sys.argv[1])
    out = Path(sys.argv[2]) if len(sys.argv) > 2 else Path(__file__).resolve().parent.parent / "data" / "vowel.csv"
    rows = list(read_rows(src))
    with out.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow([f"x{i}" for i in range(1, 11)] + ["y", "predefined"])
        for r in rows:
            tt, feats, cls = r[0], r[3:13], r[13]
            w.writerow(feats + [int(cls) + 1, "train" if tt.strip() == "0" else "test"])
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main()
