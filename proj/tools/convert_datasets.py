#!/usr/bin/env python3
"""Regenerate data/splice.libsvm and data/movielens_nano.tsv.

Sources are the dataset files bundled in two PyPI wheels:
  keel-ds 0.2.5    keel_ds/data/balanced/raw/splice.dat
  rdatasets 0.2.10 rdatasets/_data/dslabs/movielens.pkl.compress

Usage: convert_datasets.py KEEL_WHEEL RDATASETS_WHEEL OUT_DIR
"""

import argparse
import collections
import io
import lzma
import pickle
import zipfile
from pathlib import Path

NUCLEOTIDE = {"A": 1, "C": 2, "G": 3, "T": 4}


def convert_splice(wheel: Path, out: Path) -> int:
    with zipfile.ZipFile(wheel) as z:
        text = z.read("keel_ds/data/balanced/raw/splice.dat").decode()
    lines = []
    for raw in text.splitlines():
        raw = raw.strip()
        if not raw or raw.startswith("@"):
            continue
        fields = [f.strip() for f in raw.split(",")]
        *bases, cls = fields
        if len(bases) != 60:
            raise ValueError(f"expected 60 positions, got {len(bases)}")
        label = "-1" if cls == "N" else "+1"
        feats = [f"{i}:{NUCLEOTIDE[b]}" for i, b in enumerate(bases, 1) if b in NUCLEOTIDE]
        lines.append(" ".join([label, *feats]))
    out.write_text("\n".join(lines) + "\n")
    return len(lines)


def convert_movielens(wheel: Path, out: Path, users: int, items: int) -> int:
    with zipfile.ZipFile(wheel) as z:
        blob = z.read("rdatasets/_data/dslabs/movielens.pkl.compress")
    frame = pickle.load(io.BytesIO(lzma.decompress(blob)))
    rows = list(zip(frame["userId"], frame["movieId"], frame["rating"], frame["timestamp"]))
    user_counts = collections.Counter(int(r[0]) for r in rows)
    top_users = {u for u, _ in sorted(user_counts.items(), key=lambda kv: (-kv[1], kv[0]))[:users]}
    rows = [r for r in rows if int(r[0]) in top_users]
    item_counts = collections.Counter(int(r[1]) for r in rows)
    top_items = {i for i, _ in sorted(item_counts.items(), key=lambda kv: (-kv[1], kv[0]))[:items]}
    rows = [r for r in rows if int(r[1]) in top_items]
    rows.sort(key=lambda r: (int(r[0]), int(r[1])))
    out.write_text("".join(f"{int(u)}\t{int(i)}\t{float(r):g}\t{int(t)}\n" for u, i, r, t in rows))
    return len(rows)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("keel_wheel", type=Path)
    ap.add_argument("rdatasets_wheel", type=Path)
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--users", type=int, default=150)
    ap.add_argument("--items", type=int, default=300)
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    n = convert_splice(args.keel_wheel, args.out_dir / "splice.libsvm")
    print(f"splice.libsvm: {n} rows")
    n = convert_movielens(args.rdatasets_wheel, args.out_dir / "movielens_nano.tsv", args.users, args.items)
    print(f"movielens_nano.tsv: {n} ratings")


if __name__ == "__main__":
    main()
