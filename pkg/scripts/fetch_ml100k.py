"""Materialize MovieLens-100k ``u.data`` under ``data/ml-100k/``.

MovieLens may not be redistributed, so the file is not checked in.  This
script tries the GroupLens zip first and falls back to the copy bundled in
the RecBole wheel (``ml-100k.inter``, identical rows plus a header line),
fetched with ``pip download``.

Usage::

    python scripts/fetch_ml100k.py [--dest data/ml-100k/u.data]
"""

from __future__ import annotations

import argparse
import io
import subprocess
import sys
import tempfile
import urllib.request
import zipfile
from pathlib import Path

GROUPLENS_URL = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
RECBOLE_MEMBER = "recbole/dataset_example/ml-100k/ml-100k.inter"


def from_grouplens() -> bytes:
    with urllib.request.urlopen(GROUPLENS_URL, timeout=30) as resp:
        archive = zipfile.ZipFile(io.BytesIO(resp.read()))
    return archive.read("ml-100k/u.data")


def from_recbole() -> bytes:
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-q",
             "recbole==1.2.1", "-d", tmp],
            check=True,
        )
        wheel = next(Path(tmp).glob("recbole-*.whl"))
        text = zipfile.ZipFile(wheel).read(RECBOLE_MEMBER).decode()
    lines = text.splitlines()
    if not lines[0].startswith("user_id:token"):
        raise RuntimeError(f"unexpected header in {RECBOLE_MEMBER}: {lines[0]!r}")
    return ("\n".join(lines[1:]) + "\n").encode()


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dest", type=Path, default=Path("data/ml-100k/u.data"))
    args = parser.parse_args()

    for source in (from_grouplens, from_recbole):
        try:
            payload = source()
            break
        except Exception as exc:  # noqa: BLE001
            print(f"{source.__name__} failed: {exc}", file=sys.stderr)
    else:
        return 1

    n_lines = payload.count(b"\n")
    if n_lines != 100_000:
        print(f"expected 100000 rows, got {n_lines}", file=sys.stderr)
        return 1
    args.dest.parent.mkdir(parents=True, exist_ok=True)
    args.dest.write_bytes(payload)
    print(f"wrote {args.dest} ({n_lines} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
