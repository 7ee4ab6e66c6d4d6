#!/usr/bin/env python3
"""Download the PSPLIB single-mode benchmark sets and the J30 optima.

Produces the layout the acceptance suite expects:

    <target>/
      j30/j301_1.sm ... (480 files)
      j60/...           (480 files)
      j120/...          (600 files)
      j30opt.csv        (instance,bound)

Usage:
    python scripts/fetch_psplib.py --target data/psplib
    export RCPSP_TABU_DATASETS=$PWD/data/psplib

Needs outbound network access to the PSPLIB site; run it on your own
machine, not in a sandboxed build environment.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import urllib.request
import zipfile
from pathlib import Path

BASE = "https://www.om-db.wi.tum.de/psplib/files"
SETS = {"j30": "j30.sm.zip", "j60": "j60.sm.zip", "j120": "j120.sm.zip"}
OPT_FILE = "j30opt.sm"             # header lines, then: param  instance  makespan


def fetch(url: str) -> bytes:
    print(f"fetching {url}")
    with urllib.request.urlopen(url, timeout=120) as response:
        return response.read()


def unpack_set(name: str, archive: bytes, target: Path) -> int:
    out_dir = target / name
    out_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    with zipfile.ZipFile(io.BytesIO(archive)) as bundle:
        for member in bundle.namelist():
            if not member.lower().endswith(".sm"):
                continue
            data = bundle.read(member)
            (out_dir / Path(member).name.lower()).write_bytes(data)
            count += 1
    print(f"  {name}: {count} instances")
    return count


def convert_optima(text: str, set_name: str, out_path: Path) -> int:
    """PSPLIB .opt format: 'param instance makespan' triples after a header."""
    rows = []
    for line in text.splitlines():
        parts = line.split()
        if len(parts) < 3:
            continue
        try:
            param, inst, makespan = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError:
            continue
        rows.append((f"{set_name}{param}_{inst}", makespan))
    with out_path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["instance", "bound"])
        writer.writerows(rows)
    print(f"  {out_path.name}: {len(rows)} bounds")
    return len(rows)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--target", type=Path, default=Path("data/psplib"))
    parser.add_argument("--sets", nargs="*", default=list(SETS),
                        choices=list(SETS))
    args = parser.parse_args()
    args.target.mkdir(parents=True, exist_ok=True)

    for name in args.sets:
        unpack_set(name, fetch(f"{BASE}/{SETS[name]}"), args.target)
    if "j30" in args.sets:
        convert_optima(fetch(f"{BASE}/{OPT_FILE}").decode("latin-1"),
                       "j30", args.target / "j30opt.csv")
    print(f"done; export RCPSP_TABU_DATASETS={args.target.resolve()}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
