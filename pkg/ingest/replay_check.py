#!/usr/bin/env python3
"""Determinism check across the language boundary: re-run the primary
`track-roi` on an ingest output directory and verify the regenerated
roi_per_frame.csv is byte-identical. On mismatch, reports the first
differing frame."""

import argparse
import csv
import subprocess
import shlex
import sys
import tempfile
from pathlib import Path

from ingest import default_rrpipe


def first_differing_frame(path_a, path_b):
    """Compare two ROI CSVs row by row; return a human-readable verdict."""

    def rows_of(path):
        with open(path, newline="") as fh:
            return list(csv.reader(fh))

    rows_a, rows_b = rows_of(path_a), rows_of(path_b)
    for ra, rb in zip(rows_a, rows_b):
        if ra != rb:
            return f"first difference at frame {ra[0]} (row {ra} != {rb})"
    if len(rows_a) != len(rows_b):
        longer, shorter = (rows_a, rows_b) if len(rows_a) > len(rows_b) else (rows_b, rows_a)
        frame = longer[len(shorter)][0]
        return (
            f"row counts differ ({len(rows_a) - 1} vs {len(rows_b) - 1} data rows); "
            f"first extra row is frame {frame}"
        )
    return "identical rows"


def replay_check(out_dir, rrpipe_cmd):
    out_dir = Path(out_dir)
    tracks = out_dir / "tracks.csv"
    roi0 = out_dir / "roi0.csv"
    reference = out_dir / "roi_per_frame.csv"
    for path in (tracks, roi0, reference):
        if not path.exists():
            raise FileNotFoundError(f"missing ingest output {path}")

    with tempfile.TemporaryDirectory() as tmp:
        regenerated = Path(tmp) / "roi_per_frame.csv"
        cmd = shlex.split(rrpipe_cmd) + [
            "track-roi", "--tracks", str(tracks),
            "--roi", str(roi0), "--out", str(regenerated),
        ]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode != 0:
            raise RuntimeError(
                f"primary CLI failed (exit {proc.returncode}): {proc.stderr.strip()}"
            )
        if regenerated.read_bytes() == reference.read_bytes():
            return True, "byte-identical"
        return False, first_differing_frame(reference, regenerated)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dir", required=True, help="ingest output directory")
    ap.add_argument("--rrpipe", default=default_rrpipe())
    args = ap.parse_args(argv)
    ok, message = replay_check(args.dir, args.rrpipe)
    print(("OK: " if ok else "MISMATCH: ") + message)
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
