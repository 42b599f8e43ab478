#!/usr/bin/env python3
"""Run every bundled specification (separately and merged) over one log
and print a one-line summary per run."""

from __future__ import annotations

import argparse
import io
import tempfile
from pathlib import Path

from lola import corpus, synthetic
from lola.cli import RunConfig, run_offline


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--input", help="log to monitor (default: a generated synthetic log)")
    parser.add_argument("--events", type=int, default=45_000, help="size of the generated log")
    parser.add_argument("--out-dir", help="directory for tag files (default: a temporary directory)")
    args = parser.parse_args()
    with tempfile.TemporaryDirectory() as scratch:
        log = args.input or str(synthetic.write(Path(scratch) / "flight.csv", synthetic.SyntheticConfig(events=args.events)))
        out_root = Path(args.out_dir or scratch)
        runs = [[f"corpus:{n}"] for n in corpus.NAMES] + [[f"corpus:{n}" for n in corpus.NAMES]]
        for specs in runs:
            label = "merged" if len(specs) > 1 else specs[0].split(":", 1)[1]
            config = RunConfig(specs, "offline", input=log, out_dir=str(out_root / label), qualify=len(specs) > 1)
            text = io.StringIO()
            report = run_offline(config, text, io.StringIO())
            fired = sum(c.count for c in report.fire_counts)
            print(f"{label:<24} events={report.events} fired={fired} peak_state={report.peak_state_size} "
                  f"time={report.wall_time:.2f}s ({report.throughput:,.0f} ev/s)")


if __name__ == "__main__":
    main()
