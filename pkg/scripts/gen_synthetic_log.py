#!/usr/bin/env python3
"""Write a deterministic 50 Hz synthetic flight log for the bundled corpus."""

from __future__ import annotations

import argparse

from lola import synthetic


def parse_jump(text: str) -> tuple[int, float]:
    position, _, metres = text.partition(":")
    return int(position), float(metres or 25.0)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("output", help="CSV file to write")
    parser.add_argument("--events", type=int, default=45_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jump", type=parse_jump, action="append", default=[], metavar="POS[:METRES]",
                        help="inject a GPS position jump (repeatable)")
    args = parser.parse_args()
    cfg = synthetic.SyntheticConfig(events=args.events, seed=args.seed, gps_jumps=tuple(args.jump))
    path = synthetic.write(args.output, cfg)
    print(f"wrote {args.events} records to {path}")


if __name__ == "__main__":
    main()
