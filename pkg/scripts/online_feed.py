#!/usr/bin/env python3
"""Stream a log to a monitor started with ``lola online --listen HOST:PORT``,
pacing records at a fixed rate."""

from __future__ import annotations

import argparse
import socket
import time


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("log", help="CSV log to send (header first)")
    parser.add_argument("--connect", default="127.0.0.1:9000", metavar="HOST:PORT")
    parser.add_argument("--rate", type=float, default=0.0, help="records per second (0 sends as fast as possible)")
    parser.add_argument("--retries", type=int, default=50, help="connection attempts, 0.1 s apart")
    args = parser.parse_args()
    host, _, port = args.connect.rpartition(":")
    for attempt in range(args.retries):
        try:
            conn = socket.create_connection((host or "127.0.0.1", int(port)))
            break
        except ConnectionRefusedError:
            if attempt == args.retries - 1:
                raise
            time.sleep(0.1)
    delay = 1.0 / args.rate if args.rate > 0 else 0.0
    sent = 0
    with conn, open(args.log, "rb") as fh:
        for line in fh:
            conn.sendall(line)
            sent += 1
            if delay and sent > 1:
                time.sleep(delay)
    print(f"sent {sent} lines")


if __name__ == "__main__":
    main()
