"""Deterministic synthetic flight logs at 50 Hz.

One record carries every input column used by the bundled corpus, so a
single log drives all corpus specifications (separately or merged). The
flight alternates hover and cruise segments; GPS positions integrate the
body velocity so no jump is detected unless one is injected.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from lola.logs import format_row

RATE_HZ = 50
TICK_MICROS = 1_000_000 // RATE_HZ
METERS_PER_DEG_LAT = 111_320.0

COLUMNS = (
    "time_s", "time_micros",
    "lat", "lon", "ug", "vg", "wg",
    "vel_x", "vel_y", "vel_z", "vel_r_x", "vel_r_y", "vel_r_z",
    "fuel", "power",
    "stateID_SC", "OnGround",
)

# mission manager ids as used by the bundled mission_state specification
START, CTRL_OFF, CTRL_ON, IDLE, ENGINE_START, TAKEOFF = 0, 1, 2, 3, 4, 5
HOVER, FLYTO, APPROACH, LANDING, TOUCHDOWN, ENGINE_OFF = 6, 7, 11, 12, 13, 14


@dataclass
class SyntheticConfig:
    events: int = 45_000
    seed: int = 0
    lat0: float = 52.52
    lon0: float = 13.405
    # (position, metres) jumps added to the GPS track from that position on
    gps_jumps: tuple[tuple[int, float], ...] = ()
    min_segment: int = 100
    max_segment: int = 600
    # hover segments keep the velocity spread below this bound
    hover_noise: float = 0.2
    landing_ticks: int = 400
    fuel0: float = 100.0
    power0: float = 100.0


@dataclass
class _Segment:
    state: int
    length: int
    hover: bool
    base: tuple[float, float, float] = field(default=(0.0, 0.0, 0.0))


def _plan(cfg: SyntheticConfig, rng: random.Random) -> list[_Segment]:
    prologue = [START, CTRL_OFF, CTRL_ON, IDLE, ENGINE_START, TAKEOFF]
    epilogue = [APPROACH, LANDING, TOUCHDOWN, ENGINE_OFF]
    head = [_Segment(s, 25, True) for s in prologue]
    tail_len = 3 * 25 + cfg.landing_ticks
    body: list[_Segment] = []
    budget = cfg.events - 25 * len(prologue) - tail_len
    hover = True
    while budget > 0:
        n = min(budget, rng.randint(cfg.min_segment, cfg.max_segment))
        base = (rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-0.3, 0.3))
        body.append(_Segment(HOVER if hover else FLYTO, n, hover, base))
        budget -= n
        hover = not hover
    tail = [_Segment(s, cfg.landing_ticks if s == LANDING else 25, True) for s in epilogue]
    return head + body + tail


def generate(cfg: SyntheticConfig = SyntheticConfig()) -> Iterator[dict[str, object]]:
    """Yield ``cfg.events`` records keyed by :data:`COLUMNS`."""
    rng = random.Random(cfg.seed)
    segments = _plan(cfg, rng)
    jumps = dict(cfg.gps_jumps)
    north = east = 0.0
    offset = 0.0
    fuel, power = cfg.fuel0, cfg.power0
    burn = 0.95 * cfg.fuel0 / max(cfg.events, 1)
    drain = 0.92 * cfg.power0 / max(cfg.events, 1)
    cos_lat = math.cos(math.radians(cfg.lat0))
    k = 0
    for seg in segments:
        airborne = seg.state not in (START, CTRL_OFF, CTRL_ON, IDLE, ENGINE_START, TOUCHDOWN, ENGINE_OFF)
        for i in range(seg.length):
            if k >= cfg.events:
                return
            if not airborne:
                u = v = w = 0.0
            elif seg.hover:
                u, v, w = (b + rng.uniform(-cfg.hover_noise, cfg.hover_noise) / 2 for b in seg.base)
            else:
                phase = 2 * math.pi * i / 250.0
                u = seg.base[0] + 3.0 * math.sin(phase)
                v = seg.base[1] + 3.0 * math.cos(phase)
                w = seg.base[2] + 0.5 * math.sin(2 * phase)
            dt = 1.0 / RATE_HZ
            # GPS integrates at 90 % of the IMU speed so the measured distance
            # stays below velocity * dt
            north += 0.9 * u * dt
            east += 0.9 * v * dt
            offset += jumps.get(k, 0.0)
            fuel = max(fuel - burn * (1.5 if airborne else 0.2), 0.0)
            power = max(power - drain, 0.0)
            yield {
                "time_s": float(k // RATE_HZ),
                "time_micros": float((k % RATE_HZ) * TICK_MICROS),
                "lat": cfg.lat0 + (north + offset) / METERS_PER_DEG_LAT,
                "lon": cfg.lon0 + east / (METERS_PER_DEG_LAT * cos_lat),
                "ug": u,
                "vg": v,
                "wg": w,
                "vel_x": u,
                "vel_y": v,
                "vel_z": w,
                "vel_r_x": u + rng.gauss(0.0, 0.05),
                "vel_r_y": v + rng.gauss(0.0, 0.05),
                "vel_r_z": w + rng.gauss(0.0, 0.02),
                "fuel": fuel,
                "power": power,
                "stateID_SC": seg.state,
                "OnGround": 0 if airborne else 1,
            }
            k += 1
    # the plan may fall short for tiny traces; pad with ground records
    while k < cfg.events:
        yield {
            "time_s": float(k // RATE_HZ), "time_micros": float((k % RATE_HZ) * TICK_MICROS),
            "lat": cfg.lat0 + (north + offset) / METERS_PER_DEG_LAT,
            "lon": cfg.lon0 + east / (METERS_PER_DEG_LAT * cos_lat),
            "ug": 0.0, "vg": 0.0, "wg": 0.0, "vel_x": 0.0, "vel_y": 0.0, "vel_z": 0.0,
            "vel_r_x": 0.0, "vel_r_y": 0.0, "vel_r_z": 0.0,
            "fuel": fuel, "power": power, "stateID_SC": ENGINE_OFF, "OnGround": 1,
        }
        k += 1


def lines(cfg: SyntheticConfig = SyntheticConfig()) -> Iterator[str]:
    """The log as text lines (header first), newline-terminated."""
    yield ",".join(COLUMNS) + "\n"
    for rec in generate(cfg):
        yield format_row(rec[c] for c in COLUMNS) + "\n"


def write(path: str | Path, cfg: SyntheticConfig = SyntheticConfig()) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.writelines(lines(cfg))
    return path
