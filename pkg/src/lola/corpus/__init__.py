"""Bundled specifications from UAS monitoring practice."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

NAMES = ("sensor_validation", "flight_phase", "mission_state", "mission_state_extended")


def path(name: str) -> Path:
    return Path(str(resources.files(__name__) / f"{name}.lola"))


def source(name: str) -> str:
    return path(name).read_text(encoding="utf-8")
