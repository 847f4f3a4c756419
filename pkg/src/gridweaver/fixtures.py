"""Access to the benchmark fixtures bundled with the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

FIXTURE_NAMES = ("grid_4bus", "grid_12bus", "grid_cigre_mv", "blueprint_default")


def fixture_path(name: str) -> Path:
    """Filesystem path of a bundled fixture (with or without .yaml suffix)."""
    stem = name.removesuffix(".yaml")
    if stem not in FIXTURE_NAMES:
        raise KeyError(f"unknown fixture '{name}' (available: {', '.join(FIXTURE_NAMES)})")
    return Path(str(resources.files("gridweaver").joinpath("fixtures", f"{stem}.yaml")))


def fixture_text(name: str) -> str:
    return fixture_path(name).read_text()
