"""Bundled example problems shipped with the package (semispec/problems/*.json)."""

from __future__ import annotations

from pathlib import Path

CATALOG_DIR = Path(__file__).resolve().parent / "problems"


def problem_names() -> list[str]:
    return sorted(p.stem for p in CATALOG_DIR.glob("*.json"))


def catalog_path(name: str) -> Path | None:
    """Path of a bundled problem by bare name (with or without the .json suffix)."""
    stem = name[:-5] if name.endswith(".json") else name
    if "/" in stem or "\\" in stem:
        return None
    path = CATALOG_DIR / f"{stem}.json"
    return path if path.is_file() else None
