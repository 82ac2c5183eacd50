"""
Tests that validate the repository's canonical layout.

These checks are purposely simple. They ensure the package, its bundled
problem catalog and the logging config sit where the loaders expect them.
"""
from pathlib import Path

REQUIRED_DIRS = [
    "semispec",
    "semispec/problems",
    "config",
    "docs",
    "tests",
]

REQUIRED_FILES = [
    "config/logging.conf",
    "docs/config_schema.md",
    "semispec/problems/harmonic-complex-1d.json",
    "semispec/problems/anisotropic-2d.json",
    "semispec/problems/flat-well-1d.json",
]


def test_required_directories_exist():
    root = Path(".")
    missing = [d for d in REQUIRED_DIRS if not (root / d).is_dir()]
    assert not missing, f"Missing directories: {missing}"


def test_required_files_exist():
    root = Path(".")
    missing = [f for f in REQUIRED_FILES if not (root / f).is_file()]
    assert not missing, f"Missing files: {missing}"
