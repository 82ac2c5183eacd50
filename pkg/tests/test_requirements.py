"""
Sanity checks for dependency manifests.

These tests do not install packages. They only parse the requirement
files and pyproject.toml so that the declared stack stays consistent
between pip installs and the packaged distribution.
"""
import re
import tomllib
from pathlib import Path

ESSENTIAL_RUNTIME = {"numpy", "scipy", "pandas", "pyyaml"}
ESSENTIAL_DEV = {"pytest", "flake8", "black", "mypy"}


def _name(spec: str) -> str:
    """Package name of a single requirement specifier, lower-cased."""
    token = re.split(r"[<>=~!;\s]", spec.strip(), maxsplit=1)[0]
    return token.split("[")[0].strip().lower()


def _parse_pkgs(path: Path) -> set[str]:
    """Extract top-level package names from a pip requirement file."""
    pkgs = set()
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("-"):
            continue
        name = _name(line)
        if name:
            pkgs.add(name)
    return pkgs


def test_runtime_requirements_contains_essentials():
    path = Path("requirements.txt")
    assert path.exists(), "requirements.txt is missing"
    pkgs = _parse_pkgs(path)
    missing = sorted(p for p in ESSENTIAL_RUNTIME if p not in pkgs)
    assert not missing, f"Missing runtime packages: {missing}"


def test_dev_requirements_contains_essentials():
    path = Path("requirements-dev.txt")
    assert path.exists(), "requirements-dev.txt is missing"
    pkgs = _parse_pkgs(path)
    missing = sorted(p for p in ESSENTIAL_DEV if p not in pkgs)
    assert not missing, f"Missing dev packages: {missing}"


def test_pyproject_matches_runtime_requirements():
    project = tomllib.loads(Path("pyproject.toml").read_text(encoding="utf-8"))["project"]
    declared = {_name(dep) for dep in project["dependencies"]}
    assert declared == _parse_pkgs(Path("requirements.txt"))
    assert project["scripts"]["semispec"] == "semispec.cli:main"
