"""
Problem configuration: a symbol spec plus weight, grid and study parameters.

Configs are JSON or YAML documents:

    spec:   SymbolSpec (required)
    weight: WeightParams fields (optional)
    grid:   GridSpec fields (optional)
    study:  StudyParams fields (optional)

Schema violations raise ConfigError carrying a dotted pointer to the
offending field.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from semispec.catalog import catalog_path
from semispec.errors import ConfigError
from semispec.operator import GridSpec
from semispec.symbols import SymbolSpec, spec_from_dict
from semispec.weight import WeightParams

YAML_SUFFIXES = (".yaml", ".yml")


@dataclass(frozen=True)
class StudyParams:
    h_list: tuple[float, ...] = (0.1, 0.05, 0.025, 0.0125)
    C: float = 4.0
    rho: float = 0.3
    T: float = 1.0
    count: int = 3
    samples_per_h: int = 64

    def __post_init__(self) -> None:
        if not self.h_list or any(h <= 0 for h in self.h_list):
            raise ValueError(f"h_list must hold positive values, got {list(self.h_list)}")
        if any(b >= a for a, b in zip(self.h_list, self.h_list[1:])):
            raise ValueError(f"h_list must be strictly decreasing, got {list(self.h_list)}")
        for label in ("C", "rho", "T"):
            if not getattr(self, label) > 0:
                raise ValueError(f"{label} must be positive, got {getattr(self, label)}")
        if self.count < 1 or self.samples_per_h < 1:
            raise ValueError("count and samples_per_h must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["h_list"] = list(self.h_list)
        return out


@dataclass(frozen=True)
class ProblemConfig:
    spec: SymbolSpec
    weight: WeightParams = field(default_factory=WeightParams)
    grid: GridSpec = field(default_factory=GridSpec)
    study: StudyParams = field(default_factory=StudyParams)

    def to_dict(self) -> dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "weight": self.weight.to_dict(),
            "grid": self.grid.to_dict(),
            "study": self.study.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Any) -> "ProblemConfig":
        if not isinstance(data, Mapping):
            raise ConfigError("$", "expected a mapping at the top level")
        unknown = set(data) - {"spec", "weight", "grid", "study"}
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown top-level section")
        if "spec" not in data:
            raise ConfigError("spec", "missing required section")
        spec = spec_from_dict(data["spec"], "spec")
        grid_raw = dict(data.get("grid") or {})
        grid_raw.setdefault("n", spec.n)
        grid = _section(GridSpec, grid_raw, "grid")
        if grid.n != spec.n:
            raise ConfigError(
                "grid.n", f"grid dimension {grid.n} does not match spec dimension {spec.n}"
            )
        return cls(
            spec=spec,
            weight=_section(WeightParams, data.get("weight") or {}, "weight"),
            grid=grid,
            study=_section(StudyParams, data.get("study") or {}, "study"),
        )


def _section(kind: type, raw: Any, pointer: str) -> Any:
    """Build a flat parameter dataclass from a mapping, mapping every failure to ConfigError."""
    if not isinstance(raw, Mapping):
        raise ConfigError(pointer, "expected a mapping")
    known = {f.name: f for f in fields(kind)}
    values: dict[str, Any] = {}
    for key, value in raw.items():
        if key not in known:
            raise ConfigError(f"{pointer}.{key}", "unknown field")
        if isinstance(value, bool):
            raise ConfigError(f"{pointer}.{key}", f"expected a number or string, got {value!r}")
        if key == "h_list":
            numbers = isinstance(value, (list, tuple)) and all(
                isinstance(v, (int, float)) for v in value
            )
            if not numbers:
                raise ConfigError(f"{pointer}.{key}", "expected a list of numbers")
            value = tuple(float(v) for v in value)
        elif known[key].type in ("int", int) and not isinstance(value, int):
            raise ConfigError(f"{pointer}.{key}", f"expected an integer, got {value!r}")
        elif known[key].type in ("float", float):
            if not isinstance(value, (int, float)):
                raise ConfigError(f"{pointer}.{key}", f"expected a number, got {value!r}")
            value = float(value)
        values[key] = value
    try:
        return kind(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(pointer, str(exc)) from exc


def load_yaml(path: Path) -> Any:
    with path.open("r", encoding="utf-8") as f:
        return yaml.safe_load(f)


def resolve_config(name_or_path: str | Path) -> Path:
    """A filesystem path, or the bare name of a bundled catalog problem."""
    path = Path(name_or_path)
    if path.exists():
        return path
    bundled = catalog_path(str(name_or_path))
    if bundled is not None:
        return bundled
    raise ConfigError("config", f"no such file or catalog problem: {name_or_path}")


def load_config(name_or_path: str | Path) -> ProblemConfig:
    path = resolve_config(name_or_path)
    try:
        if path.suffix.lower() in YAML_SUFFIXES:
            data = load_yaml(path)
        else:
            data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError("config", f"cannot parse {path}: {exc}") from exc
    return ProblemConfig.from_dict(data)
