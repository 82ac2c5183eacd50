#!/usr/bin/env python3
"""
Determinism check for semispec commands.

Runs one CLI command twice, each time writing its report to a separate
temporary file, and compares SHA-256 digests of the two artifacts.

Usage:
  python -m semispec.reproducibility -- quad-spectrum --config harmonic-complex-1d --count 5

Exit codes:
  0  Both runs succeeded with identical exit codes and byte-identical outputs
  2  Validation failed (differing outputs or exit codes, missing command)
  3  Unexpected error
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
import tempfile
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from semispec.artifacts import sha256_file


@dataclass
class RunResult:
    name: str
    seconds: float
    exit_code: int
    digest: str = ""
    note: str = ""


@dataclass
class Report:
    command: list[str]
    runs: list[RunResult]
    passed_all: bool
    reason: str = ""

    def to_json(self) -> str:
        return json.dumps(
            {
                "command": self.command,
                "runs": [asdict(r) for r in self.runs],
                "passed_all": self.passed_all,
                "reason": self.reason,
            },
            indent=2,
        )


class ValidationError(RuntimeError):
    """Raised for expected validation failures with clear messages."""


def _echo(msg: str) -> None:
    print(f"[repro] {msg}")


def _run(cmd: list[str], dry_run: bool) -> int:
    _echo("$ " + " ".join(cmd))
    if dry_run:
        return 0
    try:
        return subprocess.call(cmd)
    except FileNotFoundError as e:
        raise ValidationError(f"Command not found: {cmd[0]} ({e})")


def run_once(name: str, command: list[str], out_path: Path, dry_run: bool) -> RunResult:
    start = time.perf_counter()
    cmd = [sys.executable, "-m", "semispec.cli", *command, "--out", str(out_path)]
    exit_code = _run(cmd, dry_run)
    seconds = time.perf_counter() - start
    if dry_run:
        return RunResult(name=name, seconds=seconds, exit_code=0, note="dry run")
    if not out_path.exists():
        return RunResult(
            name=name, seconds=seconds, exit_code=exit_code, note="no artifact written"
        )
    return RunResult(name=name, seconds=seconds, exit_code=exit_code, digest=sha256_file(out_path))


def validate(command: list[str], dry_run: bool = False, workdir: Path | None = None) -> Report:
    if not command:
        raise ValidationError("No semispec command given")
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        runs = [run_once(f"run{i}", command, Path(tmp) / f"run{i}.json", dry_run) for i in (1, 2)]

    reasons = []
    if len({r.exit_code for r in runs}) != 1:
        reasons.append(f"exit codes differ: {[r.exit_code for r in runs]}")
    if not dry_run:
        if any(not r.digest for r in runs):
            reasons.append("a run wrote no artifact")
        elif runs[0].digest != runs[1].digest:
            reasons.append("artifacts differ byte-wise")
    return Report(command=command, runs=runs, passed_all=not reasons, reason="; ".join(reasons))


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    p = argparse.ArgumentParser(
        description="Run a semispec command twice and compare output digests."
    )
    p.add_argument("--dry-run", action="store_true", help="Print the plan without executing")
    p.add_argument(
        "command", nargs=argparse.REMAINDER, help="semispec subcommand and flags (after --)"
    )
    return p.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    command = args.command[1:] if args.command[:1] == ["--"] else list(args.command)
    try:
        report = validate(command, dry_run=args.dry_run)
        _echo(report.to_json())
        return 0 if report.passed_all else 2
    except ValidationError as e:
        _echo(json.dumps({"error": str(e)}, indent=2))
        return 2
    except Exception as e:
        _echo(json.dumps({"unexpected": f"{e.__class__.__name__}: {e}"}))
        return 3


if __name__ == "__main__":
    sys.exit(main())
