#!/usr/bin/env python3
"""
semispec command-line interface.

Usage:
  semispec check-assumptions --config harmonic-complex-1d
  semispec check-dynamics    --config flat-well-1d --T 1.0
  semispec build-weight      --config problem.json --epsilon 0.01 --delta 0.1 --out report.json
  semispec quad-spectrum     --config problem.json --count 10 [--oracle 60]
  semispec eigs              --config problem.json --h 0.05 --N 256 --L 12 --k 5
  semispec pseudospectrum    --config problem.json --h 0.05 --box "-0.1,0.4,-0.1,0.4" --res 256
                             --out field.csv
  semispec scaling-study     --config problem.json --h-list 0.1,0.05,0.025,0.0125 --C 4 --rho 0.3
  semispec lattice-compare   --config problem.json --h-list 0.1,0.05,0.025,0.0125 --count 3
  semispec fbi-verify        --h-list 0.4,0.2,0.1,0.05 --out fbi_report.json

--config takes a JSON/YAML file or the bare name of a bundled problem.
Reports go to --out (written atomically) or to stdout.

Exit codes:
  0  Success / verdict PASS
  1  Verdict FAIL
  2  Configuration or argument error (pointer to the offending field)
  3  Numerical failure or unexpected error
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable, Iterator, Sequence

import numpy as np

from semispec import bargmann, dynamics, operator, quadmodel, resolvent, symbols, weight
from semispec.artifacts import dumps, write_csv, write_json
from semispec.catalog import problem_names
from semispec.config import ProblemConfig, load_config
from semispec.errors import ConfigError, SemispecError
from semispec.init_logger import ensure_logging, get_logger
from semispec.parallel import resolve_threads

logger = get_logger(__name__)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


@dataclasses.dataclass
class CommandResult:
    command: str
    problem: str | None
    result: Any
    verdict: str | None = None
    frame: Any = None  # pandas.DataFrame for CSV-producing commands

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "problem": self.problem,
            "verdict": self.verdict,
            "result": self.result,
        }


def _echo(msg: str) -> None:
    print(f"[semispec] {msg}", file=sys.stderr)


def _verdict(passed: bool) -> str:
    return "PASS" if passed else "FAIL"


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _resolution(text: str) -> int:
    value = int(text)
    top = resolvent.MAX_RESOLUTION
    if not 2 <= value <= top:
        raise argparse.ArgumentTypeError(f"resolution must lie in [2, {top}], got {text!r}")
    return value


def _box(text: str) -> resolvent.ComplexBox:
    try:
        return resolvent.ComplexBox.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


@contextmanager
def _argument(pointer: str) -> Iterator[None]:
    """Re-raise a ValueError from applying a command-line value as a ConfigError at `pointer`."""
    try:
        yield
    except ValueError as exc:
        raise ConfigError(pointer, str(exc)) from exc


def _grid(cfg: ProblemConfig, args: argparse.Namespace) -> operator.GridSpec:
    overrides = {k: getattr(args, k) for k in ("N", "L") if getattr(args, k, None) is not None}
    with _argument("grid"):
        return dataclasses.replace(cfg.grid, **overrides) if overrides else cfg.grid


def _h_list(cfg: ProblemConfig, args: argparse.Namespace, minimum: int) -> list[float]:
    with _argument("--h-list"):
        return resolvent.check_h_list(args.h_list or cfg.study.h_list, minimum)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_check_assumptions(cfg: ProblemConfig, args: argparse.Namespace) -> CommandResult:
    spec = cfg.spec
    radius = args.box_radius or (2.0 * spec.flatten_radius if spec.flatten_radius else 4.0)
    per_axis = args.points_per_axis or (41 if spec.n == 1 else 13)
    report = symbols.check_assumptions(spec, symbols.SampleBox(radius, per_axis))
    return CommandResult("check-assumptions", spec.name, report.to_dict(), _verdict(report.all_ok))


def cmd_check_dynamics(cfg: ProblemConfig, args: argparse.Namespace) -> CommandResult:
    T = args.T or cfg.study.T
    if not T > 0:
        raise ConfigError("--T", f"averaging window must be positive, got {T}")
    report = dynamics.check_dyn_conditions(cfg.spec, T=T, threads=args.threads)
    result = dataclasses.asdict(report)
    result["gronwall_constant"] = dynamics.check_gronwall(cfg.spec, T=T, threads=args.threads)
    return CommandResult("check-dynamics", cfg.spec.name, result, _verdict(report.passed))


def cmd_build_weight(cfg: ProblemConfig, args: argparse.Namespace) -> CommandResult:
    overrides = {
        k: getattr(args, k) for k in ("epsilon", "delta", "T") if getattr(args, k) is not None
    }
    with _argument("weight"):
        params = dataclasses.replace(cfg.weight, **overrides)
    report = weight.verify_ellipticity(cfg.spec, params, threads=args.threads)
    report.cohomology_residual = weight.verify_cohomology(
        cfg.spec, params, samples=args.samples, threads=args.threads
    )
    return CommandResult(
        "build-weight", cfg.spec.name, dataclasses.asdict(report), _verdict(report.passed)
    )


def cmd_quad_spectrum(cfg: ProblemConfig, args: argparse.Namespace) -> CommandResult:
    qm = quadmodel.quadratic_model(cfg.spec)
    lattice = quadmodel.quad_spectrum(qm, args.count)
    result = lattice.to_dict()
    result["subprincipal_shift"] = cfg.spec.subprincipal_at_origin()
    result["multi_indices"] = [list(r) for r in lattice.multi_indices]
    verdict = None
    if args.oracle is not None:
        oracle = quadmodel.galerkin_oracle(qm, args.oracle, args.count)
        _, dev = resolvent.match_to_lattice(oracle, lattice.eigenvalues)
        result["oracle"] = {
            "basis": args.oracle,
            "eigenvalues": oracle,
            "residual": float(np.max(dev)),
        }
        verdict = _verdict(float(np.max(dev)) <= args.oracle_tol)
    return CommandResult("quad-spectrum", cfg.spec.name, result, verdict)


def cmd_eigs(cfg: ProblemConfig, args: argparse.Namespace) -> CommandResult:
    h = args.h or cfg.study.h_list[0]
    op = operator.discretize(cfg.spec, h, _grid(cfg, args))
    k = args.k or cfg.study.count
    values = operator.low_eigenvalues(op, k, method=args.method)
    lattice = quadmodel.quad_spectrum(quadmodel.quadratic_model(cfg.spec), k + 2).eigenvalues
    _, dev = resolvent.match_to_lattice(values / h, lattice + cfg.spec.subprincipal_at_origin())
    result = {
        "h": h,
        "grid": op.grid.to_dict(),
        "eigenvalues": values,
        "scaled": values / h,
        "lattice_deviation": dev,
        "commutator_norm": operator.is_non_normal(op),
    }
    return CommandResult("eigs", cfg.spec.name, result)


def cmd_pseudospectrum(cfg: ProblemConfig, args: argparse.Namespace) -> CommandResult:
    h = args.h or cfg.study.h_list[0]
    op = operator.discretize(cfg.spec, h, _grid(cfg, args))
    box = args.box or resolvent.ComplexBox.disk_cover(cfg.study.C * h)
    field = resolvent.pseudospectrum(op, box, args.res, threads=args.threads)
    summary = {
        "h": h,
        "box": dataclasses.asdict(box),
        "resolution": args.res,
        "sigma_min": float(np.min(field.sigma_min)),
    }
    return CommandResult("pseudospectrum", cfg.spec.name, summary, frame=field.to_frame())


def cmd_scaling_study(cfg: ProblemConfig, args: argparse.Namespace) -> CommandResult:
    study = cfg.study
    report = resolvent.scaling_study(
        cfg.spec,
        _h_list(cfg, args, resolvent.MIN_SCALING_H),
        C=args.C or study.C,
        rho=args.rho or study.rho,
        samples_per_h=args.samples or study.samples_per_h,
        grid=_grid(cfg, args),
        threads=args.threads,
    )
    return CommandResult("scaling-study", cfg.spec.name, dataclasses.asdict(report), report.verdict)


def cmd_lattice_compare(cfg: ProblemConfig, args: argparse.Namespace) -> CommandResult:
    comparison = resolvent.lattice_compare(
        cfg.spec,
        _h_list(cfg, args, resolvent.MIN_COMPARE_H),
        count=args.count or cfg.study.count,
        grid=_grid(cfg, args),
    )
    return CommandResult("lattice-compare", cfg.spec.name, comparison.to_dict(), comparison.verdict)


def cmd_fbi_verify(cfg: ProblemConfig | None, args: argparse.Namespace) -> CommandResult:
    report = bargmann.fbi_verify(args.h_list or [0.4, 0.2, 0.1, 0.05])
    return CommandResult("fbi-verify", None, dataclasses.asdict(report), _verdict(report.passed))


COMMANDS: dict[str, Callable[..., CommandResult]] = {
    "check-assumptions": cmd_check_assumptions,
    "check-dynamics": cmd_check_dynamics,
    "build-weight": cmd_build_weight,
    "quad-spectrum": cmd_quad_spectrum,
    "eigs": cmd_eigs,
    "pseudospectrum": cmd_pseudospectrum,
    "scaling-study": cmd_scaling_study,
    "lattice-compare": cmd_lattice_compare,
    "fbi-verify": cmd_fbi_verify,
}
CONFIG_OPTIONAL = {"fbi-verify"}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    p = argparse.ArgumentParser(
        prog="semispec", description="Semiclassical spectral localization checks."
    )
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", help=f"Config file or bundled problem ({', '.join(problem_names())})"
    )
    common.add_argument("--out", type=Path, help="Output file (default: stdout)")
    common.add_argument(
        "--threads", type=int, default=None, help="Worker threads (default: $SEMISPEC_THREADS or 1)"
    )

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--N", type=int, help="Grid points per axis")
    grid.add_argument("--L", type=float, help="Box half-width")

    s = sub.add_parser("check-assumptions", parents=[common], help="Check the standing assumptions")
    s.add_argument("--box-radius", type=float)
    s.add_argument("--points-per-axis", type=int)

    s = sub.add_parser(
        "check-dynamics", parents=[common], help="Check the averaged dynamical conditions"
    )
    s.add_argument("--T", type=float)

    s = sub.add_parser(
        "build-weight", parents=[common], help="Build the escape weight and verify ellipticity"
    )
    s.add_argument("--epsilon", type=float)
    s.add_argument("--delta", type=float)
    s.add_argument("--T", type=float)
    s.add_argument("--samples", type=_positive_int, default=50, help="Cohomology samples")

    s = sub.add_parser("quad-spectrum", parents=[common], help="Lattice of the quadratic model")
    s.add_argument("--count", type=_positive_int, default=5)
    s.add_argument(
        "--oracle",
        type=_positive_int,
        default=None,
        help="Hermite basis size for the Galerkin cross-check",
    )
    s.add_argument("--oracle-tol", type=float, default=1e-6)

    s = sub.add_parser(
        "eigs", parents=[common, grid], help="Low eigenvalues of the discretized operator"
    )
    s.add_argument("--h", type=float)
    s.add_argument("--k", type=_positive_int)
    s.add_argument("--method", choices=("auto", "dense", "shift_invert"), default="auto")

    s = sub.add_parser("pseudospectrum", parents=[common, grid], help="sigma_min field as CSV")
    s.add_argument("--h", type=float)
    s.add_argument("--box", type=_box, help='"re_min,re_max,im_min,im_max" in lambda units')
    s.add_argument("--res", type=_resolution, default=64)

    s = sub.add_parser(
        "scaling-study", parents=[common, grid], help="h-scaling of the resolvent norm"
    )
    s.add_argument("--h-list", type=_float_list)
    s.add_argument("--C", type=float)
    s.add_argument("--rho", type=float)
    s.add_argument("--samples", type=_positive_int, help="Angles per sample ring")

    s = sub.add_parser(
        "lattice-compare", parents=[common, grid], help="Eigenvalues against the shifted lattice"
    )
    s.add_argument("--h-list", type=_float_list)
    s.add_argument("--count", type=_positive_int)

    s = sub.add_parser(
        "fbi-verify", parents=[common], help="FBI unitarity and quantization-multiplication"
    )
    s.add_argument("--h-list", type=_float_list)

    return p.parse_args(argv)


def _emit(outcome: CommandResult, out: Path | None) -> None:
    if outcome.frame is not None:
        if out is None:
            sys.stdout.write(outcome.frame.to_csv(index=False, float_format="%.17g"))
        else:
            write_csv(out, outcome.frame)
            _echo(dumps(outcome.to_dict()).rstrip())
        return
    if out is None:
        sys.stdout.write(dumps(outcome.to_dict()))
    else:
        write_json(out, outcome.to_dict())


def main(argv: Sequence[str] | None = None) -> int:
    args = parse_args(argv)
    ensure_logging()
    try:
        with _argument("--threads"):
            args.threads = resolve_threads(args.threads)
        cfg = None
        if args.config is not None:
            cfg = load_config(args.config)
        elif args.command not in CONFIG_OPTIONAL:
            raise ConfigError("config", "--config is required for this command")
        outcome = COMMANDS[args.command](cfg, args)
        _emit(outcome, args.out)
        if args.out is not None:
            _echo(f"{args.command}: wrote {args.out}")
        if outcome.verdict is not None:
            _echo(f"{args.command}: {outcome.verdict}")
        return EXIT_FAIL if outcome.verdict == "FAIL" else EXIT_OK
    except ConfigError as e:
        logger.error("Configuration error at %s", e.pointer)
        _echo(json.dumps(e.to_dict()))
        return EXIT_CONFIG
    except ValueError as e:
        logger.error("Numerical failure: %s", e)
        _echo(json.dumps({"error": "ValueError", "message": str(e)}))
        return EXIT_NUMERIC
    except SemispecError as e:
        logger.error("%s: %s", e.__class__.__name__, e)
        _echo(json.dumps(e.to_dict()))
        return EXIT_NUMERIC
    except Exception as e:
        logger.exception("Unexpected failure")
        _echo(json.dumps({"unexpected": f"{e.__class__.__name__}: {e}"}))
        return EXIT_NUMERIC


def run(command: str, config_path: str | Path | None, flags: Sequence[str] = ()) -> int:
    """Programmatic entry point: run(command, config, ["--count", "3"])."""
    argv = [command]
    if config_path is not None:
        argv += ["--config", str(config_path)]
    return main([*argv, *flags])


if __name__ == "__main__":
    sys.exit(main())
