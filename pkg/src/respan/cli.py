"""Command-line front end: instance generation, runs, parameter estimation, reports.

Exit codes: 0 success, 2 validation error, 3 solver failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import io
from .flp import InstanceError, _require_valid
from .generator import GenSpec, generate
from .lp import LpError, SolverError
from .metrics import compare
from .pipeline import RunRecord, SolveFailed, run_flp, run_sm
from .screening import EstimationError, ScreeningParams, estimate_params

logger = logging.getLogger("respan")

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4
SOLVERS = ("reference", "highs", "mps")
DEFAULT_TOLERANCES = {"feasibility": 1e-6}


class ConfigError(ValueError):
    pass


class ResidualError(RuntimeError):
    """Extracted design violates a constraint beyond the configured tolerance."""


def _load_json(path: str | Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise io.FormatError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return data


def _dump_json(data: dict, path: Path) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


@dataclass
class RunConfig:
    instance: Path
    output_dir: Path
    solver: str = "highs"
    screening: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    @classmethod
    def from_dict(cls, data: dict, base: Path = Path(".")) -> "RunConfig":
        """Parse a config object; relative paths resolve against ``base``.

        ``screening`` may be an object with any of ``delta_tau``, ``xi`` (a
        number for every bus, or a per-bus object), ``selection_threshold``
        and ``peak_steps``, or the path of a params file.
        """
        unknown = set(data) - {"instance", "output_dir", "solver", "screening", "tolerances"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "instance" not in data:
            raise ConfigError("config needs an 'instance' path")
        screening = data.get("screening") or {}
        if isinstance(screening, str):
            screening = _load_json(base / screening)
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(data.get("tolerances") or {})
        cfg = cls(
            instance=base / data["instance"],
            output_dir=base / data.get("output_dir", "."),
            solver=str(data.get("solver", "highs")),
            screening=dict(screening),
            tolerances=tol,
        )
        cfg.check()
        return cfg

    def check(self) -> None:
        if not self.instance.is_dir():
            raise ConfigError(f"instance directory {self.instance} does not exist")
        name = self.solver.split(":", 1)[0]
        if name not in SOLVERS or (name != "mps" and ":" in self.solver):
            raise ConfigError(f"solver must be one of reference, highs, mps[:command]; got {self.solver!r}")
        for k, v in self.tolerances.items():
            if not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"tolerance {k!r} must be > 0, got {v!r}")
        unknown = set(self.screening) - {"delta_tau", "xi", "selection_threshold", "peak_steps", "source"}
        if unknown:
            raise ConfigError(f"unknown screening keys: {sorted(unknown)}")

    def to_dict(self) -> dict:
        return {
            "instance": str(self.instance),
            "output_dir": str(self.output_dir),
            "solver": self.solver,
            "screening": self.screening,
            "tolerances": self.tolerances,
        }


def load_config(path: str | Path, overrides: argparse.Namespace | None = None) -> RunConfig:
    path = Path(path)
    data = _load_json(path)
    if overrides is not None:
        if getattr(overrides, "out", None):
            data["output_dir"] = str(Path(overrides.out).resolve())
        if getattr(overrides, "solver", None):
            data["solver"] = overrides.solver
    return RunConfig.from_dict(data, base=path.resolve().parent)


def _load_instance(cfg: RunConfig):
    inst = io.read_instance(cfg.instance)
    _require_valid(inst)
    return inst


def resolve_params(inst, screening: dict) -> tuple[ScreeningParams, str]:
    """Estimate whatever the overrides leave open.

    Returns the parameters and their source: ``estimated``, ``override`` or
    ``mixed``.
    """
    given = {k for k in ("delta_tau", "xi") if k in screening}
    delta_tau = screening.get("delta_tau")
    est = estimate_params(
        inst,
        delta_tau=int(delta_tau) if delta_tau is not None else None,
        selection_threshold=float(screening.get("selection_threshold", 1.0)),
        peak_steps=int(screening.get("peak_steps", 1)),
    )
    if "xi" in screening:
        xi = screening["xi"]
        if isinstance(xi, (int, float)):
            xi = {b: float(xi) for b in inst.bus_ids}
        est.xi = {str(k): float(v) for k, v in xi.items()}
    try:
        est.check(inst)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    source = "override" if given == {"delta_tau", "xi"} else "mixed" if given else "estimated"
    return est, source


def _check_residuals(rec: RunRecord, tol: float) -> None:
    bad = {k: v for k, v in rec.residuals.items() if v > tol}
    if bad:
        raise ResidualError(f"{rec.model} design exceeds feasibility tolerance {tol}: {bad}")


def _run_json(rec: RunRecord, cfg: RunConfig) -> dict:
    out = rec.to_dict()
    out["instance"] = str(cfg.instance.resolve())
    out["config"] = cfg.to_dict()
    return out


# -- commands ------------------------------------------------------------------

def cmd_gen(args) -> int:
    spec = GenSpec.from_dict(_load_json(args.spec))
    inst = generate(spec)
    io.write_instance(inst, args.out)
    print(f"wrote instance with {len(inst.buses)} buses, {len(inst.sites)} sites, "
          f"{inst.T} steps to {args.out}")
    return EXIT_OK


def cmd_run_flp(args) -> int:
    cfg = load_config(args.config, args)
    inst = _load_instance(cfg)
    rec = run_flp(inst, cfg.solver)
    _check_residuals(rec, cfg.tolerances["feasibility"])
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(_run_json(rec, cfg), out / "flp_run.json")
    io.write_design(rec.design, inst, out)
    print(f"FLP objective {rec.objective:.6g} ({rec.variables} variables, {rec.solve_time:.2f} s)")
    return EXIT_OK


def cmd_run_sm(args) -> int:
    cfg = load_config(args.config, args)
    inst = _load_instance(cfg)
    params, source = resolve_params(inst, cfg.screening)
    site, rlp = run_sm(inst, params, cfg.solver)
    site.params_source = source
    _check_residuals(rlp, cfg.tolerances["feasibility"])
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(_run_json(site, cfg), out / "site_run.json")
    _dump_json(_run_json(rlp, cfg), out / "rlp_run.json")
    io.write_design(rlp.design, inst, out)
    io.write_retained(inst, site.screening.retained, site.screening.capacity, out)
    kept = len(site.screening.retained_ids())
    print(f"retained {kept}/{len(inst.sites)} sites; RLP objective {rlp.objective:.6g}")
    return EXIT_OK


def cmd_estimate_params(args) -> int:
    cfg = load_config(args.config, args)
    inst = _load_instance(cfg)
    params, source = resolve_params(inst, cfg.screening)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    data = params.to_dict()
    data["source"] = source
    _dump_json(data, out / "params.json")
    print(f"delta_tau={params.delta_tau} xi={data['xi']}")
    return EXIT_OK


def cmd_compare(args) -> int:
    flp_dir, sm_dir = Path(args.flp_dir), Path(args.sm_dir)
    flp = _load_json(flp_dir / "flp_run.json")
    site = _load_json(sm_dir / "site_run.json")
    rlp = _load_json(sm_dir / "rlp_run.json")
    paths = {flp.get("instance"), site.get("instance"), rlp.get("instance")}
    if len(paths) != 1 or None in paths:
        raise ConfigError(f"runs refer to different instances: {sorted(map(str, paths))}")
    inst = io.read_instance(paths.pop())
    report = compare(inst, flp, site, rlp)
    out = Path(args.out) if args.out else sm_dir
    report.write(out)
    print(f"TSCE {100 * report.tsce:.3f}%; variable reduction {report.deltas['variables']:.1f}%")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="respan",
        description="Renewable site screening for capacity expansion planning.",
        epilog="Exit codes: 2 validation, 3 solver failure, 4 I/O. "
               "REsPAN_THREADS caps solver threads.",
    )
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic instance directory")
    g.add_argument("spec", help="generator spec (JSON)")
    g.add_argument("out", help="instance directory to write")
    g.set_defaults(func=cmd_gen)

    for name, func, text in (
        ("run-flp", cmd_run_flp, "solve the full model"),
        ("run-sm", cmd_run_sm, "screen sites, then solve the reduced model"),
        ("estimate-params", cmd_estimate_params, "estimate screening parameters"),
    ):
        c = sub.add_parser(name, help=text)
        c.add_argument("config", help="run config (JSON)")
        c.add_argument("--out", help="override the config output directory")
        c.add_argument("--solver", help="override the solver: reference, highs or mps[:command]")
        c.set_defaults(func=func)

    c = sub.add_parser("compare", help="compare a full-model run with a two-stage run")
    c.add_argument("flp_dir", help="directory holding flp_run.json")
    c.add_argument("sm_dir", help="directory holding site_run.json and rlp_run.json")
    c.add_argument("--out", help="report directory (default: sm_dir)")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SolveFailed, SolverError, LpError, ResidualError) as exc:
        code, msg = EXIT_SOLVER, exc
    except InstanceError as exc:
        code, msg = EXIT_VALIDATION, "; ".join(f"{f.entity}.{f.field}: {f.rule}" for f in exc.findings)
    except (ConfigError, EstimationError, ValueError, TypeError) as exc:
        code, msg = EXIT_VALIDATION, exc
    except OSError as exc:
        code, msg = EXIT_IO, exc
    print(f"respan: error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
