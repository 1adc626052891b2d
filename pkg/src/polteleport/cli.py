"""Command-line front end.

Subcommands emit CSV (12 significant digits) or JSON rows in a fixed order,
so repeated runs with one configuration are byte-identical. Any flag may also
come from a ``--config`` file of ``key = value`` lines; flags on the command
line win.

Exit codes: 0 success, 1 validation or strict-oracle failure, 2 bad arguments.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from .errors import DomainError, GainError, OptimizationError, ParameterError
from .fluct import SourceRegistry
from .metrics import (
    conditional_variances,
    transfer_coefficients,
    tv_trajectory,
    unity_gain_locus,
    with_gain,
)
from .optics import AMPLITUDE, PHASE, make_mode
from .optimizer import DEFAULT_GRID, BET_REGIMES, fidelity_problem, maximize, sweep, tv_problem
from .protocols import SCHEMES, ProtocolParams, simulate
from .stokes import PolarizationState, stokes_statistics, uncertainty_check

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SIG_DIGITS = 12


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parsing
def parse_squeezing(text: str) -> float:
    """A variance in (0, 1] or a squeezing level such as ``3dB``."""
    t = text.strip()
    if t.lower().endswith("db"):
        db = float(t[:-2])
        if db < 0:
            raise UsageError(f"squeezing in dB must be non-negative, got {text!r}")
        return 10.0 ** (-db / 10.0)
    v = float(t)
    if not 0.0 < v <= 1.0:
        raise UsageError(f"squeezing variance must lie in (0, 1], got {text!r}")
    return v


def parse_list(text: str, item=float) -> list[float]:
    """Comma-separated values, ``a:b:n`` (linear) or ``log:a:b:n`` (geometric)."""
    t = text.strip()
    if t.startswith("log:"):
        parts = t[4:].split(":")
        if len(parts) != 3:
            raise UsageError(f"expected log:a:b:n, got {text!r}")
        a, b, n = item(parts[0]), item(parts[1]), int(parts[2])
        if n < 1 or a <= 0 or b <= 0:
            raise UsageError(f"geometric range needs positive ends and n >= 1: {text!r}")
        return [float(x) for x in np.geomspace(a, b, n)]
    if ":" in t:
        parts = t.split(":")
        if len(parts) != 3:
            raise UsageError(f"expected a:b:n, got {text!r}")
        a, b, n = item(parts[0]), item(parts[1]), int(parts[2])
        if n < 1:
            raise UsageError(f"range needs n >= 1: {text!r}")
        return [float(x) for x in np.linspace(a, b, n)]
    return [item(x) for x in t.split(",") if x.strip()]


def parse_mode_spec(text: str) -> tuple[str, float]:
    """``plus:0.5`` or ``minus:0.5`` for a squeezed quadrature and its variance."""
    try:
        quad, val = text.split(":")
        v = float(val)
    except ValueError:
        raise UsageError(f"expected plus:V or minus:V, got {text!r}") from None
    quad = {"plus": AMPLITUDE, "minus": PHASE, "amplitude": AMPLITUDE, "phase": PHASE}.get(quad.strip())
    if quad is None or not v > 0:
        raise UsageError(f"expected plus:V or minus:V with V > 0, got {text!r}")
    return quad, v


def read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


# ---------------------------------------------------------------- config
@dataclass
class RunConfig:
    """Everything a run depends on; serializable as ``key = value`` lines."""

    command: str
    scheme: str = "twin"
    vsq: list[float] = field(default_factory=lambda: [1.0])
    vsq3: float | None = None
    sq3_quadrature: str | None = None
    polarity: int = 1
    eps1: float | None = None
    eps2: float | None = None
    gain: list[float] = field(default_factory=lambda: [1.0])
    which: str = "all"
    locus: list[float] = field(default_factory=lambda: [float(x) for x in np.geomspace(1.0, 1e-4, 21)])
    objective: str = "fidelity"
    vcv_max: float = 1.0
    regimes: bool = False
    grid: int = DEFAULT_GRID
    format: str = "csv"
    out: str | None = None
    strict: bool = False
    tol: float = 1e-6
    parallel: int = 1
    seed: int | None = None

    def params(self, vsq: float) -> ProtocolParams:
        return ProtocolParams(
            self.scheme,
            vsq=vsq,
            vsq3=vsq if self.vsq3 is None else self.vsq3,
            sq3_quadrature=self.sq3_quadrature,
            eps1=self.eps1,
            eps2=self.eps2,
            polarity=self.polarity,
        )

    def dumps(self) -> str:
        lines = []
        for k, v in asdict(self).items():
            if v is None or k == "command":
                continue
            if isinstance(v, list):
                v = ",".join(_num(x) for x in v)
            elif isinstance(v, float):
                v = _num(v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"


_CONVERTERS = {
    "scheme": str,
    "vsq": lambda s: [parse_squeezing(x) for x in _expand(s)],
    "vsq3": parse_squeezing,
    "sq3_quadrature": str,
    "polarity": int,
    "eps1": float,
    "eps2": float,
    "gain": parse_list,
    "which": str,
    "locus": lambda s: [parse_squeezing(x) for x in _expand(s)],
    "objective": str,
    "vcv_max": float,
    "regimes": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "grid": int,
    "format": str,
    "out": str,
    "strict": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "tol": float,
    "parallel": int,
    "seed": int,
}


def _expand(text: str) -> list[str]:
    """Squeezing lists accept dB items, so ranges are expanded before conversion."""
    t = text.strip()
    if ":" in t and "db" not in t.lower():
        return [repr(x) for x in parse_list(t)]
    return [x for x in t.split(",") if x.strip()]


def build_config(command: str, args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command)
    merged: dict[str, str] = {}
    if getattr(args, "config", None):
        merged.update(read_config(args.config))
    for key in _CONVERTERS:
        val = getattr(args, key, None)
        if val is None or val is False:
            continue
        merged[key] = val if isinstance(val, str) else str(val)
    unknown = sorted(set(merged) - set(_CONVERTERS))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    for key, raw in merged.items():
        try:
            setattr(cfg, key, _CONVERTERS[key](raw))
        except (ValueError, UsageError) as exc:
            raise UsageError(f"bad value for {key}: {raw!r} ({exc})") from None
    if cfg.scheme not in SCHEMES:
        raise UsageError(f"--scheme must be one of {', '.join(SCHEMES)}")
    if cfg.format not in ("csv", "json"):
        raise UsageError("--format must be csv or json")
    if cfg.grid < 2:
        raise UsageError("--grid must be at least 2")
    if cfg.parallel < 1:
        raise UsageError("--parallel must be at least 1")
    return cfg


# ---------------------------------------------------------------- output
def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), f".{SIG_DIGITS}g")
    return str(x)


def _json_value(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return float(_num(x)) if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def render(rows: Sequence[dict[str, Any]], columns: Sequence[str], fmt: str) -> str:
    if fmt == "json":
        data = [{c: _json_value(r.get(c)) for c in columns} for r in rows]
        return json.dumps(data, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_num(r.get(c)) for c in columns])
    return buf.getvalue()


def emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands
SWEEP_COLUMNS = ("scheme", "V_SQ", "V_SQ3", "eps1", "eps2", "fidelity", "fidelity_closed_form", "abs_diff")


def cmd_sweep_fidelity(cfg: RunConfig) -> int:
    template = cfg.params(cfg.vsq[0])
    free = tuple(n for n in ("eps1", "eps2") if getattr(cfg, n) is None)
    rows = sweep(template, cfg.vsq, tie_vsq3=cfg.vsq3 is None, free=free, grid=cfg.grid, parallel=cfg.parallel)
    table = [
        {
            "scheme": r.scheme,
            "V_SQ": r.vsq,
            "V_SQ3": r.vsq3,
            "eps1": r.eps1,
            "eps2": r.eps2,
            "fidelity": r.fidelity,
            "fidelity_closed_form": r.fidelity_closed_form,
            "abs_diff": r.abs_diff,
        }
        for r in rows
    ]
    emit(render(table, SWEEP_COLUMNS, cfg.format), cfg.out)
    if cfg.strict:
        bad = [r for r in rows if r.abs_diff is not None and r.abs_diff > cfg.tol]
        if bad:
            print(f"strict: {len(bad)} rows differ from the closed form by more than {cfg.tol}", file=sys.stderr)
            return EXIT_FAIL
    return EXIT_OK


TV_COLUMNS = ("block", "scheme", "V_SQ", "V_SQ3", "gain", "T_q", "V_cv")


def _identity_defect(params: ProtocolParams) -> float:
    outcome = simulate(params)
    t = transfer_coefficients(outcome)
    vcv = conditional_variances(outcome)
    return max(abs(vcv[k] - outcome.stats(k).v_out_no_signal * (1 - t[k])) for k in t if k != "Tq")


def cmd_tv(cfg: RunConfig) -> int:
    if sorted(cfg.gain) != list(cfg.gain):
        raise UsageError("--gain sweep must be non-decreasing")
    rows = []
    worst = 0.0
    for v in cfg.vsq:
        p = cfg.params(v)
        for pt in tv_trajectory(p, cfg.gain, which=cfg.which):
            rows.append({"block": "trajectory", "scheme": cfg.scheme, "V_SQ": v, "V_SQ3": p.vsq3,
                         "gain": pt.gain, "T_q": pt.tq, "V_cv": pt.vcv})
        if cfg.strict:
            worst = max(worst, *(_identity_defect(with_gain(p, g, cfg.which)) for g in cfg.gain))
    template = cfg.params(cfg.locus[0])
    for v, pt in unity_gain_locus(template, cfg.locus, tie_vsq3=cfg.vsq3 is None):
        rows.append({"block": "locus", "scheme": cfg.scheme, "V_SQ": v,
                     "V_SQ3": v if cfg.vsq3 is None else cfg.vsq3, "gain": 1.0, "T_q": pt.tq, "V_cv": pt.vcv})
    emit(render(rows, TV_COLUMNS, cfg.format), cfg.out)
    if cfg.strict and worst > cfg.tol:
        print(f"strict: conditional-variance identity violated by {worst:.3g}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


OPT_COLUMNS = ("scheme", "objective", "V_SQ", "V_SQ3", "sq3_quadrature", "polarity",
               "best_value", "grid_value", "evaluations")


def cmd_optimize(cfg: RunConfig) -> int:
    rows = []
    extra: list[str] = []
    for v in cfg.vsq:
        base = cfg.params(v)
        if cfg.regimes:
            if cfg.scheme not in ("bet", "optimized-twin"):
                raise UsageError("--regimes applies to bet and optimized-twin")
            targets = [replace(base, sq3_quadrature=q, polarity=s) for q, s in BET_REGIMES]
        else:
            targets = [base]
        for p in targets:
            if cfg.objective == "fidelity":
                free = tuple(n for n in ("eps1", "eps2") if getattr(cfg, n) is None)
                if cfg.scheme not in ("bet", "optimized-twin"):
                    free = ()
                problem = fidelity_problem(p, free=free, grid=cfg.grid)
            elif cfg.objective == "tq":
                free = ("v_plus",)
                problem = tv_problem(p, cfg.vcv_max, free=free, grid=cfg.grid)
            else:
                raise UsageError("--objective must be fidelity or tq")
            res = maximize(problem)
            r = p.resolved()
            row = {"scheme": r.scheme, "objective": cfg.objective, "V_SQ": r.vsq, "V_SQ3": r.vsq3,
                   "sq3_quadrature": r.sq3_quadrature, "polarity": r.polarity, "best_value": res.best_value,
                   "grid_value": res.grid_value, "evaluations": res.evaluations}
            for k, val in res.best_params.items():
                row[k] = val
                if k not in extra:
                    extra.append(k)
            rows.append(row)
    emit(render(rows, OPT_COLUMNS + tuple(extra), cfg.format), cfg.out)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    from .validation import DEFAULT_SEED, four_squeezer_report, run_criterion, CRITERIA

    only = sorted(int(x) for x in parse_list(args.only, int)) if args.only else sorted(CRITERIA)
    unknown = [n for n in only if n not in CRITERIA]
    if unknown:
        raise UsageError(f"unknown criteria {unknown}")
    seed = DEFAULT_SEED if args.seed is None else args.seed
    results = []
    for n in only:
        res = run_criterion(n, seed=seed, tamper=args.negative_control)
        print(res.line(), flush=True)
        results.append(res)
    if not args.no_report:
        print(four_squeezer_report().text)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_FAIL if failed else EXIT_OK


def _stokes_mode(reg: SourceRegistry, alpha: float, squeeze: str | None, signal: float, label: str):
    sig = (signal, signal) if signal > 0 else None
    if squeeze:
        quad, v = parse_mode_spec(squeeze)
        return make_mode(reg, "squeezed", alpha=alpha, variance=v, quadrature=quad, signal=sig, label=label)
    return make_mode(reg, "coherent", alpha=alpha, signal=sig, label=label)


def cmd_stokes(args: argparse.Namespace) -> int:
    if args.aH < 0 or args.aV < 0:
        raise UsageError("--aH and --aV must be non-negative")
    reg = SourceRegistry()
    h = _stokes_mode(reg, args.aH, args.h_squeeze, args.h_signal, "H")
    v = _stokes_mode(reg, args.aV, args.v_squeeze, args.v_signal, "V")
    stats = stokes_statistics(PolarizationState(h, v, args.theta))
    rows = [{"quantity": f"<S{i}>", "value": m} for i, m in enumerate(stats.means)]
    rows += [{"quantity": f"V(S{i})", "value": x} for i, x in enumerate(stats.variances)]
    rows.append({"quantity": "poincare_radius", "value": stats.poincare_radius})
    for m in uncertainty_check(stats):
        rows.append({"quantity": f"margin(V{m.l}V{m.m}-<S{m.n}>^2)", "value": m.margin})
    emit(render(rows, ("quantity", "value"), args.format or "csv"), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- argparse
def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; command-line flags take precedence")
    p.add_argument("--scheme", help=f"one of {', '.join(SCHEMES)}")
    p.add_argument("--vsq", help="EPR squeezing: list of variances or dB values, a:b:n or log:a:b:n")
    p.add_argument("--vsq3", help="third-squeezer variance or dB (default: tied to --vsq)")
    p.add_argument("--sq3-quadrature", dest="sq3_quadrature", choices=(AMPLITUDE, PHASE))
    p.add_argument("--polarity", choices=("1", "-1"))
    p.add_argument("--eps1", help="fix the entangling transmittivity instead of optimizing it")
    p.add_argument("--eps2", help="fix the measurement transmittivity instead of optimizing it")
    p.add_argument("--grid", help=f"optimizer grid points per dimension (default {DEFAULT_GRID})")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--strict", action="store_true", default=None, help="exit 1 on any oracle mismatch")
    p.add_argument("--tol", help="strict-mode tolerance (default 1e-6)")
    p.add_argument("--parallel", help="worker processes for sweeps")
    p.add_argument("--dump-config", action="store_true", help="print the resolved configuration and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polteleport", description="Continuous-variable polarisation teleportation models."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep-fidelity", help="fidelity versus squeezing, optimizing free transmittivities")
    _add_common(p)

    p = sub.add_parser("tv", help="T-V points along a gain sweep plus the unity-gain locus")
    _add_common(p)
    p.add_argument("--gain", help="calibrated gains: list, a:b:n or log:a:b:n (non-decreasing)")
    p.add_argument("--which", help="swept gains: all, h, v or a field name (h_plus, v_plus, ...)")
    p.add_argument("--locus", help="squeezing grid for the unity-gain locus")

    p = sub.add_parser("optimize", help="maximize fidelity or T_q at a conditional-variance budget")
    _add_common(p)
    p.add_argument("--objective", choices=("fidelity", "tq"))
    p.add_argument("--vcv-max", dest="vcv_max", help="V_cv budget for --objective tq")
    p.add_argument("--regimes", action="store_true", default=None, help="enumerate all four sign regimes")

    p = sub.add_parser("validate", help="run the acceptance criteria")
    p.add_argument("--only", help="criterion numbers, e.g. 1,2,6")
    p.add_argument("--seed", type=int, help="seed for the randomized criteria")
    p.add_argument("--negative-control", dest="negative_control", choices=("beamsplitter-sign",),
                   help="deliberately break the model to check the suite notices")
    p.add_argument("--no-report", action="store_true", help="skip report-only comparisons")

    p = sub.add_parser("stokes", help="Stokes means, variances and uncertainty margins of a state")
    p.add_argument("--aH", type=float, default=0.0)
    p.add_argument("--aV", type=float, default=0.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--h-squeeze", dest="h_squeeze", help="plus:V or minus:V")
    p.add_argument("--v-squeeze", dest="v_squeeze", help="plus:V or minus:V")
    p.add_argument("--h-signal", dest="h_signal", type=float, default=0.0, help="classical variance per quadrature")
    p.add_argument("--v-signal", dest="v_signal", type=float, default=0.0, help="classical variance per quadrature")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out")
    return parser


_COMMANDS = {"sweep-fidelity": cmd_sweep_fidelity, "tv": cmd_tv, "optimize": cmd_optimize}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "validate":
            return cmd_validate(args)
        if args.command == "stokes":
            return cmd_stokes(args)
        cfg = build_config(args.command, args)
        if args.dump_config:
            emit(cfg.dumps(), cfg.out)
            return EXIT_OK
        return _COMMANDS[args.command](cfg)
    except (UsageError, ParameterError, DomainError, GainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OptimizationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
