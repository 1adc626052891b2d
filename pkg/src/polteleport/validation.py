"""Acceptance checks with measured values, shared by the CLI and the test suite.

Each criterion returns a :class:`CriterionResult` carrying the numbers it
measured, so a failure says by how much. ``run_all`` drives them in order.
"""

from __future__ import annotations

import io
import math
import os
import tempfile
import time
from contextlib import redirect_stdout
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import optics
from .errors import DomainError
from .fluct import FluctuationVector, SourceRegistry, covariance, linear_combination, symplectic_product, variance
from .metrics import (
    closed_form,
    conditional_variances,
    polarization_fidelity,
    transfer_coefficients,
)
from .optics import AMPLITUDE, PHASE, OpticalMode, make_mode, phase_shift
from .optimizer import (
    BET_REGIMES,
    SQUEEZING_FLOOR,
    bet_regimes,
    fidelity_problem,
    maximize,
)
from .protocols import ProtocolParams, quadrature_teleport_outcome, simulate
from .stokes import (
    PolarizationState,
    stokes_means,
    stokes_variances,
    stokes_variances_closed_form,
)

DEFAULT_SEED = 20240611
TAMPER_CHOICES = ("beamsplitter-sign",)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict[str, float] = field(default_factory=dict)
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        values = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        status = "PASS" if self.passed else "FAIL"
        tail = f" ({self.detail})" if self.detail else ""
        return f"[{status}] {self.number:>2} {self.name}: {values}{tail}"


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    return str(v)


def _fid(params: ProtocolParams) -> float:
    return polarization_fidelity(simulate(params)).total


# 1 -------------------------------------------------------------------------
def twin_classical_limit() -> CriterionResult:
    f = _fid(ProtocolParams("twin", vsq=1.0))
    return CriterionResult(1, "twin classical limit", abs(f - 0.25) <= 1e-9, {"fidelity": f, "expected": 0.25})


# 2 -------------------------------------------------------------------------
def twin_oracle() -> CriterionResult:
    grid = np.linspace(0.01, 1.0, 50)
    diffs = [abs(_fid(ProtocolParams("twin", vsq=v)) - closed_form("twin", vsq=v)) for v in grid]
    worst = max(diffs)
    return CriterionResult(2, "twin oracle equivalence", worst <= 1e-9, {"points": len(grid), "max_abs_diff": worst})


# 3 -------------------------------------------------------------------------
def sqd_anchors() -> CriterionResult:
    f11 = _fid(ProtocolParams("sqd", vsq=1.0, vsq3=1.0))
    base = ProtocolParams("sqd", vsq=SQUEEZING_FLOOR)
    res = maximize(fidelity_problem(base, free=("vsq3",), bounds={"vsq3": (SQUEEZING_FLOOR, 1.0)}))
    target = math.sqrt(2.0 / 3.0)
    argmax = res.best_params["vsq3"]
    ok = abs(f11 - 1 / math.sqrt(6)) <= 1e-9 and abs(res.best_value - target) <= 1e-4 and abs(argmax - 1.0) <= 1e-3
    return CriterionResult(
        3,
        "SQD anchors",
        ok,
        {"F(1,1)": f11, "sup_F": res.best_value, "argmax_vsq3": argmax, "target": target},
    )


# 4 -------------------------------------------------------------------------
def sqd_oracle() -> CriterionResult:
    grid = np.linspace(0.05, 1.0, 20)
    worst = 0.0
    for v in grid:
        for v3 in grid:
            sim = _fid(ProtocolParams("sqd", vsq=v, vsq3=v3))
            worst = max(worst, abs(sim - closed_form("sqd", vsq=v, vsq3=v3)))
    return CriterionResult(4, "SQD oracle equivalence", worst <= 1e-9, {"points": 400, "max_abs_diff": worst})


# 5 -------------------------------------------------------------------------
_STAT_FIELDS = ("v_out", "v_out_no_signal", "v_in_no_signal", "covariance", "signal_gain")


def bet_reduction() -> CriterionResult:
    worst = 0.0
    count = 0
    for quad in (AMPLITUDE, PHASE):
        for v, v3, g in ((1.0, 1.0, 1.0), (0.3, 0.5, 1.0), (0.05, 0.2, 2.5), (0.7, 0.01, -0.4)):
            common = dict(vsq=v, vsq3=v3, sq3_quadrature=quad, v_plus=g)
            sqd = simulate(ProtocolParams("sqd", **common))
            bet = simulate(ProtocolParams("bet", eps1=1.0, eps2=0.0, **common))
            for key in sqd.quadrature_keys():
                a, b = sqd.stats(key), bet.stats(key)
                for name in _STAT_FIELDS:
                    worst = max(worst, abs(getattr(a, name) - getattr(b, name)))
                    count += 1
    return CriterionResult(5, "BET reduces to SQD", worst <= 1e-12, {"comparisons": count, "max_abs_diff": worst})


# 6 -------------------------------------------------------------------------
def bet_optimum() -> CriterionResult:
    v = 1e-4
    regimes = bet_regimes(v, v)
    best_regime = max(BET_REGIMES, key=lambda r: regimes[r].best_value)
    res = regimes[(PHASE, 1)]
    out = simulate(replace(ProtocolParams("bet", vsq=v, vsq3=v), **res.best_params)).outputs["V"]
    vp, vm = out.quantum_variances()
    ok = (
        0.935 <= res.best_value <= 0.9428
        and abs(vp - 2.0) <= 0.2
        and abs(vm - 0.5) <= 0.05
        and best_regime == (PHASE, 1)
    )
    measured = {
        "fidelity": res.best_value,
        "eps1": res.best_params["eps1"],
        "eps2": res.best_params["eps2"],
        "V+_out": vp,
        "V-_out": vm,
        "best_regime": f"{best_regime[0]}{best_regime[1]:+d}",
    }
    for quad, pol in BET_REGIMES:
        measured[f"F[{quad}{pol:+d}]"] = regimes[(quad, pol)].best_value
    return CriterionResult(6, "BET optimum", ok, measured)


# 7 -------------------------------------------------------------------------
def bet_dominance(points: int = 20) -> CriterionResult:
    grid = np.geomspace(1.0, 1e-4, points)
    worst = math.inf
    for v in grid:
        bet = maximize(fidelity_problem(ProtocolParams("bet", vsq=v, vsq3=v))).best_value
        sqd_tied = _fid(ProtocolParams("sqd", vsq=v, vsq3=v))
        sqd_best = _fid(ProtocolParams("sqd", vsq=v, vsq3=1.0))
        worst = min(worst, bet - max(sqd_tied, sqd_best))
    return CriterionResult(7, "BET dominates SQD", worst >= -1e-12, {"points": points, "min_margin": worst})


# 8 -------------------------------------------------------------------------
def tv_anchors() -> CriterionResult:
    qt = quadrature_teleport_outcome(vsq=1.0)
    tq_c = transfer_coefficients(qt)["Tq"]
    vcv_c = conditional_variances(qt)["Vcv"]
    twin = simulate(ProtocolParams("twin", vsq=SQUEEZING_FLOOR))
    tq_t = transfer_coefficients(twin)["Tq"]
    vcv_t = conditional_variances(twin)["Vcv"]
    sqd = simulate(ProtocolParams("sqd", vsq=SQUEEZING_FLOOR, vsq3=SQUEEZING_FLOOR, v_plus=1e3))
    tq_s = transfer_coefficients(sqd)["Tq"]
    vcv_s = conditional_variances(sqd)["Vcv"]
    ok = (
        abs(tq_c - 2 / 3) <= 1e-9
        and abs(vcv_c - 2.0) <= 1e-9
        and tq_t >= 3.99
        and vcv_t <= 0.01
        and tq_s >= 2.99
        and vcv_s <= 0.01
    )
    return CriterionResult(
        8,
        "T-V anchors",
        ok,
        {
            "classical_Tq": tq_c,
            "classical_Vcv": vcv_c,
            "twin_Tq": tq_t,
            "twin_Vcv": vcv_t,
            "sqd_Tq": tq_s,
            "sqd_Vcv": vcv_s,
        },
    )


# 9 -------------------------------------------------------------------------
def random_configuration(rng: np.random.Generator) -> ProtocolParams | None:
    """Random protocol configuration; ``None`` stands for the single-mode teleporter."""
    scheme = rng.choice(["quadrature", "twin", "sqd", "bet", "optimized-twin"])
    if scheme == "quadrature":
        return None
    gains = rng.uniform(-3.0, 3.0, size=4)
    v, v3 = rng.uniform(0.01, 1.0, size=2)
    p = ProtocolParams(
        str(scheme),
        vsq=float(v),
        vsq3=float(v3),
        sq3_quadrature=str(rng.choice([AMPLITUDE, PHASE])),
        h_plus=float(gains[0]),
        h_minus=float(gains[1]),
        v_plus=float(gains[2]),
    )
    if scheme == "twin":
        p = replace(p, v_minus=float(gains[3]))
    if scheme in ("bet", "optimized-twin"):
        e1, e2 = rng.uniform(0.02, 0.98, size=2)
        p = replace(p, eps1=float(e1), eps2=float(e2), polarity=int(rng.choice([1, -1])))
        if rng.random() < 0.5:
            p = replace(p, v_minus=float(gains[3]))
    return p


def gaussian_identity(configs: int = 200, seed: int = DEFAULT_SEED) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(configs):
        p = random_configuration(rng)
        if p is None:
            lam = rng.uniform(-3.0, 3.0, size=2)
            outcome = quadrature_teleport_outcome(vsq=float(rng.uniform(0.01, 1.0)), lam_plus=lam[0], lam_minus=lam[1])
        else:
            outcome = simulate(p)
        t = transfer_coefficients(outcome, include_v_minus=True)
        vcv = conditional_variances(outcome, include_v_minus=True)
        for key in t:
            if key == "Tq":
                continue
            st = outcome.stats(key)
            worst = max(worst, abs(vcv[key] - st.v_out_no_signal * (1.0 - t[key])))
    return CriterionResult(9, "Gaussian identity", worst <= 1e-9, {"configs": configs, "max_abs_diff": worst})


# 10 ------------------------------------------------------------------------
def sqd_gain_properties() -> CriterionResult:
    raw = np.geomspace(0.05, 50.0, 25)
    spread = 0.0
    worst = 0.0
    for v3 in (1.0, 0.5, 0.1, 0.01):
        vcvs = []
        for g in raw:
            gamma = 2.0 * g
            out = simulate(ProtocolParams("sqd", vsq=0.5, vsq3=v3, v_plus=gamma))
            vcvs.append(conditional_variances(out)["V+"])
            t = transfer_coefficients(out)["V+"]
            worst = max(worst, abs(t - gamma**2 / (gamma**2 + v3)))
        spread = max(spread, max(vcvs) - min(vcvs))
    return CriterionResult(
        10,
        "SQD gain properties",
        spread <= 1e-9 and worst <= 1e-9,
        {"Vcv_spread": spread, "T_max_abs_diff": worst},
    )


# 11 ------------------------------------------------------------------------
def random_polarization_state(rng: np.random.Generator) -> PolarizationState:
    """Bright two-mode state with squeezing and classical signals shared across quadratures."""
    reg = SourceRegistry()
    shared = [FluctuationVector.of(reg.classical(f"shared{i}")) for i in range(3)]

    def signal():
        w = rng.normal(0.0, 0.7, size=len(shared))
        return linear_combination(zip(w, shared))

    def mode(label):
        kind = rng.choice(["coherent", "squeezed"])
        kwargs = {}
        if kind == "squeezed":
            kwargs = {"variance": float(rng.uniform(0.05, 1.0)), "quadrature": str(rng.choice([AMPLITUDE, PHASE]))}
        return make_mode(
            reg,
            str(kind),
            alpha=float(rng.uniform(0.0, 6.0)),
            signal=(signal(), signal()),
            label=label,
            **kwargs,
        )

    return PolarizationState(mode("H"), mode("V"), float(rng.uniform(-math.pi, math.pi)))


def closed_form_inputs(s: PolarizationState) -> dict:
    hp, hm, vp, vm = s.h.x_plus, s.h.x_minus, s.v.x_plus, s.v.x_minus
    corr = {
        "Vp,Hp": covariance(vp, hp),
        "Vm,Hp": covariance(vm, hp),
        "Vp,Vm": covariance(vp, vm),
        "Vp,Hm": covariance(vp, hm),
        "Vm,Hm": covariance(vm, hm),
        "Hp,Hm": covariance(hp, hm),
    }
    return dict(
        alpha_h=s.alpha_h,
        alpha_v=s.alpha_v,
        theta=s.theta,
        vh=(variance(hp), variance(hm)),
        vv=(variance(vp), variance(vm)),
        corr=corr,
    )


def stokes_properties(states: int = 100, seed: int = DEFAULT_SEED) -> CriterionResult:
    rng = np.random.default_rng(seed)
    ball = 0.0
    equality = 0.0
    for _ in range(20):
        reg = SourceRegistry()
        ah, av = rng.uniform(0.0, 8.0, size=2)
        s = PolarizationState(optics.coherent(reg, ah), optics.coherent(reg, av), float(rng.uniform(-3, 3)))
        s0 = stokes_means(s)[0]
        ball = max(ball, *(abs(x - s0) for x in stokes_variances(s, threshold=0.0)))
        vert = PolarizationState(optics.vacuum(reg), optics.coherent(reg, av), float(rng.uniform(-3, 3)))
        _, v2, v3 = stokes_variances(vert, threshold=0.0)
        equality = max(equality, abs(v2 * v3 - stokes_means(vert)[1] ** 2))
    expanded = 0.0
    for _ in range(states):
        s = random_polarization_state(rng)
        direct = stokes_variances(s, threshold=0.0)
        formula = stokes_variances_closed_form(**closed_form_inputs(s))
        expanded = max(expanded, *(abs(a - b) for a, b in zip(direct, formula)))
    return CriterionResult(
        11,
        "Stokes properties",
        ball <= 1e-9 and equality <= 1e-6 and expanded <= 1e-9,
        {"noise_ball_dev": ball, "uncertainty_eq_dev": equality, "expanded_formula_max_diff": expanded},
    )


# 12 ------------------------------------------------------------------------
def tampered_beamsplitter(a: OpticalMode, b: OpticalMode, eps: float):
    """Negative control: drops the minus sign on the second output port."""
    t, r = math.sqrt(eps), math.sqrt(1.0 - eps)
    c = OpticalMode(t * a.carrier + r * b.carrier, t * a.x_plus + r * b.x_plus, t * a.x_minus + r * b.x_minus)
    d = OpticalMode(r * a.carrier + t * b.carrier, r * a.x_plus + t * b.x_plus, r * a.x_minus + t * b.x_minus)
    return c, d


def random_network(rng: np.random.Generator, beamsplitter: Callable = optics.beamsplitter) -> list[OpticalMode]:
    """Pure modes pushed through a random sequence of beamsplitters and phase shifts."""
    reg = SourceRegistry()
    n = int(rng.integers(2, 6))
    modes = []
    for i in range(n):
        if rng.random() < 0.5:
            modes.append(make_mode(reg, "coherent", alpha=float(rng.uniform(0, 3)), label=f"m{i}"))
        else:
            q = str(rng.choice([AMPLITUDE, PHASE]))
            modes.append(make_mode(reg, "squeezed", variance=float(rng.uniform(0.05, 1.0)), quadrature=q, label=f"m{i}"))
    for _ in range(int(rng.integers(1, 12))):
        if rng.random() < 0.6:
            i, j = rng.choice(n, size=2, replace=False)
            modes[i], modes[j] = beamsplitter(modes[i], modes[j], float(rng.uniform(0, 1)))
        else:
            i = int(rng.integers(n))
            modes[i] = phase_shift(modes[i], float(rng.uniform(-math.pi, math.pi)))
    return modes


def symplectic_defect(modes: list[OpticalMode]) -> float:
    """Largest deviation from canonical commutators across all mode pairs."""
    worst = 0.0
    for i, a in enumerate(modes):
        for j, b in enumerate(modes):
            expected = 1.0 if i == j else 0.0
            worst = max(worst, abs(symplectic_product(a.x_plus, b.x_minus) - expected))
    return worst


def _cli_bytes(argv: list[str]) -> bytes:
    from .cli import main

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "out")
        with redirect_stdout(io.StringIO()):
            code = main(argv + ["--out", path])
        if code != 0:
            raise RuntimeError(f"CLI exited with {code} for {argv}")
        with open(path, "rb") as fh:
            return fh.read()


def structural_properties(
    networks: int = 1000, seed: int = DEFAULT_SEED, tamper: str | None = None
) -> CriterionResult:
    rng = np.random.default_rng(seed)
    bs = tampered_beamsplitter if tamper == "beamsplitter-sign" else optics.beamsplitter
    worst = max(symplectic_defect(random_network(rng, bs)) for _ in range(networks))
    runs = [
        ["sweep-fidelity", "--scheme", "bet", "--vsq", "1,0.1,0.01", "--grid", "9"],
        ["tv", "--scheme", "sqd", "--vsq", "0.5", "--gain", "0:2:5", "--format", "json"],
    ]
    identical = all(_cli_bytes(argv) == _cli_bytes(argv) for argv in runs)
    detail = "symplectic invariant failure" if worst > 1e-12 else ""
    return CriterionResult(
        12,
        "structural properties",
        worst <= 1e-12 and identical,
        {"networks": networks, "max_symplectic_defect": worst, "cli_bit_identical": identical},
        detail,
    )


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: twin_classical_limit,
    2: twin_oracle,
    3: sqd_anchors,
    4: sqd_oracle,
    5: bet_reduction,
    6: bet_optimum,
    7: bet_dominance,
    8: tv_anchors,
    9: gaussian_identity,
    10: sqd_gain_properties,
    11: stokes_properties,
    12: structural_properties,
}


def run_criterion(number: int, seed: int = DEFAULT_SEED, tamper: str | None = None) -> CriterionResult:
    fn = CRITERIA[number]
    kwargs = {}
    if number in (9, 11, 12):
        kwargs["seed"] = seed
    if number == 12:
        kwargs["tamper"] = tamper
    t0 = time.perf_counter()
    res = fn(**kwargs)
    return replace(res, seconds=time.perf_counter() - t0)


@dataclass(frozen=True)
class ReportLine:
    name: str
    text: str


def four_squeezer_report(grid: int = 6) -> ReportLine:
    """Compare the four-squeezer closed form with the simulation; never asserted.

    Points where the formula leaves its real domain are flagged rather than
    counted as disagreements.
    """
    agree, flagged, worst = 0, 0, 0.0
    axis = np.linspace(0.05, 0.95, grid)
    for v in (1.0, 0.5, 0.1, 0.01):
        for e1 in axis:
            for e2 in axis:
                p = ProtocolParams("optimized-twin", vsq=v, eps1=float(e1), eps2=float(e2))
                out = polarization_fidelity(simulate(p)).per_mode["V"]
                try:
                    ref = closed_form("four-sq", v=v, eps1=float(e1), eps2=float(e2))
                except DomainError:
                    flagged += 1
                    continue
                diff = abs(out - ref)
                worst = max(worst, diff)
                if diff <= 1e-9:
                    agree += 1
                else:
                    flagged += 1
    text = (
        f"[REPORT] four-squeezer closed form: {agree} points agree (max |diff| {worst:.3g}), "
        f"{flagged} flagged, non-asserted"
    )
    return ReportLine("four-sq", text)


def run_all(
    only: list[int] | None = None, seed: int = DEFAULT_SEED, tamper: str | None = None
) -> list[CriterionResult]:
    numbers = sorted(only) if only else sorted(CRITERIA)
    return [run_criterion(n, seed, tamper) for n in numbers]
