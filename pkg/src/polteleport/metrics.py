"""Figures of merit for teleportation outcomes, plus closed-form references.

Fidelity is only defined at unity signal gain. Transfer coefficients use the
ratio of classical-signal to quantum-noise variance on each quadrature;
conditional variances use the signal-free parts of input and output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .errors import DomainError, GainError
from .protocols import ProtocolParams, TeleportOutcome, simulate

CLASSICAL_LIMITS = {
    "quadrature": 0.5,
    "twin": 0.25,
    "sqd": 1.0 / math.sqrt(6.0),
    "bet": 1.0 / math.sqrt(6.0),
    "optimized-twin": 1.0 / math.sqrt(6.0),
}


@dataclass(frozen=True)
class FidelityReport:
    total: float
    per_mode: dict[str, float]
    classical_limit: float


@dataclass(frozen=True)
class TVPoint:
    tq: float
    vcv: float
    gain: float


def fidelity_unity_gain(v_plus_out: float, v_minus_out: float) -> float:
    """Coherent-state fidelity of a unity-gain reconstruction."""
    return 2.0 / math.sqrt((v_plus_out + 1.0) * (v_minus_out + 1.0))


def _info_keys(outcome: TeleportOutcome, include_v_minus: bool) -> tuple[str, ...]:
    keys = outcome.info_quadratures
    if include_v_minus and "V+" in keys and "V-" not in keys:
        keys = keys + ("V-",)
    return keys


def check_unity_gain(outcome: TeleportOutcome, tol: float = 1e-6) -> None:
    for key in outcome.info_quadratures:
        g = outcome.stats(key).signal_gain
        if abs(g - 1.0) > tol:
            raise GainError(f"{key} signal gain is {g:.9g}; fidelity needs unity gain")


def polarization_fidelity(outcome: TeleportOutcome, tol: float = 1e-6) -> FidelityReport:
    """Product of per-mode Gaussian fidelities at unity gain.

    Each mode contributes 2 / sqrt((V+ + 1)(V- + 1)) with signal-free output
    variances. Quadratures outside the scheme's information set (the vertical
    phase quadrature of SQD, BET and the optimized twin) enter only through
    their output noise.
    """
    check_unity_gain(outcome, tol)
    per_mode = {}
    for name, mode_in in outcome.inputs.items():
        vin = mode_in.quantum_variances()
        if abs(vin[0] - 1.0) > tol or abs(vin[1] - 1.0) > tol:
            raise GainError(f"mode {name} input is not coherent (quantum variances {vin})")
        vp, vm = outcome.outputs[name].quantum_variances()
        per_mode[name] = fidelity_unity_gain(vp, vm)
    total = math.prod(per_mode.values())
    return FidelityReport(total, per_mode, CLASSICAL_LIMITS[outcome.scheme])


def transfer_coefficients(outcome: TeleportOutcome, include_v_minus: bool = False) -> dict[str, float]:
    """Per-quadrature T and their sum under key ``"Tq"``."""
    out = {}
    for key in _info_keys(outcome, include_v_minus):
        st = outcome.stats(key)
        if st.signal_in <= 0:
            raise ValueError(f"{key} carries no input signal; transfer coefficient undefined")
        r_in = st.signal_in / st.v_in_no_signal
        r_out = st.signal_gain**2 * st.signal_in / st.v_out_no_signal
        out[key] = r_out / r_in
    out["Tq"] = math.fsum(out.values())
    return out


def conditional_variances(outcome: TeleportOutcome, include_v_minus: bool = False) -> dict[str, float]:
    """Per-quadrature V_cv and their mean under key ``"Vcv"``."""
    out = {}
    for key in _info_keys(outcome, include_v_minus):
        st = outcome.stats(key)
        out[key] = st.v_out_no_signal - st.covariance**2 / st.v_in_no_signal
    out["Vcv"] = math.fsum(out.values()) / len(out)
    return out


def tv_point(outcome: TeleportOutcome, gain: float = 1.0, include_v_minus: bool = False) -> TVPoint:
    t = transfer_coefficients(outcome, include_v_minus)["Tq"]
    v = conditional_variances(outcome, include_v_minus)["Vcv"]
    return TVPoint(t, v, gain)


def with_gain(params: ProtocolParams, gain: float, which: str) -> ProtocolParams:
    names = {
        "all": ("h_plus", "h_minus", "v_plus") + (("v_minus",) if params.scheme == "twin" else ()),
        "h": ("h_plus", "h_minus"),
        "v": ("v_plus",) + (("v_minus",) if params.scheme == "twin" else ()),
    }.get(which, (which,))
    return replace(params, **{n: gain for n in names})


def tv_trajectory(
    params: ProtocolParams,
    gains: Iterable[float],
    which: str = "all",
    include_v_minus: bool = False,
) -> list[TVPoint]:
    """(T_q, V_cv) along a feedforward gain sweep.

    ``which`` picks the swept gains: ``"all"`` information gains together,
    ``"h"``/``"v"`` one arm, or a single ``ProtocolParams`` gain field name.
    """
    gains = list(gains)
    if any(b < a for a, b in zip(gains, gains[1:])):
        raise ValueError("gain sweep must be monotone non-decreasing")
    points = []
    for g in gains:
        outcome = simulate(with_gain(params, g, which))
        points.append(tv_point(outcome, g, include_v_minus))
    return points


def unity_gain_locus(
    params: ProtocolParams, vsq_grid: Sequence[float], tie_vsq3: bool = True
) -> list[tuple[float, TVPoint]]:
    """Unity-gain T-V points across a squeezing sweep."""
    rows = []
    for v in vsq_grid:
        p = replace(params, vsq=v, vsq3=v if tie_vsq3 else params.vsq3)
        rows.append((v, tv_point(simulate(p))))
    return rows


def _ratio_form(numerator_radicand: float, denominator: float, what: str) -> float:
    """Evaluate 2 sqrt(rad) / sqrt(den) as 2 sqrt(rad / den).

    Both radicands may be negative together, in which case the printed ratio
    is still real; a sign mismatch is outside the formula's domain.
    """
    if denominator == 0:
        raise DomainError(f"{what}: zero denominator")
    q = numerator_radicand / denominator
    if q < 0:
        raise DomainError(f"{what}: negative radicand ratio {q:.6g}")
    return 2.0 * math.sqrt(q)


def closed_form(name: str, **args: float) -> float:
    """Reference fidelity expressions, independent of the simulation path.

    twin(vsq); sqd(vsq, vsq3); bet-best(v, eps1, eps2) and four-sq(v, eps1, eps2)
    give the vertical-arm fidelity factor, with ``v`` the amplitude-quadrature
    variance of the third squeezer (bet-best) or of the second squeezer on
    the entangling beamsplitter (four-sq).
    """
    if name == "twin":
        v = args["vsq"]
        if v < 0:
            raise DomainError("twin: negative variance")
        return 1.0 / (v + 1.0) ** 2
    if name == "sqd":
        v, v3 = args["vsq"], args["vsq3"]
        if v < 0 or v3 <= 0:
            raise DomainError("sqd: variances must be positive")
        return 2.0 / ((1.0 + v) * math.sqrt((v3 + 2.0) * (1.0 / v3 + 1.0)))
    if name == "bet-best":
        v, e1, e2 = args["v"], args["eps1"], args["eps2"]
        a_rad = (e2 - 1) * (e2 * (v - 1) * (e1 - 1) - e1 * (v - 1) - 1)
        b = 2 * e2 * (v - 1) * (e1 - 1) - e1 * (v - 1) - 2
        cross = e2 * (1 - e2) * e1 * (1 - e1)
        if cross < 0:
            raise DomainError("bet-best: transmittivities outside [0, 1]")
        c = e2 * (3 - 2 * e1 + v * (2 * e1 - 1)) + 2 * (v - 1) * math.sqrt(cross) - e1 * (v - 1) - 3
        return _ratio_form(a_rad, b * c, "bet-best")
    if name == "four-sq":
        v, e1, e2 = args["v"], args["eps1"], args["eps2"]
        d_rad = v * (e2 - 1) * (e2 * (v - 1) * (v * (e1 - 1) + e1) + v**2 * (1 - e1) + e1)
        m = (1 + v) * (e2 * (v - 1) * (1 - 2 * e1) + e1 * (v - 1) - v)
        cross = e2 * (1 - e2) * e1 * (1 - e1)
        if cross < 0:
            raise DomainError("four-sq: transmittivities outside [0, 1]")
        n = (
            e2 * (1 - 2 * v - 2 * e1 - v**2 * (1 - 2 * e1))
            + (1 - v**2) * (e1 - 2 * math.sqrt(cross))
            + 2 * v
            + v**2
        )
        return _ratio_form(d_rad, m * n, "four-sq")
    raise ValueError(f"unknown closed form {name!r}")


def reference_fidelity(params: ProtocolParams) -> float | None:
    """Closed-form total fidelity for a configuration, or None where no formula applies.

    Formulas cover unity gain, the positive-polarity regime and, for the
    BET and optimized twin, the noise-minimizing phase feedforward.
    """
    p = params.resolved()
    if (p.h_plus, p.h_minus, p.v_plus) != (1.0, 1.0, 1.0):
        return None
    try:
        if p.scheme == "twin":
            return closed_form("twin", vsq=p.vsq) if p.v_minus == 1.0 else None
        h_factor = math.sqrt(closed_form("twin", vsq=p.vsq))
        if p.scheme == "sqd":
            amp_var = p.vsq3 if p.sq3_quadrature == "amplitude" else 1.0 / p.vsq3
            return closed_form("sqd", vsq=p.vsq, vsq3=amp_var)
        if p.polarity != 1 or p.v_minus != "optimal":
            return None
        if p.scheme == "bet":
            amp_var = p.vsq3 if p.sq3_quadrature == "amplitude" else 1.0 / p.vsq3
            return h_factor * closed_form("bet-best", v=amp_var, eps1=p.eps1, eps2=p.eps2)
        if p.scheme == "optimized-twin":
            if (p.eps1_h, p.eps2_h) != (0.5, 0.5):
                return None
            # the second squeezer is squeezed in the quadrature opposite sq3_quadrature
            amp_var = p.vsq if p.sq3_quadrature == "phase" else 1.0 / p.vsq
            return h_factor * closed_form("four-sq", v=amp_var, eps1=p.eps1, eps2=p.eps2)
    except DomainError:
        return None
    return None
