"""Simulations of the polarisation teleportation schemes.

Every scheme is built from the elements in :mod:`polteleport.optics` on a
private :class:`SourceRegistry`, so input and output fluctuations share one
source basis and every input/output moment can be read off directly.

Gains are calibrated: 1.0 means the input's classical signal appears on the
output with unit coefficient. Raw electro-optic gains are derived from the
beamsplitter fractions in front of each detector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

from .errors import ParameterError
from .fluct import SourceRegistry, covariance, variance
from .optics import (
    AMPLITUDE,
    DIRECT,
    PHASE,
    OpticalMode,
    beamsplitter,
    coherent,
    detect,
    epr_pair,
    modulate,
    squeezed,
    vacuum,
)
from .stokes import PolarizationState

SCHEMES = ("twin", "sqd", "bet", "optimized-twin")
OPTIMAL = "optimal"

INFO_QUADRATURES = {
    "quadrature": ("X+", "X-"),
    "twin": ("H+", "H-", "V+", "V-"),
    "sqd": ("H+", "H-", "V+"),
    "bet": ("H+", "H-", "V+"),
    "optimized-twin": ("H+", "H-", "V+"),
}

_SQ3_DEFAULT = {"sqd": AMPLITUDE, "bet": PHASE, "optimized-twin": PHASE, "twin": AMPLITUDE}
_EPS_DEFAULT = {"bet": (1.0, 0.0), "optimized-twin": (0.5, 0.5)}


@dataclass(frozen=True)
class ProtocolParams:
    """Configuration of one protocol run.

    ``vsq`` is the squeezed-quadrature variance of the EPR squeezers and
    ``vsq3`` that of the third squeezer, squeezed in ``sq3_quadrature``.
    ``eps1``/``eps2`` are the entangling and measurement transmittivities of
    the vertical arm (BET, optimized twin); ``eps1_h``/``eps2_h`` those of the
    optimized twin's horizontal arm. ``v_minus`` may be ``"optimal"`` for the
    noise-minimizing phase feedforward of BET and the optimized twin.
    ``polarity`` selects the sign regime of the amplitude feedforward.
    """

    scheme: str = "twin"
    vsq: float = 1.0
    vsq3: float = 1.0
    sq3_quadrature: str | None = None
    eps1: float | None = None
    eps2: float | None = None
    eps1_h: float = 0.5
    eps2_h: float = 0.5
    h_plus: float = 1.0
    h_minus: float = 1.0
    v_plus: float = 1.0
    v_minus: float | str | None = None
    polarity: int = 1
    signal: float = 1.0

    def resolved(self) -> ProtocolParams:
        """Fill scheme defaults and validate ranges."""
        if self.scheme not in SCHEMES:
            raise ParameterError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        e1, e2 = _EPS_DEFAULT.get(self.scheme, (0.5, 0.5))
        out = replace(
            self,
            sq3_quadrature=self.sq3_quadrature or _SQ3_DEFAULT[self.scheme],
            eps1=e1 if self.eps1 is None else float(self.eps1),
            eps2=e2 if self.eps2 is None else float(self.eps2),
            v_minus=self.v_minus
            if self.v_minus is not None
            else (OPTIMAL if self.scheme in ("bet", "optimized-twin") else 1.0),
        )
        out._validate()
        return out

    def _validate(self) -> None:
        if not 0.0 < self.vsq <= 1.0:
            raise ParameterError(f"vsq must lie in (0, 1], got {self.vsq}")
        if not 0.0 < self.vsq3 <= 1.0:
            raise ParameterError(f"vsq3 must lie in (0, 1], got {self.vsq3}")
        if self.sq3_quadrature not in (AMPLITUDE, PHASE):
            raise ParameterError(f"sq3_quadrature must be amplitude or phase, got {self.sq3_quadrature!r}")
        for name in ("eps1", "eps2", "eps1_h", "eps2_h"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1], got {val}")
        if self.polarity not in (1, -1):
            raise ParameterError(f"polarity must be +1 or -1, got {self.polarity}")
        if self.v_minus == OPTIMAL and self.scheme not in ("bet", "optimized-twin"):
            raise ParameterError("optimal phase feedforward only applies to bet and optimized-twin")
        if self.signal <= 0:
            raise ParameterError("input signal variance must be positive")


@dataclass(frozen=True)
class QuadratureStats:
    v_out: float
    v_out_no_signal: float
    v_in_no_signal: float
    covariance: float
    signal_gain: float
    signal_in: float


@dataclass(frozen=True)
class TeleportOutcome:
    """Input and output modes sharing one source registry.

    Modes are keyed ``"H"``/``"V"`` for polarisation schemes and ``"X"`` for
    the single-mode quadrature teleporter. ``covariance`` in the per-quadrature
    statistics is taken between the quantum (signal-free) parts.
    """

    scheme: str
    inputs: Mapping[str, OpticalMode]
    outputs: Mapping[str, OpticalMode]
    info_quadratures: tuple[str, ...]
    theta: float = 0.0
    params: ProtocolParams | None = None
    extras: Mapping[str, float] = field(default_factory=dict)

    @property
    def input(self) -> PolarizationState:
        return PolarizationState(self.inputs["H"], self.inputs["V"], self.theta)

    @property
    def output(self) -> PolarizationState:
        return PolarizationState(self.outputs["H"], self.outputs["V"], self.theta)

    def quadrature_keys(self) -> tuple[str, ...]:
        return tuple(f"{m}{q}" for m in self.inputs for q in "+-")

    def stats(self, key: str) -> QuadratureStats:
        mode, quad = key[:-1], key[-1]
        xin = self.inputs[mode].quadrature(quad)
        xout = self.outputs[mode].quadrature(quad)
        qin, qout = xin.quantum, xout.quantum
        cin = xin.classical
        v_in_q = variance(qin)
        sig = variance(cin)
        cov_q = covariance(qin, qout)
        if sig > 0:
            gain = covariance(cin, xout.classical) / sig
        else:
            gain = cov_q / v_in_q
        return QuadratureStats(
            v_out=variance(xout),
            v_out_no_signal=variance(qout),
            v_in_no_signal=v_in_q,
            covariance=cov_q,
            signal_gain=gain,
            signal_in=sig,
        )

    @property
    def per_quadrature(self) -> dict[str, QuadratureStats]:
        return {k: self.stats(k) for k in self.quadrature_keys()}


def make_input(
    reg: SourceRegistry,
    alpha_h: float = 0.0,
    alpha_v: float = 10.0,
    theta: float = 0.0,
    signal: float = 1.0,
) -> PolarizationState:
    """Coherent two-mode input with an independent classical signal on each quadrature."""
    if alpha_h < 0 or alpha_v < 0:
        raise ParameterError("carrier amplitudes must be non-negative; phase is carried by theta")
    h = coherent(reg, alpha_h, signal=(signal, signal), label="in.H")
    v = coherent(reg, alpha_v, signal=(signal, signal), label="in.V")
    return PolarizationState(h, v, theta)


def quadrature_teleport(
    reg: SourceRegistry,
    inp: OpticalMode,
    vsq: float,
    lam_plus: float = 1.0,
    lam_minus: float = 1.0,
    label: str = "qt",
) -> OpticalMode:
    """Standard quadrature teleporter; returns the output mode.

    The input meets EPR beam 1 on a 50/50 beamsplitter, the two ports are
    homodyned in amplitude and phase and the photocurrents displace EPR beam 2.
    At unity gain the output carries ``2 * vsq`` of added noise per quadrature.
    """
    e1, e2 = epr_pair(reg, vsq, label=label + ".epr")
    c, d = beamsplitter(inp, e1, 0.5)
    i_plus = detect(c, AMPLITUDE)
    i_minus = detect(d, PHASE)
    out = modulate(e2, AMPLITUDE, math.sqrt(2.0) * lam_plus, i_plus)
    out = modulate(out, PHASE, math.sqrt(2.0) * lam_minus, i_minus)
    return out.with_carrier(inp.carrier)


def quadrature_teleport_outcome(
    inp: OpticalMode | None = None,
    vsq: float = 1.0,
    lam_plus: float = 1.0,
    lam_minus: float = 1.0,
    signal: float = 1.0,
    reg: SourceRegistry | None = None,
) -> TeleportOutcome:
    """Single-mode teleporter packaged as an outcome (mode key ``"X"``)."""
    reg = reg or SourceRegistry()
    if inp is None:
        inp = coherent(reg, 0.0, signal=(signal, signal), label="in.X")
    out = quadrature_teleport(reg, inp, vsq, lam_plus, lam_minus)
    return TeleportOutcome("quadrature", {"X": inp}, {"X": out}, INFO_QUADRATURES["quadrature"])


def _arm(
    reg: SourceRegistry,
    inp: OpticalMode,
    first: OpticalMode,
    second: OpticalMode,
    eps1: float,
    eps2: float,
    g_plus: float,
    g_minus: float | str,
    polarity: int = 1,
) -> OpticalMode:
    """Two-beamsplitter teleporter arm.

    ``first`` and ``second`` meet on the entangling beamsplitter ``eps1``; its
    first port is the reconstruction beam and its second port is mixed with
    the input on ``eps2``. The port carrying ``sqrt(1-eps2)`` of the input is
    amplitude-homodyned, the other phase-homodyned.
    """
    recon, meas = beamsplitter(first, second, eps1)
    if polarity < 0:
        # pi phase shift on the reconstruction beam
        recon = OpticalMode(-recon.carrier, -1.0 * recon.x_plus, -1.0 * recon.x_minus)
    u, w = beamsplitter(inp, meas, eps2)
    i_plus = detect(w, AMPLITUDE)
    i_minus = detect(u, PHASE)

    if g_plus != 0 and eps2 >= 1.0:
        raise ParameterError("eps2 = 1 leaves no input on the amplitude detector")
    raw_plus = g_plus / math.sqrt(1.0 - eps2) if g_plus != 0 else 0.0

    if g_minus == OPTIMAL:
        # least-squares cancellation of the reconstruction beam's phase noise
        noise = variance(i_minus.signal.quantum)
        raw_minus = -covariance(recon.x_minus.quantum, i_minus.signal.quantum) / noise if noise > 0 else 0.0
    else:
        g_minus = float(g_minus)
        if g_minus != 0 and eps2 <= 0.0:
            raise ParameterError("eps2 = 0 leaves no input on the phase detector")
        raw_minus = g_minus / math.sqrt(eps2) if g_minus != 0 else 0.0

    out = modulate(recon, AMPLITUDE, raw_plus, i_plus)
    out = modulate(out, PHASE, raw_minus, i_minus)
    return out.with_carrier(inp.carrier)


def _require_vertical(state: PolarizationState, scheme: str) -> None:
    if state.h.carrier != 0:
        raise ParameterError(
            f"{scheme} needs a vertically polarised carrier (alpha_H = 0); rotate the input first"
        )


def _outcome(scheme, state, h_out, v_out, params) -> TeleportOutcome:
    return TeleportOutcome(
        scheme,
        {"H": state.h, "V": state.v},
        {"H": h_out, "V": v_out},
        INFO_QUADRATURES[scheme],
        state.theta,
        params,
    )


def twin_teleport(reg: SourceRegistry, state: PolarizationState, params: ProtocolParams) -> TeleportOutcome:
    p = replace(params, scheme="twin").resolved()
    h_out = quadrature_teleport(reg, state.h, p.vsq, p.h_plus, p.h_minus, label="H")
    v_out = quadrature_teleport(reg, state.v, p.vsq, p.v_plus, float(p.v_minus), label="V")
    return _outcome("twin", state, h_out, v_out, p)


def sqd_teleport(reg: SourceRegistry, state: PolarizationState, params: ProtocolParams) -> TeleportOutcome:
    """Direct detection of the bright vertical beam fed onto squeezed beam SQ3.

    The horizontal (dark) mode goes through a standard quadrature teleporter.
    """
    p = replace(params, scheme="sqd").resolved()
    _require_vertical(state, "sqd")
    h_out = quadrature_teleport(reg, state.h, p.vsq, p.h_plus, p.h_minus, label="H")
    photocurrent = detect(state.v, DIRECT)
    sq3 = squeezed(reg, p.vsq3, p.sq3_quadrature, alpha=state.v.carrier, label="sq3")
    v_out = modulate(sq3, AMPLITUDE, p.v_plus, photocurrent)
    return _outcome("sqd", state, h_out, v_out, p)


def bet_teleport(reg: SourceRegistry, state: PolarizationState, params: ProtocolParams) -> TeleportOutcome:
    """Biased entanglement teleporter.

    SQ3 and a vacuum mode on ``eps1`` give the biased entangled pair; the
    vertical input is mixed with one half on ``eps2``. ``eps1 = 1, eps2 = 0``
    is exactly the SQD scheme.
    """
    p = replace(params, scheme="bet").resolved()
    _require_vertical(state, "bet")
    h_out = quadrature_teleport(reg, state.h, p.vsq, p.h_plus, p.h_minus, label="H")
    sq3 = squeezed(reg, p.vsq3, p.sq3_quadrature, label="sq3")
    vac = vacuum(reg, label="bet.vac")
    v_out = _arm(reg, state.v, sq3, vac, p.eps1, p.eps2, p.v_plus, p.v_minus, p.polarity)
    return _outcome("bet", state, h_out, v_out, p)


def optimized_twin_teleport(
    reg: SourceRegistry, state: PolarizationState, params: ProtocolParams
) -> TeleportOutcome:
    """Twin topology with variable entangling and measurement beamsplitters.

    All four squeezers use ``vsq``. On each arm the phase-squeezed and
    amplitude-squeezed beams meet on ``eps1``; on the vertical arm
    ``sq3_quadrature`` names which of the two enters the first port.
    """
    p = replace(params, scheme="optimized-twin").resolved()
    h_first = squeezed(reg, p.vsq, PHASE, label="H.sqp")
    h_second = squeezed(reg, p.vsq, AMPLITUDE, label="H.sqa")
    h_out = _arm(reg, state.h, h_first, h_second, p.eps1_h, p.eps2_h, p.h_plus, p.h_minus)

    other = AMPLITUDE if p.sq3_quadrature == PHASE else PHASE
    v_first = squeezed(reg, p.vsq, p.sq3_quadrature, label="V.sq1")
    v_second = squeezed(reg, p.vsq, other, label="V.sq2")
    v_out = _arm(reg, state.v, v_first, v_second, p.eps1, p.eps2, p.v_plus, p.v_minus, p.polarity)
    return _outcome("optimized-twin", state, h_out, v_out, p)


_RUNNERS = {
    "twin": twin_teleport,
    "sqd": sqd_teleport,
    "bet": bet_teleport,
    "optimized-twin": optimized_twin_teleport,
}


def teleport(reg: SourceRegistry, state: PolarizationState, params: ProtocolParams) -> TeleportOutcome:
    try:
        runner = _RUNNERS[params.scheme]
    except KeyError:
        raise ParameterError(f"unknown scheme {params.scheme!r}") from None
    return runner(reg, state, params)


def simulate(
    params: ProtocolParams,
    alpha_h: float = 0.0,
    alpha_v: float = 10.0,
    theta: float = 0.0,
) -> TeleportOutcome:
    """Build a coherent input on a fresh registry and run the configured scheme."""
    reg = SourceRegistry()
    state = make_input(reg, alpha_h, alpha_v, theta, params.signal)
    return teleport(reg, state, params)
