"""Optical modes and linear network elements in the linearized picture.

Quadratures are normalized so the vacuum variance is 1. A mode carries a
complex carrier amplitude and one fluctuation vector per quadrature; all
elements act linearly on both.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

from .errors import ParameterError
from .fluct import (
    FluctuationVector,
    SourceRegistry,
    linear_combination,
    symplectic_product,
    variance,
    variance_split,
)

AMPLITUDE = "amplitude"
PHASE = "phase"
DIRECT = "direct"


@dataclass(frozen=True)
class OpticalMode:
    carrier: complex
    x_plus: FluctuationVector
    x_minus: FluctuationVector
    label: str = ""

    @property
    def alpha(self) -> float:
        return abs(self.carrier)

    @property
    def phase(self) -> float:
        return cmath.phase(self.carrier) if self.carrier != 0 else 0.0

    @property
    def v_plus(self) -> float:
        return variance(self.x_plus)

    @property
    def v_minus(self) -> float:
        return variance(self.x_minus)

    def quadrature(self, which: str) -> FluctuationVector:
        if which in (AMPLITUDE, "+"):
            return self.x_plus
        if which in (PHASE, "-"):
            return self.x_minus
        raise ParameterError(f"unknown quadrature {which!r}")

    def quantum_variances(self) -> tuple[float, float]:
        return variance_split(self.x_plus).quantum, variance_split(self.x_minus).quantum

    def classical_variances(self) -> tuple[float, float]:
        return variance_split(self.x_plus).classical, variance_split(self.x_minus).classical

    def symplectic(self) -> float:
        return symplectic_product(self.x_plus, self.x_minus)

    def with_carrier(self, carrier: complex) -> OpticalMode:
        return replace(self, carrier=complex(carrier))


@dataclass(frozen=True)
class Photocurrent:
    """Classical record of a detected quadrature; free to copy and scale."""

    signal: FluctuationVector
    quadrature: str = AMPLITUDE


def _signal_vector(reg: SourceRegistry, spec, label: str) -> FluctuationVector:
    if spec is None:
        return FluctuationVector.zero()
    if isinstance(spec, FluctuationVector):
        if spec.quantum.coefficients:
            raise ParameterError("signal vectors must be built from classical sources")
        return spec
    v = float(spec)
    if v < 0:
        raise ParameterError(f"classical signal variance must be >= 0, got {v}")
    if v == 0:
        return FluctuationVector.zero()
    return FluctuationVector.of(reg.classical(label), math.sqrt(v))


def make_mode(
    reg: SourceRegistry,
    kind: str = "vacuum",
    *,
    alpha: complex = 0.0,
    variance: float | None = None,
    quadrature: str = AMPLITUDE,
    signal=None,
    label: str = "",
) -> OpticalMode:
    """Create a pure mode on a fresh quantum source pair.

    ``kind`` is ``"vacuum"``, ``"coherent"`` or ``"squeezed"``. For a squeezed
    mode ``variance`` is the squeezed-quadrature variance and ``quadrature``
    names which quadrature is squeezed; the conjugate gets ``1/variance``.
    ``signal`` is an optional ``(plus, minus)`` pair of classical variances or
    classical fluctuation vectors added to the quadratures.
    """
    if kind == "vacuum":
        if alpha != 0:
            raise ParameterError("vacuum mode has zero carrier; use kind='coherent'")
        vp = vm = 1.0
    elif kind == "coherent":
        vp = vm = 1.0
    elif kind == "squeezed":
        if variance is None or not variance > 0:
            raise ParameterError(f"squeezed variance must be positive, got {variance}")
        if quadrature == AMPLITUDE:
            vp, vm = variance, 1.0 / variance
        elif quadrature == PHASE:
            vp, vm = 1.0 / variance, variance
        else:
            raise ParameterError(f"unknown quadrature {quadrature!r}")
    else:
        raise ParameterError(f"unknown mode kind {kind!r}")

    sx, sp = reg.quantum_pair(label)
    x_plus = FluctuationVector.of(sx, math.sqrt(vp))
    x_minus = FluctuationVector.of(sp, math.sqrt(vm))
    if signal is not None:
        sig_plus, sig_minus = signal
        x_plus = x_plus + _signal_vector(reg, sig_plus, label + ".c+")
        x_minus = x_minus + _signal_vector(reg, sig_minus, label + ".c-")
    return OpticalMode(complex(alpha), x_plus, x_minus, label)


def vacuum(reg: SourceRegistry, label: str = "") -> OpticalMode:
    return make_mode(reg, "vacuum", label=label)


def coherent(reg: SourceRegistry, alpha: complex, signal=None, label: str = "") -> OpticalMode:
    return make_mode(reg, "coherent", alpha=alpha, signal=signal, label=label)


def squeezed(
    reg: SourceRegistry,
    variance: float,
    quadrature: str = AMPLITUDE,
    alpha: complex = 0.0,
    signal=None,
    label: str = "",
) -> OpticalMode:
    return make_mode(
        reg, "squeezed", alpha=alpha, variance=variance, quadrature=quadrature, signal=signal, label=label
    )


def beamsplitter(a: OpticalMode, b: OpticalMode, eps: float) -> tuple[OpticalMode, OpticalMode]:
    """Mix two modes on a beamsplitter of power transmittivity ``eps``.

    c = sqrt(eps) a + sqrt(1-eps) b,  d = sqrt(1-eps) a - sqrt(eps) b.
    """
    if not 0.0 <= eps <= 1.0:
        raise ParameterError(f"transmittivity must lie in [0, 1], got {eps}")
    t = math.sqrt(eps)
    r = math.sqrt(1.0 - eps)
    c = OpticalMode(
        t * a.carrier + r * b.carrier,
        linear_combination(((t, a.x_plus), (r, b.x_plus))),
        linear_combination(((t, a.x_minus), (r, b.x_minus))),
    )
    d = OpticalMode(
        r * a.carrier - t * b.carrier,
        linear_combination(((r, a.x_plus), (-t, b.x_plus))),
        linear_combination(((r, a.x_minus), (-t, b.x_minus))),
    )
    return c, d


def phase_shift(a: OpticalMode, phi: float) -> OpticalMode:
    c, s = math.cos(phi), math.sin(phi)
    return OpticalMode(
        a.carrier * cmath.exp(1j * phi),
        linear_combination(((c, a.x_plus), (-s, a.x_minus))),
        linear_combination(((s, a.x_plus), (c, a.x_minus))),
        a.label,
    )


def epr_pair(reg: SourceRegistry, vsq: float, label: str = "epr") -> tuple[OpticalMode, OpticalMode]:
    """Two beams with X+ sum and X- difference variances of 2*vsq each."""
    if not 0.0 < vsq <= 1.0:
        raise ParameterError(f"EPR squeezing variance must lie in (0, 1], got {vsq}")
    amp = squeezed(reg, vsq, AMPLITUDE, label=label + ".sqa")
    ph = squeezed(reg, vsq, PHASE, label=label + ".sqp")
    return beamsplitter(amp, ph, 0.5)


def detect(a: OpticalMode, which: str) -> Photocurrent:
    """Ideal detection of one quadrature.

    ``direct`` detection reads the amplitude quadrature of a bright beam and
    needs a nonzero carrier. The detected mode must not be reused optically.
    """
    if which == DIRECT:
        if a.carrier == 0:
            raise ParameterError("direct detection requires a bright carrier")
        return Photocurrent(a.x_plus, AMPLITUDE)
    if which in (AMPLITUDE, "amplitude-homodyne"):
        return Photocurrent(a.x_plus, AMPLITUDE)
    if which in (PHASE, "phase-homodyne"):
        return Photocurrent(a.x_minus, PHASE)
    raise ParameterError(f"unknown detection {which!r}")


def modulate(a: OpticalMode, which: str, gain: float, current: Photocurrent) -> OpticalMode:
    """Displace one quadrature by ``gain`` times a photocurrent."""
    if gain == 0:
        return a
    if which == AMPLITUDE:
        return replace(a, x_plus=linear_combination(((1.0, a.x_plus), (gain, current.signal))))
    if which == PHASE:
        return replace(a, x_minus=linear_combination(((1.0, a.x_minus), (gain, current.signal))))
    raise ParameterError(f"unknown modulator {which!r}")
