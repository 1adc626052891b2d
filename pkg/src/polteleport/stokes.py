"""Quantum Stokes-operator statistics of a two-mode polarisation state."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping

from .fluct import FluctuationVector, linear_combination, variance
from .optics import OpticalMode

# Bright-beam linearization is only trusted above this mean photon number.
LINEARIZATION_THRESHOLD = 25.0


class LinearizationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PolarizationState:
    h: OpticalMode
    v: OpticalMode
    theta: float = 0.0

    @property
    def alpha_h(self) -> float:
        return self.h.alpha

    @property
    def alpha_v(self) -> float:
        return self.v.alpha

    def mode(self, name: str) -> OpticalMode:
        if name == "H":
            return self.h
        if name == "V":
            return self.v
        raise KeyError(name)


@dataclass(frozen=True)
class StokesStatistics:
    means: tuple[float, float, float, float]
    fluct: tuple[FluctuationVector, FluctuationVector, FluctuationVector, FluctuationVector]
    variances: tuple[float, float, float, float]
    poincare_radius: float


@dataclass(frozen=True)
class UncertaintyMargin:
    l: int
    m: int
    n: int
    product: float
    bound: float
    margin: float
    ok: bool


def stokes_means(s: PolarizationState) -> tuple[float, float, float, float]:
    ah, av = s.alpha_h, s.alpha_v
    return (
        ah * ah + av * av,
        ah * ah - av * av,
        2.0 * ah * av * math.cos(s.theta),
        2.0 * ah * av * math.sin(s.theta),
    )


def stokes_fluctuations(s: PolarizationState):
    """First-order fluctuations (dS0, dS1, dS2, dS3) as fluctuation vectors."""
    ah, av = s.alpha_h, s.alpha_v
    c, sn = math.cos(s.theta), math.sin(s.theta)
    hp, hm, vp, vm = s.h.x_plus, s.h.x_minus, s.v.x_plus, s.v.x_minus
    ds0 = linear_combination(((ah, hp), (av, vp)))
    ds1 = linear_combination(((ah, hp), (-av, vp)))
    ds2 = linear_combination(((ah * sn, vm), (ah * c, vp), (av * c, hp), (-av * sn, hm)))
    ds3 = linear_combination(((ah * sn, vp), (-ah * c, vm), (av * c, hm), (av * sn, hp)))
    return ds0, ds1, ds2, ds3


def _warn_if_dim(s0: float, threshold: float) -> None:
    if 0.0 < s0 < threshold:
        warnings.warn(
            f"mean photon number {s0:.3g} is below {threshold:.3g}; linearized Stokes "
            "variances may be inaccurate",
            LinearizationWarning,
            stacklevel=3,
        )


def stokes_variances(
    s: PolarizationState, threshold: float = LINEARIZATION_THRESHOLD
) -> tuple[float, float, float]:
    _, ds1, ds2, ds3 = stokes_fluctuations(s)
    _warn_if_dim(stokes_means(s)[0], threshold)
    return variance(ds1), variance(ds2), variance(ds3)


def poincare_radius(s0: float) -> float:
    return math.sqrt(s0 * s0 + 2.0 * s0)


def stokes_statistics(
    s: PolarizationState, threshold: float = LINEARIZATION_THRESHOLD
) -> StokesStatistics:
    means = stokes_means(s)
    fl = stokes_fluctuations(s)
    _warn_if_dim(means[0], threshold)
    return StokesStatistics(
        means=means,
        fluct=fl,
        variances=tuple(variance(f) for f in fl),
        poincare_radius=poincare_radius(means[0]),
    )


def uncertainty_check(stats: StokesStatistics, tol: float = 1e-9) -> list[UncertaintyMargin]:
    """Margins V_l V_m - <S_n>^2 for the three cyclic triples.

    ``ok`` is False when a margin is negative beyond ``tol`` relative to the
    bound, which would indicate a modelling error.
    """
    out = []
    for l, m, n in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
        product = stats.variances[l] * stats.variances[m]
        bound = stats.means[n] ** 2
        margin = product - bound
        out.append(UncertaintyMargin(l, m, n, product, bound, margin, margin >= -tol * max(1.0, bound)))
    return out


def stokes_variances_closed_form(
    alpha_h: float,
    alpha_v: float,
    theta: float,
    vh: tuple[float, float],
    vv: tuple[float, float],
    corr: Mapping[str, float] | None = None,
) -> tuple[float, float, float]:
    """Stokes variances from the expanded quadrature formulas.

    ``vh`` and ``vv`` are the total (signal + noise) (plus, minus) quadrature
    variances of the H and V modes. ``corr`` holds classical cross moments
    keyed ``"Vp,Hp"``, ``"Vm,Hp"``, ``"Vp,Vm"``, ``"Vp,Hm"``, ``"Vm,Hm"`` and
    ``"Hp,Hm"``; absent keys are zero. Quantum noise is assumed uncorrelated
    between quadratures, as for amplitude- or phase-squeezed pure modes.

    Independent of the fluctuation-vector path, so it serves as a check on it.
    """
    k = dict(corr or {})
    vp_hp = k.get("Vp,Hp", 0.0)
    vm_hp = k.get("Vm,Hp", 0.0)
    vp_vm = k.get("Vp,Vm", 0.0)
    vp_hm = k.get("Vp,Hm", 0.0)
    vm_hm = k.get("Vm,Hm", 0.0)
    hp_hm = k.get("Hp,Hm", 0.0)
    ah, av = alpha_h, alpha_v
    c, s = math.cos(theta), math.sin(theta)
    vhp, vhm = vh
    vvp, vvm = vv

    # S1 = ah dXH+ - av dXV+, so the cross term enters with a minus sign.
    v1 = ah**2 * vhp + av**2 * vvp - 2 * ah * av * vp_hp

    v2 = (
        ah**2 * c**2 * vvp
        + av**2 * c**2 * vhp
        + ah**2 * s**2 * vvm
        + av**2 * s**2 * vhm
        + 2 * ah * av * s * c * vm_hp
        + 2 * ah * av * c**2 * vp_hp
        + 2 * ah**2 * s * c * vp_vm
        - 2 * ah * av * s * c * vp_hm
        - 2 * ah * av * s**2 * vm_hm
        - 2 * av**2 * s * c * hp_hm
    )

    # The last S3 cross term pairs the two V quadratures.
    v3 = (
        ah**2 * c**2 * vvm
        + av**2 * c**2 * vhm
        + ah**2 * s**2 * vvp
        + av**2 * s**2 * vhp
        + 2 * ah * av * s * c * vp_hm
        + 2 * ah * av * s**2 * vp_hp
        + 2 * av**2 * s * c * hp_hm
        - 2 * ah * av * s * c * vm_hp
        - 2 * ah * av * c**2 * vm_hm
        - 2 * ah**2 * s * c * vp_vm
    )
    return v1, v2, v3
