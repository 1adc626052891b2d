import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polteleport.fluct import SourceRegistry
from polteleport.optics import PHASE, coherent, squeezed, vacuum
from polteleport.stokes import (
    LinearizationWarning,
    PolarizationState,
    poincare_radius,
    stokes_means,
    stokes_statistics,
    stokes_variances,
    stokes_variances_closed_form,
    uncertainty_check,
)
from polteleport.validation import closed_form_inputs, random_polarization_state


def _state(ah, av, theta=0.0, h=None, v=None):
    reg = SourceRegistry()
    return PolarizationState(h(reg) if h else coherent(reg, ah), v(reg) if v else coherent(reg, av), theta)


def test_vertical_coherent_example():
    s = _state(0.0, 10.0)
    assert stokes_variances(s) == pytest.approx((100.0, 100.0, 100.0))
    st_ = stokes_statistics(s)
    assert st_.poincare_radius == pytest.approx(math.sqrt(10200))


def test_circular_polarization_mean():
    with pytest.warns(LinearizationWarning):
        s = _state(1.0, 1.0, math.pi / 2)
        stokes_variances(s)
    assert stokes_means(s)[3] == pytest.approx(2.0)


def test_phase_squeezed_dark_mode_reduces_s3():
    s = _state(0.0, 10.0, h=lambda reg: squeezed(reg, 0.5, PHASE))
    v1, v2, v3 = stokes_variances(s)
    assert (v1, v2, v3) == pytest.approx((100.0, 200.0, 50.0))


@given(st.floats(0, 20), st.floats(0, 20), st.floats(-4, 4))
def test_coherent_noise_ball_is_round(ah, av, theta):
    s = _state(ah, av, theta)
    s0 = stokes_means(s)[0]
    assert stokes_variances(s, threshold=0.0) == pytest.approx((s0, s0, s0), abs=1e-9)


@given(st.floats(0.1, 20), st.floats(-4, 4))
def test_vertical_carrier_uncertainty_equality(av, theta):
    reg = SourceRegistry()
    s = PolarizationState(vacuum(reg), coherent(reg, av), theta)
    _, v2, v3 = stokes_variances(s, threshold=0.0)
    assert v2 * v3 == pytest.approx(stokes_means(s)[1] ** 2, rel=1e-9)


@given(st.floats(0, 10), st.floats(0, 10), st.floats(-4, 4), st.floats(0.1, 1), st.floats(0.1, 1))
def test_uncertainty_relations_hold_for_pure_states(ah, av, theta, vh, vv):
    s = _state(ah, av, theta, h=lambda reg: squeezed(reg, vh, PHASE, alpha=ah), v=lambda reg: squeezed(reg, vv, "amplitude", alpha=av))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinearizationWarning)
        margins = uncertainty_check(stokes_statistics(s), tol=1e-9)
    assert all(m.ok for m in margins)


def test_expanded_formula_matches_fluctuation_path():
    rng = np.random.default_rng(3)
    for _ in range(100):
        s = random_polarization_state(rng)
        direct = stokes_variances(s, threshold=0.0)
        formula = stokes_variances_closed_form(**closed_form_inputs(s))
        assert direct == pytest.approx(formula, abs=1e-9, rel=1e-12)


def test_cross_terms_carry_their_sign():
    # Perfectly correlated classical noise on H+ and V+ cancels in S1 when ah = av.
    base = dict(alpha_h=3.0, alpha_v=3.0, theta=0.0, vh=(2.0, 1.0), vv=(2.0, 1.0))
    v1, _, _ = stokes_variances_closed_form(corr={"Vp,Hp": 1.0}, **base)
    assert v1 == pytest.approx(9 * 2 + 9 * 2 - 2 * 9 * 1)


def test_dim_states_warn_and_dark_states_do_not():
    with pytest.warns(LinearizationWarning):
        stokes_variances(_state(0.0, 2.0))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        stokes_variances(_state(0.0, 0.0))
        stokes_variances(_state(0.0, 10.0))


def test_poincare_radius():
    assert poincare_radius(0.0) == 0.0
    assert poincare_radius(100.0) == pytest.approx(math.sqrt(10200))


def test_mode_lookup():
    s = _state(1.0, 2.0)
    assert s.mode("H") is s.h and s.mode("V") is s.v
    with pytest.raises(KeyError):
        s.mode("D")
