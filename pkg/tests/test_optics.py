import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from polteleport.errors import ParameterError
from polteleport.fluct import SourceRegistry, covariance, symplectic_product, variance
from polteleport.optics import (
    AMPLITUDE,
    DIRECT,
    PHASE,
    beamsplitter,
    coherent,
    detect,
    epr_pair,
    make_mode,
    modulate,
    phase_shift,
    squeezed,
    vacuum,
)


def test_vacuum_and_coherent_are_shot_noise_limited():
    reg = SourceRegistry()
    for m in (vacuum(reg), coherent(reg, 3.0)):
        assert m.quantum_variances() == (1.0, 1.0)
        assert m.symplectic() == 1.0
    assert coherent(reg, 3.0).alpha == 3.0


@pytest.mark.parametrize("quad,expected", [(AMPLITUDE, (0.25, 4.0)), (PHASE, (4.0, 0.25))])
def test_squeezed_is_minimum_uncertainty(quad, expected):
    m = squeezed(SourceRegistry(), 0.25, quad)
    assert m.quantum_variances() == pytest.approx(expected)
    vp, vm = m.quantum_variances()
    assert vp * vm == pytest.approx(1.0)


def test_signal_is_classical():
    m = coherent(SourceRegistry(), 1.0, signal=(2.0, 0.5))
    assert m.classical_variances() == pytest.approx((2.0, 0.5))
    assert m.v_plus == pytest.approx(3.0)
    assert m.quantum_variances() == (1.0, 1.0)


def test_bad_mode_kinds():
    reg = SourceRegistry()
    with pytest.raises(ParameterError):
        make_mode(reg, "thermal")
    with pytest.raises(ParameterError):
        make_mode(reg, "squeezed", variance=0.0)
    with pytest.raises(ParameterError):
        make_mode(reg, "vacuum", alpha=1.0)


def test_beamsplitter_convention():
    reg = SourceRegistry()
    a, b = coherent(reg, 2.0), coherent(reg, 1.0)
    c, d = beamsplitter(a, b, 0.36)
    assert c.carrier == pytest.approx(0.6 * 2.0 + 0.8 * 1.0)
    assert d.carrier == pytest.approx(0.8 * 2.0 - 0.6 * 1.0)


@pytest.mark.parametrize("eps", [-0.1, 1.1])
def test_beamsplitter_rejects_bad_transmittivity(eps):
    reg = SourceRegistry()
    with pytest.raises(ParameterError):
        beamsplitter(vacuum(reg), vacuum(reg), eps)


@given(st.floats(0, 1), st.floats(0.05, 1), st.floats(0.05, 1))
def test_beamsplitter_is_symplectic_and_energy_preserving(eps, v1, v2):
    reg = SourceRegistry()
    a = squeezed(reg, v1, AMPLITUDE)
    b = squeezed(reg, v2, PHASE)
    c, d = beamsplitter(a, b, eps)
    assert c.symplectic() == pytest.approx(1.0, abs=1e-12)
    assert d.symplectic() == pytest.approx(1.0, abs=1e-12)
    assert symplectic_product(c.x_plus, d.x_minus) == pytest.approx(0.0, abs=1e-12)
    total_in = sum(a.quantum_variances()) + sum(b.quantum_variances())
    total_out = sum(c.quantum_variances()) + sum(d.quantum_variances())
    assert total_out == pytest.approx(total_in)


@given(st.floats(-7, 7))
def test_phase_shift_rotates_quadratures(phi):
    m = squeezed(SourceRegistry(), 0.5, AMPLITUDE, alpha=1.0)
    r = phase_shift(m, phi)
    c, s = math.cos(phi), math.sin(phi)
    assert r.v_plus == pytest.approx(c * c * 0.5 + s * s * 2.0)
    assert r.symplectic() == pytest.approx(1.0, abs=1e-12)
    assert abs(r.carrier) == pytest.approx(1.0)


def test_epr_correlations():
    v = 0.2
    e1, e2 = epr_pair(SourceRegistry(), v)
    assert variance(e1.x_plus + e2.x_plus) == pytest.approx(2 * v)
    assert variance(e1.x_minus - e2.x_minus) == pytest.approx(2 * v)
    assert e1.quantum_variances() == pytest.approx(((v + 1 / v) / 2,) * 2)
    assert covariance(e1.x_plus, e2.x_plus) == pytest.approx((1 / v - v) / 2 * -1)


@pytest.mark.parametrize("v", [0.0, 1.5])
def test_epr_rejects_bad_squeezing(v):
    with pytest.raises(ParameterError):
        epr_pair(SourceRegistry(), v)


def test_detection_and_modulation():
    reg = SourceRegistry()
    bright = coherent(reg, 5.0, signal=(1.0, 1.0))
    cur = detect(bright, DIRECT)
    assert cur.signal is bright.x_plus
    assert detect(bright, PHASE).signal is bright.x_minus
    with pytest.raises(ParameterError):
        detect(vacuum(reg), DIRECT)
    with pytest.raises(ParameterError):
        detect(bright, "heterodyne")
    target = vacuum(reg)
    out = modulate(target, AMPLITUDE, 2.0, cur)
    assert out.v_plus == pytest.approx(1.0 + 4.0 * 2.0)
    assert out.v_minus == 1.0
    assert modulate(target, PHASE, 0.0, cur) is target
