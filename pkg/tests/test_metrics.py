import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polteleport.errors import DomainError, GainError
from polteleport.metrics import (
    CLASSICAL_LIMITS,
    closed_form,
    conditional_variances,
    fidelity_unity_gain,
    polarization_fidelity,
    reference_fidelity,
    transfer_coefficients,
    tv_point,
    tv_trajectory,
    unity_gain_locus,
)
from polteleport.protocols import ProtocolParams, quadrature_teleport_outcome, simulate


def test_unity_gain_fidelity_formula():
    assert fidelity_unity_gain(1.0, 1.0) == 1.0
    assert fidelity_unity_gain(3.0, 3.0) == 0.5


@pytest.mark.parametrize("v", [1.0, 0.5, 0.1, 0.01])
def test_twin_fidelity_closed_form(v):
    f = polarization_fidelity(simulate(ProtocolParams("twin", vsq=v)))
    assert f.total == pytest.approx(1 / (1 + v) ** 2, abs=1e-12)
    assert f.classical_limit == 0.25


def test_sqd_no_squeezing_is_one_over_root_six():
    f = polarization_fidelity(simulate(ProtocolParams("sqd", vsq=1.0, vsq3=1.0))).total
    assert f == pytest.approx(1 / math.sqrt(6), abs=1e-12)
    assert CLASSICAL_LIMITS["sqd"] == pytest.approx(f)


def test_squeezing_sq3_hurts_sqd_fidelity():
    for v in (0.9, 0.5, 0.1, 0.01):
        tied = polarization_fidelity(simulate(ProtocolParams("sqd", vsq=v, vsq3=v))).total
        free = polarization_fidelity(simulate(ProtocolParams("sqd", vsq=v, vsq3=1.0))).total
        assert tied < free


def test_fidelity_refuses_non_unity_gain():
    with pytest.raises(GainError):
        polarization_fidelity(simulate(ProtocolParams("twin", v_plus=1.1)))


def test_fidelity_refuses_non_coherent_input():
    from polteleport.fluct import SourceRegistry
    from polteleport.optics import squeezed
    from polteleport.protocols import quadrature_teleport_outcome

    reg = SourceRegistry()
    out = quadrature_teleport_outcome(inp=squeezed(reg, 0.5, "amplitude", signal=(1.0, 1.0)), reg=reg)
    with pytest.raises(GainError):
        polarization_fidelity(out)


def test_classical_quadrature_teleporter_tv():
    out = quadrature_teleport_outcome(vsq=1.0)
    assert transfer_coefficients(out)["Tq"] == pytest.approx(2 / 3, abs=1e-12)
    assert conditional_variances(out)["Vcv"] == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("v,tq,vcv", [(1.0, 4 / 3, 2.0), (0.1, 10 / 3, 0.2)])
def test_twin_unity_gain_tv(v, tq, vcv):
    p = tv_point(simulate(ProtocolParams("twin", vsq=v)))
    assert p.tq == pytest.approx(tq) and p.vcv == pytest.approx(vcv)


def test_sqd_large_gain_endpoint():
    out = simulate(ProtocolParams("sqd", vsq=1e-6, vsq3=1e-6, v_plus=1e3))
    p = tv_point(out)
    assert p.tq == pytest.approx(3.0, abs=1e-3)
    assert p.vcv < 1e-3


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(["twin", "sqd", "bet", "optimized-twin"]),
    st.floats(0.01, 1.0),
    st.floats(0.01, 1.0),
    st.floats(-3, 3),
    st.floats(0.02, 0.98),
    st.floats(0.02, 0.98),
)
def test_conditional_variance_identity(scheme, v, v3, g, e1, e2):
    p = ProtocolParams(scheme, vsq=v, vsq3=v3, v_plus=g, h_plus=g / 2)
    if scheme in ("bet", "optimized-twin"):
        p = ProtocolParams(scheme, vsq=v, vsq3=v3, v_plus=g, eps1=e1, eps2=e2)
    out = simulate(p)
    t = transfer_coefficients(out, include_v_minus=True)
    vcv = conditional_variances(out, include_v_minus=True)
    for key in out.info_quadratures:
        st_ = out.stats(key)
        assert vcv[key] == pytest.approx(st_.v_out_no_signal * (1 - t[key]), abs=1e-9)


def test_trajectory_requires_monotone_gains():
    with pytest.raises(ValueError):
        tv_trajectory(ProtocolParams("twin"), [1.0, 0.5])


def test_trajectory_passes_through_unity_gain_point():
    p = ProtocolParams("twin", vsq=0.5)
    pts = tv_trajectory(p, [0.0, 0.5, 1.0, 1.5])
    assert [x.gain for x in pts] == [0.0, 0.5, 1.0, 1.5]
    assert pts[0].tq == 0.0
    assert pts[2].tq == pytest.approx(tv_point(simulate(p)).tq)


def test_sqd_vertical_sweep_leaves_vcv_fixed():
    pts = tv_trajectory(ProtocolParams("sqd", vsq=0.5, vsq3=0.3), [0.1, 1.0, 10.0], which="v_plus")
    assert max(p.vcv for p in pts) - min(p.vcv for p in pts) < 1e-12
    assert pts[0].tq < pts[1].tq < pts[2].tq
    vcvs = [conditional_variances(simulate(ProtocolParams("sqd", vsq=0.5, vsq3=0.3, v_plus=g)))["V+"] for g in (0.1, 1.0, 10.0)]
    assert max(vcvs) - min(vcvs) < 1e-12


def test_unity_gain_locus_runs_from_classical_to_ideal():
    rows = unity_gain_locus(ProtocolParams("twin"), [1.0, 1e-6])
    assert rows[0][1].vcv == pytest.approx(2.0)
    assert rows[-1][1].vcv < 1e-5


def test_closed_forms_reduce_at_no_squeezing():
    ref = math.sqrt(2 * (1 - 0.3) / (3 - 2 * 0.3))
    assert closed_form("bet-best", v=1.0, eps1=0.4, eps2=0.3) == pytest.approx(ref)
    assert closed_form("four-sq", v=1.0, eps1=0.4, eps2=0.3) == pytest.approx(ref)


@pytest.mark.parametrize("scheme", ["bet", "optimized-twin"])
@pytest.mark.parametrize("v,e1,e2", [(0.5, 0.3, 0.6), (0.1, 0.05, 0.2), (0.01, 0.9, 0.1), (1.0, 0.5, 0.5)])
def test_simulation_matches_closed_forms(scheme, v, e1, e2):
    p = ProtocolParams(scheme, vsq=v, vsq3=v, eps1=e1, eps2=e2)
    sim = polarization_fidelity(simulate(p)).total
    assert sim == pytest.approx(reference_fidelity(p), abs=1e-12)


def test_reference_fidelity_absent_outside_formula_regime():
    assert reference_fidelity(ProtocolParams("bet", vsq=0.5, vsq3=0.5, eps1=0.3, eps2=0.3, polarity=-1)) is None
    assert reference_fidelity(ProtocolParams("bet", vsq=0.5, vsq3=0.5, eps1=0.3, eps2=0.3, v_minus=1.0)) is None
    assert reference_fidelity(ProtocolParams("twin", v_plus=2.0)) is None


def test_closed_form_domain_errors():
    with pytest.raises(DomainError):
        closed_form("twin", vsq=-1.0)
    with pytest.raises(DomainError):
        closed_form("sqd", vsq=0.5, vsq3=0.0)
    with pytest.raises(DomainError):
        closed_form("bet-best", v=0.5, eps1=1.5, eps2=0.5)
    with pytest.raises(ValueError):
        closed_form("five-sq")
