import math

import numpy as np
import pytest
from scipy import special

from surfepr import oracles as orc
from surfepr.constants import EPS0
from surfepr.errors import ConfigError

# frozen reference values, computed once and checked against the reference rows
CPC_10_15_PER_UM = 0.06009407648998
TABLE_SEMI = {25.0: 7.155026663, 35.0: 6.719210840, 45.0: 6.551098188, 100.0: 6.402980905}
TABLE_CLOSED = {25.0: 7.155135766, 35.0: 6.719299106, 45.0: 6.551176847, 100.0: 6.403047113}


def test_K_special_values():
    assert orc.elliptic_K(0.0) == pytest.approx(math.pi / 2, rel=1e-15)
    lemn = math.gamma(0.25) ** 2 / (4 * math.sqrt(math.pi))
    assert orc.elliptic_K(1 / math.sqrt(2)) == pytest.approx(lemn, rel=1e-13)


@pytest.mark.parametrize("k", [1e-6, 0.1, 0.5, 0.9, 0.999, 1 - 1e-9])
def test_K_matches_scipy_parameter_convention(k):
    # ellipkm1 takes 1 - m, which keeps the reference accurate near k = 1
    assert orc.elliptic_K(k) == pytest.approx(special.ellipkm1((1 - k) * (1 + k)), rel=1e-12)
    assert orc.elliptic_E(k) == pytest.approx(special.ellipe(k * k), rel=1e-12)


@pytest.mark.parametrize("k", [0.01, 0.3, 0.7071, 0.95, 0.999])
def test_legendre_relation(k):
    assert abs(orc.legendre_relation_residual(k)) < 1e-12


def test_k_m_swap_breaks_legendre():
    # a sentinel: feeding m = k^2 where k is expected is detectably wrong
    k = 0.6
    K, Kp = orc.elliptic_K(k * k), orc.elliptic_Kp(k)
    E, Ep = orc.elliptic_E(k), orc.elliptic_Ep(k)
    assert abs(K * Ep + Kp * E - K * Kp - math.pi / 2) > 1e-3


def test_modulus_validation():
    with pytest.raises(ConfigError):
        orc.elliptic_K(1.0)
    with pytest.raises(ConfigError):
        orc.elliptic_K(-0.1)


def test_cpc_capacitance_frozen():
    assert orc.cpc_capacitance(orc.CpcSpec(10, 15)) == pytest.approx(CPC_10_15_PER_UM, rel=1e-12)
    # per-unit-length 60.1 pF/m; 100 µm window gives about 6.01 fF
    assert orc.cpc_capacitance(orc.CpcSpec(10, 15)) * 100 == pytest.approx(6.009, abs=1e-3)


def test_cpc_rejects_bad_order():
    with pytest.raises(ConfigError):
        orc.CpcSpec(15, 10)
    with pytest.raises(ConfigError):
        orc.CpcSpec(10, 10)


def test_cpc_psm_log_structure():
    s1 = orc.CpcSpec(10, 15, delta=3e-3)
    s2 = orc.CpcSpec(10, 15, delta=6e-3)
    p1, p2 = orc.cpc_psm(s1), orc.cpc_psm(s2)
    k = 10 / 15
    pref = s1.eps_sub ** 2 / (s1.eps_c * (s1.eps_sub + 1)) / (2 * (1 - k) * orc.elliptic_K(k) * orc.elliptic_Kp(k)) / 10
    # P(2d) - 2 P(d) only picks up the -ln 2 of the doubled log argument
    assert p2 - 2 * p1 == pytest.approx(-2 * 3e-3 * pref * math.log(2), rel=1e-12)


def test_cpc_psm_small_b_limit_finite():
    spec = orc.CpcSpec(1.0, 1e6, delta=1e-3)
    assert np.isfinite(orc.cpc_psm(spec)) and orc.cpc_psm(spec) > 0


def test_cpc_psm_leading_log_vs_exact_field():
    spec = orc.CpcSpec(10, 15)
    exact = orc.cpc_psm_semi_analytic(spec)
    assert orc.cpc_psm(spec) == pytest.approx(exact, rel=1e-3)


def test_cpc_field_potential_drop():
    spec = orc.CpcSpec(10, 15)
    from scipy.integrate import quad
    v, _ = quad(lambda x: orc.cpc_field(spec, x + 0j).real, -10, 10, limit=200)
    assert v == pytest.approx(1.0, rel=1e-8)


def test_gcpw_large_h_limit():
    s = orc.GcpwSpec(5, 30, 1e5)
    half_space = 2 * EPS0 * (s.eps_in + s.eps_out) * orc.elliptic_K(s.k) / orc.elliptic_Kp(s.k)
    assert orc.gcpw_capacitance(s) == pytest.approx(half_space, rel=1e-6)


def test_gcpw_capacitance_decreases_with_h():
    vals = [orc.gcpw_capacitance(orc.GcpwSpec(5, 30, h)) for h in (25, 35, 45, 100)]
    assert all(x > y for x, y in zip(vals, vals[1:]))


def test_k1_identity():
    for h in (25, 35, 45, 100):
        s = orc.GcpwSpec(5, 30, h)
        lhs = math.sinh(s.B - s.A) / math.sinh(s.B + s.A)
        assert lhs == pytest.approx((1 - s.k1) / (1 + s.k1), rel=1e-12)


def test_gcpw_field_edge_singularity():
    s = orc.GcpwSpec(5, 30, 25)
    for eps in (1e-4, 1e-5):
        e1 = abs(orc.gcpw_field(s, 5 + eps + 0j))
        e2 = abs(orc.gcpw_field(s, 5 + 2 * eps + 0j))
        assert e1 / e2 == pytest.approx(math.sqrt(2), rel=1e-3)
    with pytest.raises(ConfigError):
        orc.gcpw_field(s, 5 + 0j)


def test_gcpw_field_in_tends_to_out():
    # the approach is O((b/h)^2)
    s = orc.GcpwSpec(5, 30, 1e6)
    z = np.array([17.5 - 0.3j, 2.0 - 1j, 40 - 5j])
    ein = np.abs(orc.gcpw_field(s, z, "in"))
    eout = np.abs(orc.gcpw_field(s, z, "out"))
    assert np.allclose(ein, eout, rtol=1e-6)


def test_gcpw_field_log_form_matches_direct():
    s = orc.GcpwSpec(5, 30, 25)
    x = np.array([1.0, 4.9, 12.0, 31.0, 60.0])
    z = 0.01
    direct = np.abs(orc.gcpw_field(s, x - 1j * z)) ** 2
    assert np.allclose(orc.gcpw_field_in_abs2(s, x, z), direct, rtol=1e-10)


def test_gcpw_field_potential_drop():
    s = orc.GcpwSpec(5, 30, 25, phi0=2.0)
    from scipy.integrate import quad
    v, _ = quad(lambda x: math.sqrt(float(orc.gcpw_field_in_abs2(s, x, 0.0))), 5, 30, limit=400)
    assert v == pytest.approx(2.0, rel=1e-7)


def test_closed_form_is_integral_of_density():
    s = orc.GcpwSpec(5, 30, 25)
    assert orc.gcpw_psm_from_density(s) == pytest.approx(orc.gcpw_psm_closed_form(s), rel=1e-10)
    t = orc.gcpw_closed_form_terms(s)
    assert t.La > 0 and t.Lb > 0
    assert np.all(t.r(np.linspace(1e-6, 3e-3, 20)) > 0)


def test_phi0_independence():
    a = orc.gcpw_psm_closed_form(orc.GcpwSpec(5, 30, 25, phi0=1.0))
    b = orc.gcpw_psm_closed_form(orc.GcpwSpec(5, 30, 25, phi0=7.0))
    assert a == pytest.approx(b, rel=1e-14)


@pytest.mark.parametrize("h", [25.0, 35.0, 45.0, 100.0])
def test_table_rows_frozen(h):
    s = orc.GcpwSpec(5, 30, h)
    assert orc.gcpw_psm_closed_form(s) * 1e4 == pytest.approx(TABLE_CLOSED[h], rel=1e-9)
    assert orc.gcpw_psm_semi_analytic(s) * 1e4 == pytest.approx(TABLE_SEMI[h], rel=1e-8)


def test_semi_analytic_cutoff_independence():
    s = orc.GcpwSpec(5, 30, 25)
    p1 = orc.gcpw_psm_semi_analytic(s, cutoff=0.5)
    p2 = orc.gcpw_psm_semi_analytic(s, cutoff=1.0)
    assert p1 == pytest.approx(p2, rel=1e-8)


def test_effective_capacitance_symmetric_identity():
    c11, c12 = 40.0, -15.0
    ceff = orc.effective_junction_capacitance([[c11, c12], [c12, c11]])
    assert ceff == pytest.approx((c11 - c12) / 2, rel=1e-14)
    # doubling the matrix doubles C_eff and so halves E_c
    assert orc.effective_junction_capacitance([[2 * c11, 2 * c12], [2 * c12, 2 * c11]]) == pytest.approx(2 * ceff)
