import math

import numpy as np
import pytest

from surfepr import field_epr as fe
from surfepr.constants import EPS0
from surfepr.errors import ConfigError, NumericalError
from surfepr.field_epr import (EprReport, InterfaceSpec, LossModel, energy_planes, epr_report, evaluate_field,
                               interface_energy, relaxation_rate, total_energy)
from surfepr.geometry import Window, generate_cpc, generate_gcpw, generate_rect_qubit
from surfepr.mesh import RefinementConfig
from surfepr.oracles import CpcSpec, GcpwSpec, cpc_field, cpc_psm, gcpw_field
from surfepr.runner import MeshParams, RunConfig, prepare

SM = InterfaceSpec("SM", 3.0, 11.9)


@pytest.fixture(scope="module")
def cpc():
    lay = generate_cpc(10.0, 15.0, 400.0, 100.0)
    cfg = RunConfig(layout=lay, mesh=MeshParams(10.3, 4.0, 1.4, 40.0,
                                                refinement=RefinementConfig(2, 8, 2.0, 1e-3)),
                    interfaces=(SM,))
    p = prepare(cfg)
    sols = p.solver.solve([[1.0, 0.0], [0.5, -0.5]])
    return p, sols


@pytest.fixture(scope="module")
def gcpw():
    lay = generate_gcpw(5.0, 30.0, 25.0, L=300.0, L0=60.0, Wg=100.0)
    cfg = RunConfig(layout=lay, mesh=MeshParams(8.0, 4.0, 1.4, 40.0, refinement=RefinementConfig(1, 6, 2.0, 1e-3)),
                    interfaces=(SM,))
    p = prepare(cfg)
    return p, p.solver.solve([1.0, 0.0])[0]


def test_interface_spec_validation_and_sides():
    with pytest.raises(ConfigError):
        InterfaceSpec("XX", 1.0, 1.0)
    with pytest.raises(ConfigError):
        InterfaceSpec("SM", 0.0, 1.0)
    with pytest.raises(ConfigError):
        InterfaceSpec("SM", 1.0, -2.0)
    assert InterfaceSpec("SM", 1, 1).sign == -1 and InterfaceSpec("MA", 1, 1).sign == 1
    assert InterfaceSpec("SA", 1, 1, side="above").sign == 1
    assert InterfaceSpec("SM", 2.0, 1).delta == pytest.approx(2e-3)


def test_depth_nodes_are_interior():
    z, w = SM.depth_nodes(8)
    assert np.all(z > 0) and np.all(z < SM.delta)
    assert w.sum() == pytest.approx(SM.delta, rel=1e-14)
    with pytest.raises(ConfigError):
        SM.depth_nodes(1)


def test_scaling_reduces_for_matching_layer():
    E = np.array([[0.3, -0.2, 1.7]])
    eps = 11.9
    assert InterfaceSpec("SM", 1, eps).energy_weight(E, eps)[0] == pytest.approx(EPS0 * eps * 1.7 ** 2)
    assert InterfaceSpec("SA", 1, eps).energy_weight(E, eps)[0] == pytest.approx(EPS0 * eps * (E ** 2).sum())
    assert InterfaceSpec("MA", 1, 1.0).energy_weight(E, 1.0)[0] == pytest.approx(EPS0 * 1.7 ** 2)
    # thin layer of lower permittivity stores more normal-field energy
    assert InterfaceSpec("SM", 1, 5.0).energy_weight(E, eps)[0] == pytest.approx(EPS0 * eps ** 2 / 5.0 * 1.7 ** 2)


def test_denominator_is_driven_charge(cpc):
    p, (s10, _) = cpc
    Q = s10.window_charges(p.mesh, p.window)
    assert total_energy(p.system, s10, p.window) == pytest.approx(Q[0])


def test_cpc_psm_close_to_oracle(cpc):
    p, (s10, _) = cpc
    rep = epr_report(p.system, s10, [SM], p.window)
    ref = cpc_psm(CpcSpec(10.0, 15.0))
    assert rep.ratio("SM") == pytest.approx(ref, rel=0.15)
    assert 0 < rep.ratio("SM") < 1


def test_gauge_invariance_of_participation(cpc):
    p, (s10, s_half) = cpc
    a = epr_report(p.system, s10, [SM], p.window).ratio("SM")
    b = epr_report(p.system, s_half, [SM], p.window).ratio("SM")
    assert abs(a / b - 1) < 1e-6


def test_splits_close_and_are_symmetric(cpc):
    p, (s10, _) = cpc
    e = interface_energy(SM, p.system, s10, p.window)
    assert abs(sum(e.splits.values()) / e.U - 1) < 1e-6
    assert e.splits["left"] == pytest.approx(e.splits["right"], rel=0.01)


def test_no_evaluation_on_interface(cpc):
    p, (s10, _) = cpc
    before = fe.eval_stats["points"]
    interface_energy(SM, p.system, s10, p.window)
    assert fe.eval_stats["on_interface"] == 0
    assert fe.eval_stats["points"] > before


def test_depth_profile_decreases(cpc):
    p, (s10, _) = cpc
    zk, dens = interface_energy(SM, p.system, s10, p.window).profile
    assert np.all(np.diff(zk) > 0) and np.all(np.diff(dens) < 0)


def test_gauss_order_convergence(cpc):
    p, (s10, _) = cpc
    u8 = interface_energy(SM, p.system, s10, p.window, order=8).U
    u16 = interface_energy(SM, p.system, s10, p.window, order=16).U
    assert abs(u16 / u8 - 1) < 0.01


def test_thickness_scaling_follows_log_law(cpc):
    p, (s10, _) = cpc
    thin = InterfaceSpec("SM", 1.0, 11.9)
    r = interface_energy(thin, p.system, s10, p.window).U / interface_energy(SM, p.system, s10, p.window).U
    ref = cpc_psm(CpcSpec(10.0, 15.0, delta=1e-3)) / cpc_psm(CpcSpec(10.0, 15.0))
    assert r == pytest.approx(ref, rel=0.05)


def test_mirror_symmetry_of_field(cpc):
    p, (_, s_half) = cpc
    xs = np.array([1.0, 4.0, 7.5, 9.5])
    pts = np.array([[x, 3.0, -0.01] for x in xs] + [[-x, 3.0, -0.01] for x in xs])
    _, E = evaluate_field(pts, p.system, s_half.a)
    n = len(xs)
    # odd potential: E_x even, E_z odd about x = 0
    np.testing.assert_allclose(E[:n, 0], E[n:, 0], rtol=1e-3)
    np.testing.assert_allclose(E[:n, 2], -E[n:, 2], rtol=1e-3, atol=1e-3 * np.abs(E[:, 0]).max())


def test_slot_field_matches_conformal_map(cpc):
    p, (s10, _) = cpc
    z = 0.05
    _, E = evaluate_field(np.array([[0.0, 0.0, -z]]), p.system, s10.a)
    ref = abs(cpc_field(CpcSpec(10.0, 15.0), 0.0 - 1j * z))
    assert np.linalg.norm(E[0]) == pytest.approx(ref, rel=0.05)


def test_zero_excitation_raises(cpc):
    p, _ = cpc
    zero = p.solver.solve([0.0, 0.0])[0]
    assert interface_energy(SM, p.system, zero, p.window).U == 0.0
    with pytest.raises(NumericalError):
        epr_report(p.system, zero, [SM], p.window)


def test_sa_needs_regions(cpc):
    p, (s10, _) = cpc
    sa = InterfaceSpec("SA", 3.0, 11.9)
    with pytest.raises(ConfigError):
        interface_energy(sa, p.system, s10, p.window)
    mp = MeshParams(10.3, 4.0, 1.4, 40.0, refinement=RefinementConfig(1, 4, 2.0, 1e-3))
    sam = mp.build_sa(p.layout)
    e = interface_energy(sa, p.system, s10, p.window, sa_mesh=sam)
    assert e.U > 0 and list(e.splits) == ["substrate"]


def test_window_enclosing_everything_changes_nothing():
    lay = generate_rect_qubit(20.0, 40.0, 8.0)
    cfg = RunConfig(layout=lay, mesh=MeshParams(4.0, refinement=RefinementConfig(1, 4, 2.0, 1e-3)))
    p = prepare(cfg, neutrality=True)
    sol = p.solver.solve([1.0, 0.0])[0]
    spec = InterfaceSpec("SM", 1.0, 10.15)
    a = epr_report(p.system, sol, [spec]).ratio("SM")
    b = epr_report(p.system, sol, [spec], Window(-1e3, 1e3, -1e3, 1e3)).ratio("SM")
    assert a == b
    sp = epr_report(p.system, sol, [spec]).split_ratios("SM")
    assert sp["pad_a"] == pytest.approx(sp["pad_b"], rel=0.01)


def test_frozen_scattered_field_matches_full(gcpw, monkeypatch):
    p, sol = gcpw
    frozen = interface_energy(SM, p.system, sol, p.window).U
    monkeypatch.setattr(fe, "FROZEN_SCT_RATIO", 0.0)
    full = interface_energy(SM, p.system, sol, p.window).U
    assert abs(frozen / full - 1) < 1e-6


def test_gcpw_slot_field_matches_conformal_map(gcpw):
    p, sol = gcpw
    z = 0.5 * SM.delta  # a tabulated plane
    _, E = evaluate_field(np.array([[17.5, 0.0, -z]]), p.system, sol.a)
    ref = abs(gcpw_field(GcpwSpec(5.0, 30.0, 25.0), 17.5 - 1j * z))
    assert np.linalg.norm(E[0]) == pytest.approx(ref, rel=0.05)


def test_energy_planes_cover_nodes():
    from surfepr.stackup import Stackup
    st = Stackup.substrate_over_pec(11.9, 25.0)
    planes = energy_planes(st, [SM, InterfaceSpec("MA", 2.0, 10.0)], 4)
    assert 0.0 in planes and len(planes) == 1 + 5 + 5
    assert min(planes) > -SM.delta and max(planes) < 2e-3


def test_loss_rate_arithmetic():
    loss = LossModel(2 * math.pi * 5e9, {"SM": 1e-3})
    assert relaxation_rate({"SM": 2.12e-4}, loss) == pytest.approx(6.66e3, rel=1e-3)
    assert relaxation_rate({"SM": 2.12e-4, "MA": 1e-3}, LossModel(1e10, {})) == 0.0
    with pytest.raises(ConfigError):
        LossModel(-1.0, {})
    with pytest.raises(ConfigError):
        LossModel(1.0, {"SM": -1e-3})


def test_report_serialisation():
    e = fe.InterfaceEnergy(SM, 2.0, {"a": 1.5, "b": 0.5}, (np.zeros(1), np.zeros(1)), 10)
    rep = EprReport([e], 4.0, {"n_elements": 10})
    d = rep.to_dict()
    assert d["schema_version"] == 1 and d["interfaces"][0]["P"] == 0.5 and d["total_P"] == 0.5
    assert rep.split_ratios("SM") == {"a": 0.375, "b": 0.125}
    assert rep.to_csv().splitlines()[0] == "kind,delta_nm,eps_c,U_fF_V2,P"
    with pytest.raises(KeyError):
        rep.ratio("MA")
