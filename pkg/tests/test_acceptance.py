"""Acceptance criteria. Each test records one PASS/FAIL line (see conftest)."""
import math
import os
import time

import numpy as np
import pytest

from surfepr.field_epr import epr_report
from surfepr.geometry import generate_cpc, generate_gcpw
from surfepr.greens import LayeredGreens, TableSet, interp_table
from surfepr.mesh import RefinementConfig, refine, triangulate
from surfepr.oracles import (CpcSpec, GcpwSpec, cpc_capacitance, cpc_psm, gcpw_capacitance,
                             gcpw_psm_semi_analytic, image_series_substrate_pec, round_sig, gcpw_psm_reference_rows)
from surfepr.runner import RunConfig, prepare, run_cap, run_convergence, run_epr, run_sweep
from surfepr.solver import capacitance_matrix
from surfepr.constants import EPS0
from surfepr.stackup import DielectricLayer, Stackup

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def _load(name, **mesh_over):
    cfg = RunConfig.load(os.path.join(CONFIGS, name))
    if mesh_over:
        cfg.mesh = cfg.mesh.with_overrides(mesh_over)
    return cfg


def _with_layout(cfg, layout):
    cfg.layout = layout
    return cfg


def test_c01_two_layer_scattered_part_vanishes(acceptance):
    t0 = time.perf_counter()
    g = LayeredGreens(Stackup.two_layer(11.9, 1.0))
    worst = worst_tot = 0.0
    for rho in np.geomspace(1e-2, 1e3, 11):
        for z in (-1.0, 0.0, 1.0):
            worst = max(worst, abs(g.scattered(0, rho, [z], force=True)[0][0]) / g.primary(0, rho, z))
        # on the interface the total is the homogeneous kernel at the mean permittivity
        ref = 1.0 / (4 * math.pi * EPS0 * 0.5 * (11.9 + 1.0) * rho)
        worst_tot = max(worst_tot, abs(g.total(0, rho, 0.0)[0] / ref - 1))
    dt = time.perf_counter() - t0
    ok = worst < 1e-10 and worst_tot < 1e-10 and dt < 10
    acceptance(1, ok, f"max |G_sct|/|G_prm| = {worst:.1e}, total vs mean-permittivity kernel {worst_tot:.1e} "
                      f"(both < 1e-10), {dt:.1f} s (< 10 s)")
    assert ok


def test_c02_image_series(acceptance):
    t0 = time.perf_counter()
    h = 25.0
    g = LayeredGreens(Stackup.substrate_over_pec(11.9, h))
    worst = 0.0
    for z in (0.0, 2.0):
        for rho in np.geomspace(0.02, 800.0, 10):
            ref = image_series_substrate_pec(11.9, 1.0, h, rho, z)
            worst = max(worst, abs(g.total(0, rho, z)[0] / ref - 1))
    dt = time.perf_counter() - t0
    ok = worst < 1e-8 and dt < 30
    acceptance(2, ok, f"max rel. error vs image series at 20 points = {worst:.1e} (< 1e-8), {dt:.1f} s (< 30 s)")
    assert ok


def test_c03_table_gradients_vs_finite_differences(acceptance):
    t0 = time.perf_counter()
    st = Stackup((DielectricLayer(11.9), DielectricLayer(4.0, 2.0), DielectricLayer(1.0)), bottom_pec=-25.0)
    ts = TableSet.build(st, [0, 1], [-0.3, 0.0, 0.7, 2.0, 2.4], (1e-3, 300.0), 64)
    g = LayeredGreens(st)
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        s = int(rng.integers(2))
        p = int(rng.integers(len(ts.planes)))
        z = float(ts.planes[p])
        rho = float(np.exp(rng.uniform(math.log(0.05), math.log(200.0))))
        _, gr, gz = interp_table(ts.G[s, p], ts.Gr[s, p], ts.Gz[s, p], ts.u0, ts.du, np.array([rho]))
        h = 2e-4 * rho
        fr = (g.scattered(s, rho + h, [z])[0][0] - g.scattered(s, rho - h, [z])[0][0]) / (2 * h)
        if z in st.interface_z:
            fz = gz[0]
        else:
            hz = 2e-4 * max(rho, 1.0)
            v = g.scattered(s, rho, [z - hz, z + hz])[0]
            fz = (v[1] - v[0]) / (2 * hz)
        worst = max(worst, max(abs(gr[0] - fr), abs(gz[0] - fz)) / math.hypot(fr, fz))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and dt < 30
    acceptance(3, ok, f"max rel. gradient error at 100 points = {worst:.1e} (<= 1e-6), {dt:.1f} s incl. build (< 30 s)")
    assert ok


@pytest.mark.slow
@pytest.mark.parametrize("a, b", [(10.0, 15.0), (5.0, 15.0), (5.0, 30.0)])
def test_c04_cpc_capacitance(acceptance, a, b):
    t0 = time.perf_counter()
    cfg = _with_layout(_load("cpc.json", boundary_layers=4), generate_cpc(a, b, 800.0, 100.0))
    C = run_cap(cfg)
    ref = cpc_capacitance(CpcSpec(a, b)) * 100.0
    err = C.C[0, 0] / ref - 1
    dt = time.perf_counter() - t0
    ok = abs(err) < 0.01 and dt <= 60
    acceptance(f"4 (a={a:g}, b={b:g})", ok,
               f"C = {C.C[0, 0]:.5f} fF vs {ref:.5f} fF, error {err:+.3%} (1%), N = {C.meta['n_elements']}, "
               f"{dt:.0f} s (<= 60 s)")
    assert ok


@pytest.mark.slow
@pytest.mark.parametrize("a, b", [(10.0, 15.0), (5.0, 15.0), (5.0, 30.0)])
def test_c05_cpc_psm(acceptance, a, b):
    t0 = time.perf_counter()
    cfg = _with_layout(_load("cpc.json"), generate_cpc(a, b, 800.0, 100.0))
    rep = run_epr(cfg)
    P = rep.ratio("SM")
    ref = cpc_psm(CpcSpec(a, b))
    err = P / ref - 1
    dt = time.perf_counter() - t0
    ok = abs(err) <= 0.15 and dt <= 600
    stretch = "met" if abs(err) <= 0.05 else "not met"
    acceptance(f"5 (a={a:g}, b={b:g})", ok,
               f"P_SM = {P:.4e} vs {ref:.4e}, error {err:+.2%} (15%; 5% stretch {stretch}), "
               f"N = {rep.meta['n_elements']}, {dt:.0f} s (<= 600 s)")
    assert ok


_GCPW = {}


def _gcpw_run(h, with_epr):
    """Capacitance (and P_SM) of the (5, 30) GCPW; timings kept separately."""
    cfg = _load("gcpw.json")
    cfg.layout = generate_gcpw(5.0, 30.0, h, L=800.0, L0=100.0, Wg=300.0)
    t0 = time.perf_counter()
    p = prepare(cfg)
    C, sols = capacitance_matrix(p.system, p.window, solver=p.solver)
    t_cap = time.perf_counter() - t0
    out = {"C": float(C.C[0, 0]), "n": p.mesh.n, "t_cap": t_cap}
    if with_epr:
        rep = epr_report(p.system, sols[0], cfg.interfaces, p.window, cfg.gauss_order)
        out["P"] = rep.ratio("SM")
        out["t_epr"] = time.perf_counter() - t0
    return out


@pytest.mark.slow
@pytest.mark.parametrize("h", [25.0, 35.0, 45.0, 100.0])
def test_c06_gcpw_capacitance(acceptance, h):
    r = _GCPW[h] = _gcpw_run(h, with_epr=h in (25.0, 100.0))
    ref = gcpw_capacitance(GcpwSpec(5.0, 30.0, h)) * 100.0
    err = r["C"] / ref - 1
    ok = abs(err) < 0.01 and r["t_cap"] <= 300
    acceptance(f"6 (h={h:g})", ok, f"C = {r['C']:.5f} fF vs {ref:.5f} fF, error {err:+.3%} (1%), "
                                   f"N = {r['n']}, {r['t_cap']:.0f} s (<= 300 s)")
    assert ok


def test_c07_gcpw_psm_reference_rows(acceptance):
    t0 = time.perf_counter()
    rows = gcpw_psm_reference_rows()
    # the tabulated values carry 6 s.f.; matching them at 6 s.f. implies 5 s.f. agreement
    # without the double rounding of comparing both sides at 5
    sf = all(round_sig(r["semi"], 6) == r["semi_ref"] and round_sig(r["closed"], 6) == r["closed_ref"]
             for r in rows)
    fac = [r["rel_diff_pct"] / r["rel_diff_ref_pct"] for r in rows]
    dt = time.perf_counter() - t0
    ok = sf and all(0.5 <= f <= 2.0 for f in fac) and dt < 5
    acceptance(7, ok, f"6 s.f. match of all rows {sf}, rel-diff ratios {[round(f, 2) for f in fac]} (within x2), "
                      f"{dt:.2f} s (< 5 s)")
    assert ok


@pytest.mark.slow
@pytest.mark.parametrize("h", [25.0, 100.0])
def test_c08_gcpw_psm(acceptance, h):
    r = _GCPW.get(h) or _gcpw_run(h, with_epr=True)
    ref = gcpw_psm_semi_analytic(GcpwSpec(5.0, 30.0, h))
    err = r["P"] / ref - 1
    ok = abs(err) <= 0.15 and r["t_epr"] <= 900
    acceptance(f"8 (h={h:g})", ok, f"P_SM = {r['P']:.4e} vs {ref:.4e}, error {err:+.2%} (15%), "
                                   f"{r['t_epr']:.0f} s (<= 900 s)")
    assert ok


@pytest.mark.slow
def test_c09_qubit_sweep(acceptance, tmp_path):
    t0 = time.perf_counter()
    cfg = RunConfig.load(os.path.join(CONFIGS, "qubit_sweep.json"))
    rows, opt = run_sweep(cfg, str(tmp_path))
    dt = time.perf_counter() - t0
    x, v = opt["H_over_W"], opt["value"]
    loc = opt["interior"] and abs(x / 4.78 - 1) <= 0.15
    val = abs(v / 0.27e-4 - 1) <= 0.20
    ec = max(abs(r["Ec_rel_error"]) for r in rows)
    ok = loc and val and dt <= 7200 and len(rows) == 12
    acceptance(9, ok, f"minimum at H/W = {x:.2f} (4.78 +-15%: {'ok' if loc else 'no'}, interior {opt['interior']}), "
                      f"P_SM = {v:.3e} (0.27e-4 +-20%: {'ok' if val else 'no'}), max |Ec error| {ec:.1e}, "
                      f"{len(rows)} points in {dt / 60:.0f} min (<= 120)")
    assert ok


# ---------------------------------------------------------------------------
# criterion 10: properties

@pytest.fixture(scope="module")
def qubit():
    cfg = _load("qubit.json")
    p = prepare(cfg, neutrality=True)
    return cfg, p


def test_c10a_neutrality(acceptance, qubit):
    _, p = qubit
    sol = p.solver.solve([1.0, 0.0])[0]
    r = abs(sol.Q.sum()) / np.abs(sol.Q).max()
    ok = r < 1e-10
    acceptance("10a neutrality", ok, f"|sum Q| / max |Q| = {r:.1e} (< 1e-10)")
    assert ok


def test_c10b_capacitance_symmetry(acceptance):
    cfg = _load("cpc.json", boundary_layers=4)
    cfg.layout = generate_cpc(5.0, 30.0, 800.0, 100.0)
    C = run_cap(cfg)
    e = C.symmetry_error()
    ok = e < 5e-3
    acceptance("10b C symmetry", ok, f"max |C_pq - C_qp| / |C_pq| = {e:.1e} (< 0.5%)")
    assert ok


def test_c10c_gauge_invariance(acceptance, qubit):
    cfg, p = qubit
    a, b = p.solver.solve([[1.0, 0.0], [0.5, -0.5]])
    Pa = epr_report(p.system, a, cfg.interfaces).ratio("SM")
    Pb = epr_report(p.system, b, cfg.interfaces).ratio("SM")
    d = abs(Pa / Pb - 1)
    ok = d < 1e-6
    acceptance("10c gauge", ok, f"P_SM for V=(1,0) vs (1/2,-1/2) differ by {d:.1e} (< 1e-6)")
    assert ok


def test_c10d_area_conservation(acceptance):
    worst = 0.0
    for lay in (generate_cpc(10.0, 15.0, 800.0, 100.0), generate_gcpw(5.0, 30.0, 25.0, Wg=300.0)):
        m = refine(triangulate(lay, 10.3, 4.0, None, 1.4, 60.0), RefinementConfig(2, 8, 2.0, 1e-3))
        for k, n in enumerate(lay.nets):
            worst = max(worst, abs(m.net_area(k) / n.area - 1))
    ok = worst < 1e-9
    acceptance("10d area", ok, f"max relative area change after refinement = {worst:.1e} (< 1e-9)")
    assert ok


@pytest.mark.slow
def test_c10e_monotone_ladder(acceptance, tmp_path):
    cfg = _load("cpc.json")
    rows = run_convergence(cfg, str(tmp_path))
    c = [r for r in rows if r["quantity"] == "C_fF"]
    p = [r for r in rows if r["quantity"] == "P_SM"]
    ec = [abs(r["relative_error"]) for r in c]
    ep = [abs(r["relative_error"]) for r in p]
    n = [r["n_elements"] for r in c]
    ok = all(x > y for x, y in zip(ec, ec[1:])) and n == sorted(n)
    ok_p = all(x > y for x, y in zip(ep, ep[1:]))
    acceptance("10e ladder", ok and ok_p,
               f"N {n}, |C error| {[f'{e:.2%}' for e in ec]} decreasing {ok}; "
               f"|P_SM error| {[f'{e:.1%}' for e in ep]} decreasing {ok_p}")
    assert ok and ok_p


def test_c10f_symmetric_pads(acceptance, qubit):
    cfg, p = qubit
    sol = p.solver.solve(cfg.excitation_vector())[0]
    sp = epr_report(p.system, sol, cfg.interfaces).split_ratios("SM")
    d = abs(sp["pad_a"] / sp["pad_b"] - 1)
    ok = d < 0.01
    acceptance("10f pad symmetry", ok, f"P_qa = {sp['pad_a']:.4e}, P_qb = {sp['pad_b']:.4e}, differ by {d:.1e} (< 1%)")
    assert ok
