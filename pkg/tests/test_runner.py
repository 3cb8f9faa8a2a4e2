import math

import pytest

from surfepr.errors import ConfigError, ConvergenceError, NumericalError
from surfepr.mesh import RefinementConfig
from surfepr.runner import (MeshParams, RunConfig, SweepSpec, _expand_bracket, charging_energy_GHz, run_sweep,
                            stage, sweep_optimum)


def test_charging_energy_round_trip():
    C = SweepSpec(W=(1.0,)).target_capacitance
    assert C == pytest.approx(10.7612, rel=1e-4)
    assert charging_energy_GHz(C) == pytest.approx(1.8, rel=1e-12)
    with pytest.raises(NumericalError):
        charging_energy_GHz(0.0)


def test_mesh_params_parsing():
    mp = MeshParams.from_dict({"max_edge": 5, "refinement": {"boundary_layers": 4}})
    assert mp.refinement == RefinementConfig(2, 4)
    assert MeshParams.from_dict(mp.to_dict()) == mp
    mp2 = mp.with_overrides({"homogeneous_levels": 0, "max_edge": 7})
    assert mp2.max_edge == 7 and mp2.refinement.homogeneous_levels == 0
    with pytest.raises(ConfigError):
        mp.with_overrides({"nope": 1})
    with pytest.raises(ConfigError):
        MeshParams.from_dict({"refinement": {"levels": 1}})
    with pytest.raises(ConfigError):
        MeshParams.from_dict({"focus": [0, 1]})


def test_focus_box_defaults():
    from surfepr.geometry import generate_cpc, generate_gcpw, generate_rect_qubit
    mp = MeshParams(focus_margin=5.0)
    assert mp.focus_box(generate_cpc(10, 15, 400, 100)) == (-20, 20, -55, 55)
    assert mp.focus_box(generate_gcpw(5, 30, 25)) == (-35, 35, -55, 55)
    assert mp.focus_box(generate_rect_qubit(10, 20, 8)) == (-29, 29, -10, 10)


def test_run_config_sections():
    cfg = RunConfig.from_dict({"layout": {"generator": "cpc", "params": {"a": 10, "b": 15, "L": 400, "L0": 100}},
                               "interfaces": [{"kind": "SM", "delta_nm": 3, "eps_c": 11.9}],
                               "loss": {"f_GHz": 5, "tan_delta": {"SM": 1e-3}},
                               "window": [-15, 15, -10, 10], "greens": {"per_decade": 32}})
    assert cfg.window_obj().length_y == 20
    assert cfg.excitation_vector().tolist() == [1.0, 0.0]
    assert cfg.loss.omega_q == pytest.approx(2 * math.pi * 5e9)
    assert cfg.per_decade == 32
    with pytest.raises(ConfigError, match="sa_regions"):
        RunConfig.from_dict({"layout": {"generator": "rect_qubit", "params": {"W": 1, "H": 1, "D": 1}},
                             "interfaces": [{"kind": "SA", "delta_nm": 3, "eps_c": 11.9}]})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"layout": {"generator": "gcpw", "params": {"a": 5, "b": 30, "h": 25}},
                             "stackup": {"layers": [{"eps": 2}, {"eps": 1}]}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"mesh": {}})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"layout": {"generator": "cpc", "params": {"a": 1, "b": 2, "L": 9, "L0": 3}},
                             "neutrality": "sometimes"})


def test_sweep_spec_validation():
    with pytest.raises(ConfigError):
        SweepSpec(W=())
    with pytest.raises(ConfigError):
        SweepSpec(W=(10.0,), H_bracket=(5.0, 1.0))
    with pytest.raises(ConfigError):
        SweepSpec.from_dict({"D": 8})


def test_stage_prefixes_errors_once():
    with pytest.raises(ConfigError, match=r"^\[mesh\] bad$") as info:
        with stage("solve"):
            with stage("mesh"):
                raise ConfigError("bad")
    assert info.value.stage == "mesh"


def test_expand_bracket():
    lo, hi = _expand_bracket(lambda x: x - 37.0, 5.0, 0.1, 1e3)
    assert lo <= 37 <= hi and hi / lo == 2.0
    lo, hi = _expand_bracket(lambda x: x - 0.7, 5.0, 0.1, 1e3)
    assert lo <= 0.7 <= hi
    with pytest.raises(ConvergenceError):
        _expand_bracket(lambda x: 1.0, 5.0, 0.1, 1e3)


def test_sweep_optimum_parabola():
    xs = [1.0, 2.0, 4.0, 8.0, 16.0]
    rows = [{"H_over_W": x, "P_SM": (math.log(x) - math.log(5.0)) ** 2 + 1.0} for x in xs]
    opt = sweep_optimum(rows)
    assert opt["interior"] and opt["unimodal"]
    assert opt["H_over_W"] == pytest.approx(5.0, rel=1e-9)
    assert opt["value"] == pytest.approx(1.0, abs=1e-12)
    edge = sweep_optimum([{"H_over_W": x, "P_SM": x} for x in xs])
    assert not edge["interior"] and edge["index"] == 0


def test_small_sweep_meets_charging_energy(tmp_path):
    cfg = RunConfig.from_dict({
        "sweep": {"W": [40, 60], "tol": 2e-3},
        "mesh": {"max_edge": 10, "focus_margin": 0,
                 "refinement": {"homogeneous_levels": 0, "boundary_layers": 4, "first_layer_height": 0.01}}})
    rows, opt = run_sweep(cfg, str(tmp_path))
    assert [r["H_over_W"] for r in rows] == sorted(r["H_over_W"] for r in rows)
    for r in rows:
        assert abs(r["Ec_rel_error"]) < 2e-3
        assert r["P_SM_pad_a"] == pytest.approx(r["P_SM_pad_b"], rel=0.01)
    assert (tmp_path / "sweep.csv").read_text().startswith("W,H,H_over_W")
