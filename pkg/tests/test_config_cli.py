"""Config schema, the builders, the experiment runner, and the CLI."""

import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from tensorpde.cli import main
from tensorpde.config import (ConfigError, ExperimentConfig, build_model,
                              build_solver, load_config)
from tensorpde.models import AdvectionSpec, BGKSpec, spiral_matrix
from tensorpde.runner import run


def _write_cfg(tmp_path, data, name="exp.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def test_load_config_defaults(tmp_path):
    cfg = load_config(_write_cfg(tmp_path, {"experiment": "bgk-steady"}))
    assert cfg.experiment == "bgk-steady"
    assert (cfg.out, cfg.workers, cfg.seed) == ("out", 1, 0)
    assert (cfg.steps, cfg.rank, cfg.epsilon) == (100, 2, 0.3)
    assert cfg.model == {} and cfg.solver == {} and cfg.sweep == {}


@pytest.mark.parametrize("data,match", [
    ({"experiment": "bgk-steady", "stepz": 3}, "unknown config keys: stepz"),
    ({"experiment": "bgk-steady", "model": {"kind": "bgk", "Tt": 1}},
     "unknown model keys: Tt"),
    ({"experiment": "bgk-steady", "model": {"T": 1.0}}, "must set 'kind'"),
    ({"experiment": "bgk-steady",
      "solver": {"kind": "explicit", "cfl": 0.5}}, "unknown solver keys: cfl"),
    ({"experiment": "bgk-steady", "sweep": {"qlist": [1]}},
     "unknown sweep keys: qlist"),
    ({"out": "x"}, "must set 'experiment'"),
    ({"experiment": "warp-drive"}, "unknown experiment"),
    ({"experiment": "bgk-steady", "steps": 0}, "at least 1"),
])
def test_config_rejects_bad_input(tmp_path, data, match):
    with pytest.raises(ConfigError, match=match):
        load_config(_write_cfg(tmp_path, data))


def test_config_root_must_be_a_mapping(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- a\n- b\n")
    with pytest.raises(ConfigError, match="root must be a mapping"):
        load_config(path)


def test_load_config_reports_parse_errors(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("experiment: [unclosed\n")
    with pytest.raises(ConfigError, match="cannot parse"):
        load_config(path)


def test_build_model_defaults_follow_the_experiment():
    adv = build_model(ExperimentConfig("advection-error"))
    assert isinstance(adv, AdvectionSpec) and adv.ndim == 2
    assert np.array_equal(adv.C, spiral_matrix(2, 1.0))
    assert isinstance(build_model(ExperimentConfig("bgk-steady")), BGKSpec)


def test_build_model_passes_sections_through():
    cfg = ExperimentConfig("advection-error",
                           model={"kind": "advection", "n_dims": 3,
                                  "shear": 2.0, "b": 8.0, "Q": 17})
    adv = build_model(cfg)
    assert adv.ndim == 3 and adv.b == 8.0 and adv.Q == 17
    assert np.array_equal(adv.C, spiral_matrix(3, 2.0))
    kin = build_model(ExperimentConfig("bgk-relax",
                                       model={"kind": "bgk", "T": 100.0, "Q": 5}))
    assert kin.T == 100.0 and kin.Q == 5


def test_build_solver_defaults_from_the_model():
    cfg = ExperimentConfig("bgk-steady", workers=3)
    model = build_model(cfg)
    solver = build_solver(cfg, model)
    assert solver.dt == model.dt and solver.eps_tol == model.eps_tol
    assert solver.workers == 3


def test_build_solver_explicit_defaults():
    cfg = ExperimentConfig("advection-error", rank=5, seed=7)
    solver = build_solver(cfg, build_model(cfg))
    assert solver.dt == 1e-3 and solver.r_max == 5
    assert solver.als.seed == 7


def test_build_solver_rejects_mismatched_model():
    cfg = ExperimentConfig("bgk-steady", solver={"kind": "implicit-als"})
    with pytest.raises(ConfigError, match="expects the bgk model"):
        build_solver(cfg, build_model(ExperimentConfig("advection-error")))


def test_unknown_kinds_are_rejected():
    with pytest.raises(ConfigError, match="unknown model kind"):
        build_model(ExperimentConfig("bgk-steady", model={"kind": "vlasov"}))
    with pytest.raises(ConfigError, match="unknown solver kind"):
        build_solver(ExperimentConfig("bgk-steady", solver={"kind": "magic"}),
                     build_model(ExperimentConfig("bgk-steady")))


def test_runner_bgk_steady_artifacts(tmp_path):
    out = tmp_path / "run"
    cfg = ExperimentConfig("bgk-steady", out=str(out), steps=2, rank=1,
                           model={"kind": "bgk", "Q": 5})
    assert run(cfg) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["artifacts"] == ["moments.csv", "error.csv"]
    assert man["converged"] is True and man["sweeps_total"] >= 2
    # Q=5 resolves the Maxwellian only coarsely; the floor is ~0.1
    assert 0.0 < man["approximation_floor"] < 0.5
    assert man["config"]["experiment"] == "bgk-steady"
    assert "wall_seconds" in man and "build" in man
    lines = (out / "moments.csv").read_text().splitlines()
    assert lines[0] == "# tensorpde-csv v1 moments"
    assert lines[1] == "t,rho,ux,uy,uz,T"
    assert len(lines) == 2 + cfg.steps + 1  # version, header, one row per time
    err = (out / "error.csv").read_text().splitlines()
    assert err[0] == "# tensorpde-csv v1 nmae"
    assert err[1] == "t,nmae"


def test_runner_bgk_relax_reports_rates(tmp_path):
    out = tmp_path / "run"
    # Q=9 keeps the perturbation error well above twice the floor, so the
    # rate fit has samples to work with
    cfg = ExperimentConfig("bgk-relax", out=str(out), steps=6, rank=2,
                           model={"kind": "bgk", "Q": 9})
    assert run(cfg) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["nominal_rate"] == pytest.approx(1.0 / 0.40034)
    # six steps is far too short a window to pin the rate; just bracket it
    assert 0.0 < man["fitted_rate"] < 10.0 * man["nominal_rate"]


def test_runner_advection_error_artifacts(tmp_path):
    out = tmp_path / "run"
    cfg = ExperimentConfig("advection-error", out=str(out), steps=3, rank=4,
                           model={"kind": "advection", "Q": 9, "b": 6.0},
                           solver={"kind": "explicit", "dt": 1e-3})
    assert run(cfg) == 0
    rows = (out / "error.csv").read_text().splitlines()
    assert rows[0] == "# tensorpde-csv v1 probe-error"
    assert rows[1] == "t,relative_error,rank"
    assert len(rows) == 2 + cfg.steps
    assert all(int(r.rsplit(",", 1)[1]) <= 4 for r in rows[2:])
    man = json.loads((out / "manifest.json").read_text())
    assert man["max_error"] >= man["median_error"] > 0.0
    assert man["reductions"] > 0


def test_runner_maxwellian_sweep(tmp_path):
    out = tmp_path / "run"
    cfg = ExperimentConfig("maxwellian-approx", out=str(out),
                           sweep={"q_list": [5, 7], "ratio_list": [1.0]})
    assert run(cfg) == 0
    rows = (out / "nmae_heatmap.csv").read_text().splitlines()
    assert rows[0] == "# tensorpde-csv v1 maxwellian-sweep"
    assert rows[1] == "Q,b_v,ratio,nmae"
    assert len(rows) == 4
    man = json.loads((out / "manifest.json").read_text())
    assert man["cells"] == 2


def test_runner_maxwellian_sweep_rejects_small_domains(tmp_path):
    cfg = ExperimentConfig("maxwellian-approx", out=str(tmp_path / "run"),
                           sweep={"q_list": [5], "ratio_list": [2.0]})
    with pytest.raises(ConfigError, match="puts b_v below"):
        run(cfg)


def test_runner_scaling_artifacts(tmp_path):
    out = tmp_path / "run"
    cfg = ExperimentConfig("scaling", out=str(out),
                           model={"kind": "bgk", "Q": 5},
                           sweep={"workers_list": [1], "rank_list": [1, 2],
                                  "sweeps_per_point": 1})
    assert run(cfg) == 0
    rows = (out / "scaling.csv").read_text().splitlines()
    assert rows[0] == "# tensorpde-csv v1 scaling"
    assert len(rows) == 4
    dofs = [int(r.split(",")[2]) for r in rows[2:]]
    assert dofs == [6 * 5 * 1, 6 * 5 * 2]
    man = json.loads((out / "manifest.json").read_text())
    assert np.isfinite(man["dof_power"])


def test_runner_is_deterministic(tmp_path):
    # rank 2 from a rank-1 equilibrium forces the seeded padding path
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        cfg = ExperimentConfig("bgk-steady", out=str(out), steps=3, rank=2,
                               model={"kind": "bgk", "Q": 5})
        assert run(cfg) == 0
        runs.append((out / "moments.csv").read_bytes()
                    + (out / "error.csv").read_bytes())
    assert runs[0] == runs[1]


def test_cli_runs_and_applies_overrides(tmp_path):
    cfg_path = _write_cfg(tmp_path, {"experiment": "bgk-steady", "steps": 50,
                                     "model": {"kind": "bgk", "Q": 5}})
    out = tmp_path / "cli-out"
    code = main(["--config", str(cfg_path), "--out", str(out),
                 "--steps", "2", "--rank", "1", "--q-modes", "5",
                 "--dt", "0.002"])
    assert code == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["steps"] == 2 and man["config"]["rank"] == 1
    assert man["config"]["model"]["Q"] == 5
    assert man["config"]["solver"] == {"kind": "implicit-als", "dt": 0.002}
    assert man["config"]["out"] == str(out)


def test_cli_reports_config_errors(tmp_path, capsys):
    cfg_path = _write_cfg(tmp_path, {"experiment": "bgk-steady", "stepz": 1})
    assert main(["--config", str(cfg_path)]) == 2
    assert capsys.readouterr().err.startswith(
        "tensorpde: unknown config keys: stepz")


def test_cli_reports_missing_files(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "absent.yaml")]) == 2
    assert "tensorpde:" in capsys.readouterr().err


def test_cli_module_entry_point(tmp_path):
    cfg_path = _write_cfg(tmp_path, {"experiment": "maxwellian-approx",
                                     "sweep": {"q_list": [5],
                                               "ratio_list": [1.0]}})
    out = tmp_path / "mod-out"
    proc = subprocess.run(
        [sys.executable, "-m", "tensorpde.cli",
         "--config", str(cfg_path), "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (out / "nmae_heatmap.csv").exists()
