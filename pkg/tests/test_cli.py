import json
import math

import pytest

from ncnet import cli


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg, indent=2))
    return path


def run(tmp_path, cfg, out="out", seed=None):
    args = ["run", "--config", str(write_cfg(tmp_path, cfg)), "--out", str(tmp_path / out)]
    if seed is not None:
        args += ["--seed", str(seed)]
    return cli.main(args)


def test_fig3a_contains_quoted_number(tmp_path):
    assert run(tmp_path, {"experiment": "fig3a_bound_vs_delta", "params": {"rho": [0.5], "alpha1": 0.5}}) == 0
    cfg, rows = cli.read_result_csv(tmp_path / "out" / "fig3a_bound_vs_delta.csv")
    assert cfg["params"]["rho"] == [0.5]
    assert len(rows) == 100
    last = rows[-1]
    assert float(last["delta"]) == 1.0
    assert float(last["theorem1_bits"]) == pytest.approx(3.94, abs=0.01)
    assert float(last["theorem1_bits"]) == float(last["corollary1_bits"])


def test_fig3b_diverges(tmp_path):
    assert run(tmp_path, {"experiment": "fig3b_bound_vs_rho", "params": {"delta": [0.5]}}) == 0
    _, rows = cli.read_result_csv(tmp_path / "out" / "fig3b_bound_vs_rho.csv")
    rhos = [float(r["rho"]) for r in rows]
    assert rhos == sorted(rhos, reverse=True) and len(rhos) == 99
    first, last = float(rows[0]["theorem1_bits"]), float(rows[-1]["theorem1_bits"])
    assert last > 10 * first


def test_csv_header_names_config_keys(tmp_path):
    run(tmp_path, {"experiment": "fig3a_bound_vs_delta", "params": {"delta": [0.5]}})
    header = (tmp_path / "out" / "fig3a_bound_vs_delta.csv").read_text().splitlines()[1].split(",")
    for key in ("n_T", "n_R", "delta", "rho", "alpha1"):
        assert key in header


def test_fig4_decay(tmp_path):
    assert run(tmp_path, {"experiment": "fig4_decay_patterns"}, seed=3) == 0
    cfg, rows = cli.read_result_csv(tmp_path / "out" / "fig4_decay_patterns.csv")
    assert cfg["params"]["eta"] == 3.2 and cfg["seed"] == 3
    assert len(rows) == 200
    assert float(rows[0]["exponential_ref_db"]) == pytest.approx(10 * (-18 + math.log10(0.9)), abs=1e-9)
    for col in ("fspl_db", "two_ray_db", "okumura_hata_db"):
        v = [float(r[col]) for r in rows]
        assert all(a >= b for a, b in zip(v, v[1:]))


@pytest.mark.parametrize("exp", ["lp_growth", "thm2_sweep", "cor2_growth"])
def test_other_sweeps_run(tmp_path, exp):
    assert run(tmp_path, {"experiment": exp}) == 0
    _, rows = cli.read_result_csv(tmp_path / "out" / f"{exp}.csv")
    assert rows


def test_mapping_audit_exit_zero(tmp_path):
    assert run(tmp_path, {"experiment": "mapping_audit"}) == 0
    _, rows = cli.read_result_csv(tmp_path / "out" / "mapping_audit.csv")
    assert len(rows) == 16 and all(r["passed"] == "1" for r in rows)
    assert "status: PASS" in (tmp_path / "out" / "manifest.txt").read_text()


def test_identity_audit(tmp_path):
    params = {"fading_samples": 200_000, "chi_square_samples": 100_000}
    assert run(tmp_path, {"experiment": "identity_audit", "params": params}) == 0


def test_byte_identical_reruns(tmp_path):
    cfg = {"experiment": "fig4_decay_patterns", "seed": 17}
    assert run(tmp_path, cfg, out="a") == 0
    assert run(tmp_path, cfg, out="b") == 0
    for name in ("fig4_decay_patterns.csv", "manifest.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    cfg = {"experiment": "fig4_decay_patterns", "seed": 1}
    run(tmp_path, cfg, out="a", seed=2)
    run(tmp_path, {**cfg, "seed": 2}, out="b")
    assert (tmp_path / "a" / "fig4_decay_patterns.csv").read_bytes() == (
        tmp_path / "b" / "fig4_decay_patterns.csv"
    ).read_bytes()


def test_output_path_from_config(tmp_path):
    path = write_cfg(tmp_path, {"experiment": "mapping_audit", "params": {"max_length": 4},
                                "output_path": str(tmp_path / "o")})
    assert cli.main(["run", "--config", str(path)]) == 0
    assert (tmp_path / "o" / "mapping_audit.csv").exists()


def test_malformed_json_reports_line(tmp_path, capsys):
    text = '{\n  "experiment": "lp_growth",\n  "params": {,}\n}'
    assert run(tmp_path, text) == cli.EXIT_CONFIG
    assert "line 3" in capsys.readouterr().err


def test_unknown_top_level_key(tmp_path, capsys):
    text = '{\n  "experiment": "lp_growth",\n  "colour": 1\n}'
    assert run(tmp_path, text) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert "line 3" in err and "colour" in err


def test_unknown_param_key(tmp_path, capsys):
    text = '{"experiment": "thm2_sweep",\n "params": {\n   "rho": 0.5,\n   "rhoo": 0.2}}'
    assert run(tmp_path, text) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert "line 4" in err and "rhoo" in err


@pytest.mark.parametrize("cfg", [
    {"experiment": "fig5"},
    {"experiment": "lp_growth", "seed": -1},
    {"experiment": "lp_growth", "params": [1]},
    [1, 2],
])
def test_invalid_configs(tmp_path, cfg):
    assert run(tmp_path, cfg) == cli.EXIT_CONFIG


def test_invalid_parameter_value(tmp_path, capsys):
    assert run(tmp_path, {"experiment": "fig3a_bound_vs_delta", "params": {"rho": [1.5]}}) == cli.EXIT_CONFIG
    assert "rho" in capsys.readouterr().err


def test_missing_output_dir(tmp_path):
    path = write_cfg(tmp_path, {"experiment": "mapping_audit"})
    assert cli.main(["run", "--config", str(path)]) == cli.EXIT_CONFIG


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    path = write_cfg(tmp_path, {"experiment": "mapping_audit", "params": {"max_length": 3}})
    assert cli.main(["run", "--config", str(path), "--out", str(blocker / "sub")]) == cli.EXIT_IO


def test_missing_config_file(tmp_path):
    assert cli.main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == cli.EXIT_IO
