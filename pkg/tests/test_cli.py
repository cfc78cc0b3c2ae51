import json
import os

import pytest

from mfinvariance import cli
from mfinvariance.config import DEFAULTS, PRESETS, ScenarioConfig, apply_override, load_preset
from mfinvariance.errors import ConfigError


def run(capsys, *args):
    code = cli.main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def test_presets_validate():
    for name in PRESETS:
        cfg = ScenarioConfig.build(load_preset(name))
        assert cfg.name == name
        assert cfg.profile.a > 0.5


def test_defaults_cover_everything_but_model_and_profile():
    cfg = ScenarioConfig.build({"model": {"kind": "fwn"}, "profile": {"kind": "constant", "params": {"value": 0.7}}})
    for key in DEFAULTS:
        assert key in cfg.raw
    with pytest.raises(ConfigError):
        ScenarioConfig.build({"model": {"kind": "fwn"}})


def test_override_parsing():
    cfg = {"quadrature": {"rel_tol": 1e-8}}
    apply_override(cfg, "quadrature.rel_tol=1e-6")
    apply_override(cfg, "name=abc")
    apply_override(cfg, "oracle.times=[0.5, 1]")
    assert cfg == {"quadrature": {"rel_tol": 1e-6}, "name": "abc", "oracle": {"times": [0.5, 1]}}
    with pytest.raises(ConfigError):
        apply_override(cfg, "novalue")


def test_kernels_farima(capsys, tmp_path):
    code, out, _ = run(capsys, "kernels", "--preset", "farima-sine", "--set", "kernels.hurst_pairs=[[0.7,0.7]]",
                       "--output-dir", str(tmp_path))
    assert code == 0
    assert "R(0.7, 0.7) = 0.27862" in out
    rep = json.loads((tmp_path / "farima-sine" / "kernels" / "report.json").read_text())
    assert rep["scenario"]["name"] == "farima-sine"
    assert all(c["verdict"] == "PASS" for c in rep["criteria"])


def test_kernels_fwn_reports_both_normalisations(capsys, tmp_path):
    code, out, _ = run(capsys, "kernels", "--preset", "fwn-sine", "--set", "kernels.hurst_pairs=[[0.75,0.75]]",
                       "--output-dir", str(tmp_path))
    assert code == 0
    rep = json.loads((tmp_path / "fwn-sine" / "kernels" / "report.json").read_text())
    row = rep["audit"]["values"][0]
    assert row["R"] == pytest.approx(0.375)
    assert row["R_without_half"] == pytest.approx(0.75)


def test_verify_invariance_constant(capsys, tmp_path):
    code, out, _ = run(capsys, "verify-invariance", "--preset", "fwn-constant", "--output-dir", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "fwn-constant" / "verify-invariance" / "invariance.csv").read_text().splitlines()
    assert lines[0] == "N_or_eps,max_abs_err,max_rel_err"
    assert all(float(l.split(",")[2]) < 1e-12 for l in lines[1:])


def test_malformed_config(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"model": {"kind": "fwn"},
                               "profile": {"kind": "constant", "params": {"value": 0.75}, "a": 0.4}}))
    code, _, err = run(capsys, "kernels", "--config", str(bad))
    assert code == 2
    assert err.startswith("error:config:")
    assert "(1/2, 1)" in err
    assert len(err.strip().splitlines()) == 1


@pytest.mark.parametrize("args", [
    ["--set", "N_ladder=[64, 16]"],
    ["--set", "seed=-1"],
    ["--set", "profile.params.value=1.2"],
    ["--set", "model.kind=arma"],
    ["--set", "unknown=1"],
])
def test_invalid_overrides_exit_2(capsys, args):
    code, _, err = run(capsys, "kernels", "--preset", "fwn-constant", "--dry-run", *args)
    assert code == 2
    assert err.startswith("error:")


def test_unreadable_config(capsys, tmp_path):
    code, _, err = run(capsys, "kernels", "--config", str(tmp_path / "missing.json"))
    assert code == 2
    p = tmp_path / "x.json"
    p.write_text("{not json")
    code, _, err = run(capsys, "kernels", "--config", str(p))
    assert code == 2


@pytest.mark.parametrize("sub", cli.SUBCOMMANDS)
def test_dry_run(capsys, tmp_path, sub):
    code, out, _ = run(capsys, sub, "--preset", "farima-sine", "--dry-run", "--output-dir", str(tmp_path))
    assert code == 0
    plan = json.loads(out)
    assert plan["subcommand"] == sub
    assert not any(tmp_path.iterdir())


def test_output_env_override(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("MFINVARIANCE_OUTPUT_DIR", str(tmp_path / "envout"))
    code, _, _ = run(capsys, "renorm-check", "--preset", "fwn-sine")
    assert code == 0
    assert (tmp_path / "envout" / "fwn-sine" / "renorm-check" / "report.json").exists()


def test_numerical_error_exit_3(capsys, tmp_path):
    code, _, err = run(capsys, "tangent-check", "--preset", "farima-sine", "--set", "quadrature.max_panels=1",
                       "--set", "tangent.distinct_pairs=[]", "--output-dir", str(tmp_path))
    assert code == 3
    assert err.startswith("error:quadrature:")


def test_representation_rejects_clamped_profile(capsys, tmp_path):
    code, _, err = run(capsys, "representation-check", "--preset", "farima-asymmetry", "--output-dir", str(tmp_path))
    assert code == 2
    assert err.startswith("error:profile:")


def _tree(root):
    out = {}
    for d, _, files in os.walk(root):
        for f in files:
            p = os.path.join(d, f)
            with open(p, "rb") as fh:
                out[os.path.relpath(p, root)] = fh.read()
    return out


@pytest.mark.parametrize("sub,extra", [
    ("sample", ["--set", "replicates=50", "--set", "sample.N=128"]),
    ("verify-invariance", ["--set", "N_ladder=[16,64,256]", "--set", "time_grid=[0.5,1.0]"]),
])
def test_byte_identical_across_threads(capsys, tmp_path, sub, extra):
    for threads in (1, 3):
        code, _, _ = run(capsys, sub, "--preset", "farima-sine", "--threads", str(threads),
                         "--output-dir", str(tmp_path / f"t{threads}"), *extra)
        assert code == 0
    a, b = _tree(tmp_path / "t1"), _tree(tmp_path / "t3")
    assert a and a == b
    assert not any(".tmp-" in k for k in a)


def test_sample_csv(capsys, tmp_path):
    code, _, _ = run(capsys, "sample", "--preset", "fwn-sine", "--set", "replicates=7", "--output-dir", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "fwn-sine" / "sample" / "samples.csv").read_text().splitlines()
    assert len(lines) == 8
    assert lines[0] == "t=0.25,t=0.5,t=0.75,t=1"


def test_atomic_write_replaces(tmp_path):
    p = tmp_path / "a" / "f.txt"
    cli.atomic_write(str(p), "one")
    cli.atomic_write(str(p), "two")
    assert p.read_text() == "two"
    assert os.listdir(p.parent) == ["f.txt"]


def test_fail_verdict_exit_1(capsys, tmp_path):
    code, out, _ = run(capsys, "tangent-check", "--preset", "fwn-constant", "--set", "tangent.lags=[[1,1]]",
                       "--set", "eps_ladder=[0.25,0.125]", "--output-dir", str(tmp_path))
    assert code == 1
    assert "FAIL tangent_distinct_t=1_s=2_final" in out
    assert (tmp_path / "fwn-constant" / "tangent-check" / "report.json").exists()


def test_scenario_rejected_by_numerics_exit_2(capsys, tmp_path):
    code, _, err = run(capsys, "holder", "--preset", "fwn-sine", "--set", "holder.t0=[0.01]",
                       "--output-dir", str(tmp_path))
    assert code == 2
    assert err.startswith("error:config:")
