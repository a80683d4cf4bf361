"""Command-line interface: exit codes, file headers, config, determinism."""
import json

import pytest

from qgplab.cli import main


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_vk_json(capsys):
    rc, out, err = run(capsys, "vk", "--c", "0.8", "--kappa", "0")
    assert rc == 0 and err == ""
    payload = json.loads(out)
    assert payload["verdict"] == "Stable"
    assert payload["c"] == 0.8 and payload["kappa"] == 0.0
    assert payload["dPdc"] < 0.0
    rc, out, _ = run(capsys, "vk", "--c", "0.2", "--kappa", "-50")
    assert rc == 0 and json.loads(out)["verdict"] == "Unstable"


def test_validation_exit_code(capsys):
    rc, out, err = run(capsys, "vk", "--c", "2.0", "--kappa", "0")
    assert rc == 2 and out == ""
    assert err.startswith("qgplab: ") and "sqrt(2)" in err


def test_missing_required_flag_exits_via_argparse(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["vk", "--kappa", "0"])
    assert exc.value.code == 2


def test_profile_csv_and_determinism(tmp_path, capsys):
    out = tmp_path / "prof.csv"
    argv = ("profile", "--c", "0.8", "--kappa", "0", "--half-length", "25",
            "--n", "512", "--out", str(out))
    rc, _, err = run(capsys, *argv)
    assert rc == 0 and err == ""
    text = out.read_text()
    lines = text.splitlines()
    assert lines[0].startswith("# qgplab ")
    assert lines[1].startswith("# config_hash ") and len(lines[1].split()[-1]) == 12
    assert lines[2].startswith("# normalization: full-functional")
    assert lines[3] == "x,eta,v,eta_x,theta"
    assert len(lines) == 4 + 512
    again = tmp_path / "prof2.csv"
    argv2 = argv[:-1] + (str(again),)
    assert run(capsys, *argv2)[0] == 0
    # identical configuration hashes to identical bytes below the header
    assert again.read_text().splitlines()[3:] == lines[3:]


def test_profile_alias_L(tmp_path, capsys):
    out = tmp_path / "p.csv"
    rc, _, _ = run(capsys, "profile", "--c", "0.8", "--kappa", "0",
                   "--L", "25", "--n", "512", "--out", str(out))
    assert rc == 0 and out.exists()


def test_critical_subcommand(capsys):
    rc, out, _ = run(capsys, "critical", "--kappa", "-50")
    assert rc == 0
    payload = json.loads(out)
    assert payload["kappa"] == -50.0
    assert payload["c_tilde"] == pytest.approx(0.473, abs=5e-3)
    rc, out, _ = run(capsys, "critical", "--kappa", "-3")
    assert rc == 0 and json.loads(out)["c_tilde"] is None
    rc, _, err = run(capsys, "critical")
    assert rc == 2 and "--kappa" in err


def test_spectrum_json_and_eigvec_dump(tmp_path, capsys):
    dump = tmp_path / "vecs.csv"
    rc, out, _ = run(capsys, "spectrum", "--c", "0.8", "--kappa", "0",
                     "--half-length", "25", "--n", "1024",
                     "--dump-eigvecs", str(dump))
    assert rc == 0
    payload = json.loads(out)
    assert payload["negative_count"] == 1
    assert payload["mu_minus"] < 0.0 < payload["essential_edge"]
    assert abs(payload["mu_zero"]) <= 0.01
    assert payload["grid"] == {"half_length": 25.0, "n": 1024}
    # matrix eigenvalue vs quadrature Rayleigh value: equal up to O(dx^2)
    assert payload["discrete_eigenvalues"][0] == pytest.approx(
        payload["mu_minus"], rel=1e-3)
    lines = dump.read_text().splitlines()
    meta = [l for l in lines if l.startswith("# eigenvalues: ")]
    assert len(meta) == 1
    header = [l for l in lines if l.startswith("x,")]
    assert header and header[0].startswith("x,vec0")


def test_evolve_outputs_and_determinism(tmp_path, capsys, monkeypatch):
    # identical argv from two working directories: the resolved config (and
    # hence every header hash) must agree byte for byte
    def go(name):
        base = tmp_path / name
        base.mkdir()
        monkeypatch.chdir(base)
        rc, out, err = run(capsys, "evolve", "--c", "0.8", "--kappa", "0",
                           "--perturb", "none", "--T", "0.2",
                           "--half-length", "25", "--n", "2048",
                           "--out", "run", "--svg")
        assert rc == 0 and err == ""
        assert out.strip() == "bounded"
        return base / "run"

    d1 = go("run1")
    report = json.loads((d1 / "report.json").read_text())
    assert report["verdict"] == "bounded" and report["validity"] == "ok"
    assert report["_meta"]["config_hash"]
    assert report["times"][0] == 0.0
    assert len(report["times"]) == len(report["energy_drift"])
    snaps = sorted(p.name for p in (d1 / "snapshots").iterdir())
    assert snaps == ["t_0.000000.csv", "t_0.200000.csv"]
    assert (d1 / "distance.svg").exists()

    d2 = go("run2")
    for rel in ("report.json", "snapshots/t_0.000000.csv",
                "snapshots/t_0.200000.csv", "distance.svg"):
        assert (d1 / rel).read_bytes() == (d2 / rel).read_bytes(), rel


def test_config_overrides_flags(tmp_path, capsys):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({"c": 0.2, "kappa": -50.0}))
    rc, out, _ = run(capsys, "vk", "--c", "0.8", "--kappa", "0",
                     "--config", str(cfgfile))
    assert rc == 0
    payload = json.loads(out)
    assert payload["c"] == 0.2 and payload["verdict"] == "Unstable"


def test_config_unknown_key_rejected_before_output(tmp_path, capsys):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({"bogus": 1}))
    out = tmp_path / "never.csv"
    rc, _, err = run(capsys, "profile", "--c", "0.8", "--kappa", "0",
                     "--n", "512", "--half-length", "25",
                     "--out", str(out), "--config", str(cfgfile))
    assert rc == 2 and "unknown config key" in err
    assert not out.exists()


def test_config_must_be_object(tmp_path, capsys):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text("[1, 2]")
    rc, _, err = run(capsys, "vk", "--c", "0.8", "--kappa", "0",
                     "--config", str(cfgfile))
    assert rc == 2 and "JSON object" in err


def test_unwritable_output_exits_3(tmp_path, capsys):
    target = tmp_path / "no_such_dir" / "x.csv"
    rc, _, err = run(capsys, "profile", "--c", "0.8", "--kappa", "0",
                     "--n", "512", "--half-length", "25", "--out", str(target))
    assert rc == 3 and err.startswith("qgplab: ")


def test_box_too_small_rejected(capsys):
    rc, _, err = run(capsys, "profile", "--c", "0.8", "--kappa", "0",
                     "--half-length", "4", "--n", "512", "--out", "/dev/null")
    assert rc == 2 and "decay lengths" in err


def test_figures_kappa_scan(tmp_path, capsys):
    d = tmp_path / "figs"
    rc, _, _ = run(capsys, "figures", "--recipe", "kappa_scan", "--out", str(d))
    assert rc == 0
    text = (d / "ctilde_vs_kappa.csv").read_text()
    assert "# kappa0 " in text
    assert text.splitlines()[-1].split(",")[1] == "0"  # no cusp above kappa0
