"""CLI dispatch, report schema, determinism, and exit codes."""

import csv
import io
import json

import pytest

from ziclab.cli import main, parse_values


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr().out
    return code, out


def test_parse_values():
    assert parse_values("1.5") == [1.5]
    assert parse_values("0.5,1,2") == [0.5, 1.0, 2.0]
    vals = parse_values("1.1:1.5:0.1")
    assert vals == pytest.approx([1.1, 1.2, 1.3, 1.4, 1.5])


def test_phase_diagram_csv_columns(tmp_path, capsys):
    out = tmp_path / "phase.csv"
    code = main(
        [
            "phase-diagram",
            "--u",
            "0.5,1,2",
            "--L",
            "1.5:4:0.5",
            "--format",
            "csv",
            "--output",
            str(out),
        ]
    )
    assert code == 0
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert list(rows[0].keys()) == ["u", "L", "K", "classification"]
    assert len(rows) == 3 * 6
    first = rows[0]
    assert float(first["u"]) == 0.5
    assert first["classification"] in ("stable", "unstable", "critical")


def test_condition54_root_report(capsys):
    code, out = run_cli(["condition54-root", "--u", "1"], capsys)
    assert code == 0
    payload = json.loads(out)
    assert set(payload.keys()) == {"config", "results", "checks"}
    row = payload["results"][0]
    assert row["root"] == pytest.approx(3.8473221018, abs=1e-6)
    assert row["tolerance"] == 1e-8
    assert all(c["passed"] for c in payload["checks"])


def test_geometry_report(capsys):
    code, out = run_cli(["geometry", "--t", "20:60:20"], capsys)
    assert code == 0
    payload = json.loads(out)
    data_rows = [r for r in payload["results"] if "t" in r]
    assert all(r["ratio"] > 1 for r in data_rows)
    assert all(r["ratio_round_interferer"] <= 1 + 1e-9 for r in data_rows)
    assert all(c["passed"] for c in payload["checks"])


def test_hessian_report(capsys):
    code, out = run_cli(
        ["hessian", "--u", "1", "--L", "3", "--A", "1:1.0", "--B", ""], capsys
    )
    assert code == 0
    payload = json.loads(out)
    ledger = [r for r in payload["results"] if "alpha" in r]
    assert ledger[0]["I_alpha"] == pytest.approx(-1.0 / 9.0, abs=1e-12)


def test_theorem5_report(capsys):
    code, out = run_cli(["theorem5-epsilon", "--u", "1", "--L", "3"], capsys)
    assert code == 0
    payload = json.loads(out)
    row = payload["results"][0]
    assert row["eps2"] == pytest.approx(11.0 / 43.0, abs=1e-9)
    # at the threshold the certificate degenerates to None
    import ziclab.hessian as hs

    thr = hs.stability_threshold(1.0)
    L_at = (thr + 1.0) / (thr - 1.0)
    code, out = run_cli(["theorem5-epsilon", "--u", "1", "--L", f"{L_at}"], capsys)
    assert code == 0
    payload = json.loads(out)
    assert payload["results"][0]["eps"] is None


def test_determinism_byte_identical(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    argv = ["lemma5-audit", "--samples", "4", "--seed", "3", "--envelope-grid", "65"]
    assert main(argv + ["--output", str(a)]) == 0
    assert main(argv + ["--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_changes_draws(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    base = ["lemma5-audit", "--samples", "4", "--envelope-grid", "65"]
    assert main(base + ["--seed", "3", "--output", str(a)]) == 0
    assert main(base + ["--seed", "4", "--output", str(b)]) == 0
    assert a.read_bytes() != b.read_bytes()


def test_config_echo_embeds_resolved_defaults(capsys):
    code, out = run_cli(["verify-vertical", "--u", "1", "--L", "1.4"], capsys)
    assert code == 0
    payload = json.loads(out)
    cfg = payload["config"]
    # resolved values, not placeholders
    assert cfg["K"] == pytest.approx(6.0)
    assert cfg["delta"] > 0
    assert cfg["eps"] > 0
    assert cfg["seed"] == 0


def test_validation_error_exit_2(capsys):
    code = main(["phase-diagram", "--u", "1", "--L", "0.5,2.0"])
    err = capsys.readouterr().err
    assert code == 2
    assert "ziclab" in err


def test_oracle_mismatch_exit_3(capsys):
    # absurdly tight tolerance forces a failed check -> exit 3
    code, out = run_cli(
        ["verify-lemma1", "--t-count", "6", "--c1-tol", "1e-12"], capsys
    )
    assert code == 3
    payload = json.loads(out)
    assert any(not c["passed"] for c in payload["checks"])


def test_verify_lemma2_passes(capsys):
    code, out = run_cli(["verify-lemma2", "--t-count", "6"], capsys)
    assert code == 0
    payload = json.loads(out)
    assert all(c["passed"] for c in payload["checks"])


def test_hk_region_table(capsys):
    code, out = run_cli(
        ["hk-region", "--u", "1", "--N1", "1", "--q1", "2,10", "--q2", "2,10",
         "--envelope-grid", "65"],
        capsys,
    )
    assert code == 0
    payload = json.loads(out)
    rows = payload["results"]
    assert len(rows) == 4
    assert all(r["g1"] >= r["f1"] - 1e-9 for r in rows)


def test_limit_functional_cli(capsys):
    code, out = run_cli(["limit-functional", "--L", "1.2,2.0", "--n", "8192"], capsys)
    assert code == 0
    payload = json.loads(out)
    rows = payload["results"]
    assert rows[0]["perturbation_beats_gaussian"] is True
    assert rows[1]["perturbation_beats_gaussian"] is False
    assert all(c["passed"] for c in payload["checks"])


def test_constant_power_gap_cli(capsys):
    code, out = run_cli(["constant-power-gap"], capsys)
    assert code == 0
    payload = json.loads(out)
    assert payload["results"][0]["gap"] > 0
    assert all(c["passed"] for c in payload["checks"])


def test_conjecture2_map_cli(capsys):
    code, out = run_cli(
        ["conjecture2-map", "--u", "1", "--q", "1.2,39", "--N1", "1",
         "--envelope-grid", "65"],
        capsys,
    )
    assert code == 0
    payload = json.loads(out)
    rows = payload["results"]
    assert any(not r["f1_eq_g1"] for r in rows)  # power control helps somewhere
    assert all(c["passed"] for c in payload["checks"])


def test_theorem4_audit_cli(capsys):
    code, out = run_cli(
        ["theorem4-audit", "--d", "2", "--samples", "2", "--envelope-grid", "65"],
        capsys,
    )
    assert code == 0
    payload = json.loads(out)
    assert all(c["passed"] for c in payload["checks"])


def test_thread_cap_does_not_change_report(tmp_path, monkeypatch):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    argv = ["geometry", "--t", "20:100:20"]
    monkeypatch.setenv("ZIC_THREADS", "1")
    assert main(argv + ["--output", str(a)]) == 0
    monkeypatch.setenv("ZIC_THREADS", "4")
    assert main(argv + ["--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_geometry_csv_with_summary_row(tmp_path):
    out = tmp_path / "geo.csv"
    assert main(["geometry", "--t", "20,40", "--format", "csv", "--output", str(out)]) == 0
    text = out.read_text()
    rows = list(csv.DictReader(io.StringIO(text)))
    assert rows[0]["t"] == "20.0"
    # summary row carries the coefficient columns, data columns empty
    assert rows[-1]["t"] == ""
    assert float(rows[-1]["fitted_inverse_t_coefficient"]) > 0
