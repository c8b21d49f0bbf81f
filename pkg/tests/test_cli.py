import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from impact_nash.cli import (
    EXIT_NO_EQUILIBRIUM,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_VALIDATION,
    fmt,
    main,
)
from impact_nash.config import parse_config
from impact_nash.core import GameSpec
from impact_nash.linear_cara import cara_nash
from impact_nash.linear_crra import crra_nash
from oracles import cara_no_impact, crra_no_impact

MARKET = {"mu": 0.03, "sigma": 0.2}
SYMMETRIC = {"market": MARKET, "agents": [{"delta": 1.0}, {"delta": 1.0}],
             "impact": {"type": "linear", "alpha": 0.01}, "simulation": {"paths": 100_000, "seed": 2024}}
POWER_PAIR = {"market": MARKET, "agents": [{"delta": 1.0, "theta": 0.5}, {"delta": 2.0, "theta": 0.7}],
           "impact": {"type": "power", "alpha": 0.01, "gamma": 0.5},
           "sweep": {"variable": "gamma", "from": 0.05, "to": 1.0, "points": 20}}


def ladder(delta1, **sweep):
    deltas = [delta1] + [0.5 + 0.2 * k for k in range(11)]
    thetas = [0.3] + [0.1 * k for k in range(11)]
    cfg = {"market": MARKET, "agents": [{"delta": d, "theta": t} for d, t in zip(deltas, thetas)],
           "impact": {"type": "linear", "alpha": 0.0}}
    if sweep:
        cfg["sweep"] = {"variable": "alpha", **sweep}
    return cfg


def run(tmp_path, cfg, *args):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
    out = io.StringIO()
    code = main([args[0], "--config", str(path), *args[1:]], out=out)
    return code, out.getvalue()


def fields(text):
    return dict(line.split(": ", 1) for line in text.splitlines() if ": " in line)


def read_csv(text):
    comments = [line[2:] for line in text.splitlines() if line.startswith("# ")]
    body = [line for line in text.splitlines() if not line.startswith("#")]
    rows = list(csv.DictReader(body))
    return dict(c.split("=", 1) for c in comments), rows


class TestEquilibrium:
    def test_symmetric(self, tmp_path):
        code, text = run(tmp_path, SYMMETRIC, "equilibrium")
        f = fields(text)
        assert code == EXIT_OK
        assert float(f["pi_1"]) == pytest.approx(1.2, rel=1e-11)
        assert float(f["pi_2"]) == pytest.approx(1.2, rel=1e-11)
        assert f["status"] == "OK"

    def test_crra_gives_identical_values(self, tmp_path):
        _, cara = run(tmp_path, SYMMETRIC, "equilibrium")
        code, crra = run(tmp_path, SYMMETRIC, "equilibrium", "--utility", "crra")
        assert code == EXIT_OK
        assert fields(cara)["pi_1"] == fields(crra)["pi_1"]
        assert fields(cara)["pi_2"] == fields(crra)["pi_2"]

    def test_at_critical_alpha(self, tmp_path):
        cfg = json.loads(json.dumps(SYMMETRIC))
        cfg["impact"]["alpha"] = 0.08 / 3
        code, text = run(tmp_path, cfg, "equilibrium")
        assert code == EXIT_NO_EQUILIBRIUM
        assert fields(text)["status"] == "NO_EQUILIBRIUM"
        assert "condition nonsingular: FAIL" in text

    def test_concavity_violation(self, tmp_path):
        cfg = json.loads(json.dumps(SYMMETRIC))
        cfg["impact"]["alpha"] = 0.05
        code, text = run(tmp_path, cfg, "equilibrium")
        assert code == EXIT_VALIDATION
        assert "condition concavity: FAIL" in text

    def test_power_impact_uses_fixed_point(self, tmp_path):
        code, text = run(tmp_path, POWER_PAIR, "equilibrium")
        assert code == EXIT_OK
        assert float(fields(text)["pi_1"]) < float(fields(text)["pi_2"])


class TestCriticalAlpha:
    def test_pair(self, tmp_path):
        code, text = run(tmp_path, SYMMETRIC, "critical-alpha")
        f = fields(text)
        assert code == EXIT_OK
        assert float(f["alpha0"]) == pytest.approx(0.08 / 3, abs=1e-11)
        assert float(f["alpha_max"]) == pytest.approx(0.04, rel=1e-12)
        lo, hi = map(float, f["bracket"].split())
        assert lo <= float(f["alpha0"]) <= hi

    def test_single(self, tmp_path):
        cfg = {"market": MARKET, "agents": [{"delta": 1.0}], "impact": {"type": "linear", "alpha": 0.0}}
        _, text = run(tmp_path, cfg, "critical-alpha")
        assert float(fields(text)["alpha0"]) == pytest.approx(0.02, abs=1e-12)

    def test_ladder_alpha_max(self, tmp_path):
        _, text = run(tmp_path, ladder(4.0), "critical-alpha")
        assert float(fields(text)["alpha_max"]) == pytest.approx(0.06, rel=1e-12)

    def test_crra_lists_roots(self, tmp_path):
        code, text = run(tmp_path, ladder(4.0), "critical-alpha", "--utility", "crra")
        assert code == EXIT_OK
        assert int(fields(text)["roots"]) >= 1


class TestSweepAlpha:
    def test_sign_split_and_reference(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code, _ = run(tmp_path, ladder(1.0, **{"from": -0.04, "to": 0.0599, "points": 101}),
                      "sweep-alpha", "--out", str(out))
        assert code == EXIT_OK
        raw = out.read_bytes()
        assert b"\r\n" not in raw
        comments, rows = read_csv(raw.decode("utf-8"))
        assert float(comments["merton_reference"]) == pytest.approx(0.75, rel=1e-12)
        alpha0 = float(comments["alpha0"])
        assert len(rows) == 101
        header = list(rows[0].keys())
        assert header == ["alpha"] + [f"pi_{k}" for k in range(1, 13)] + ["s_hat", "drift", "status"]
        for r in rows:
            if r["status"] != "OK":
                continue
            a, p1 = float(r["alpha"]), float(r["pi_1"])
            assert (p1 > 0) == (a < alpha0)

    @pytest.mark.parametrize("utility,oracle", [("cara", cara_no_impact), ("crra", crra_no_impact)])
    def test_zero_row(self, tmp_path, utility, oracle):
        code, text = run(tmp_path, ladder(4.0, **{"from": 0.0, "to": 0.0, "points": 1}),
                         "sweep-alpha", "--utility", utility)
        assert code == EXIT_OK
        _, rows = read_csv(text)
        assert len(rows) == 1
        spec = parse_config(ladder(4.0)).spec
        values = [float(rows[0][f"pi_{k}"]) for k in range(1, 13)]
        np.testing.assert_allclose(values, oracle(spec), rtol=1e-11)

    def test_round_trip(self, tmp_path):
        cfg = ladder(4.0, **{"from": -0.04, "to": 0.059, "points": 37})
        _, text = run(tmp_path, cfg, "sweep-alpha")
        _, rows = read_csv(text)
        spec = parse_config(cfg).spec
        for r in rows:
            eq = cara_nash(spec.with_alpha(float(r["alpha"])))
            assert [r[f"pi_{k}"] for k in range(1, 13)] == [fmt(p) for p in eq.strategies]
            assert r["s_hat"] == fmt(eq.s_hat_value)
            assert r["drift"] == fmt(eq.equilibrium_drift)

    @pytest.mark.parametrize("utility", ["cara", "crra"])
    def test_status_discipline(self, tmp_path, utility):
        # A pair grid that lands exactly on the critical impact.
        cfg = {"market": MARKET, "agents": [{"delta": 1.0}, {"delta": 1.0}],
               "impact": {"type": "linear", "alpha": 0.0},
               "sweep": {"variable": "alpha", "from": 0.0, "to": 0.08 / 3 * 4 / 3, "points": 5}}
        code, text = run(tmp_path, cfg, "sweep-alpha", "--utility", utility)
        assert code == EXIT_OK
        comments, rows = read_csv(text)
        statuses = [r["status"] for r in rows]
        assert statuses.count("NO_EQUILIBRIUM") == 1
        assert "near_critical" in comments
        for r in rows:
            numbers = [r[f"pi_{k}"] for k in (1, 2)] + [r["drift"]]
            if r["status"] == "OK":
                assert all(numbers)
            else:
                assert not any(numbers) and not r["s_hat"]

    def test_range_beyond_alpha_max(self, tmp_path):
        code, _ = run(tmp_path, ladder(4.0, **{"from": 0.0, "to": 0.07, "points": 3}), "sweep-alpha")
        assert code == EXIT_PARSE

    def test_needs_sweep_block(self, tmp_path):
        code, _ = run(tmp_path, SYMMETRIC, "sweep-alpha")
        assert code == EXIT_PARSE


class TestSweepGamma:
    def test_power_pair_grid(self, tmp_path):
        code, text = run(tmp_path, POWER_PAIR, "sweep-gamma")
        assert code == EXIT_OK
        comments, rows = read_csv(text)
        assert [r["status"] for r in rows] == ["OK"] * 20
        p1 = np.array([float(r["pi_1"]) for r in rows])
        p2 = np.array([float(r["pi_2"]) for r in rows])
        assert np.all(np.diff(p1) >= -1e-8) and np.all(np.diff(p2) >= -1e-8)
        assert np.all(p1 < p2)
        linear = [float(x) for x in comments["linear_equilibrium"].split(";")]
        assert float(rows[-1]["gamma"]) == 1.0
        np.testing.assert_allclose([p1[-1], p2[-1]], linear, rtol=1e-6)

    def test_superlinear_row(self, tmp_path):
        cfg = json.loads(json.dumps(POWER_PAIR))
        cfg["sweep"] = {"variable": "gamma", "from": 2.0, "to": 2.0, "points": 1}
        code, text = run(tmp_path, cfg, "sweep-gamma")
        assert code == EXIT_OK
        _, rows = read_csv(text)
        assert rows[0]["status"] == "UNBOUNDED"
        assert rows[0]["pi_1"] == "" and rows[0]["pi_2"] == ""
        assert float(rows[-1]["gamma"]) == 1.0 and rows[-1]["status"] == "OK"

    def test_needs_power_impact(self, tmp_path):
        cfg = json.loads(json.dumps(POWER_PAIR))
        cfg["impact"] = {"type": "linear", "alpha": 0.01}
        code, _ = run(tmp_path, cfg, "sweep-gamma")
        assert code == EXIT_PARSE


class TestVerifySimulate:
    def test_verify_pass(self, tmp_path):
        code, text = run(tmp_path, SYMMETRIC, "verify")
        assert code == EXIT_OK
        assert "agent 1: PASS" in text and "agent 2: PASS" in text

    def test_verify_crra(self, tmp_path):
        code, text = run(tmp_path, ladder(1.0), "verify", "--utility", "crra")
        assert code == EXIT_OK
        assert "certificate: PASS" in text

    def test_verify_rejects_non_equilibrium_profile(self, tmp_path):
        cfg = json.loads(json.dumps(SYMMETRIC))
        cfg["profile"] = [1.7, 1.2]
        code, text = run(tmp_path, cfg, "verify")
        assert code != EXIT_OK
        assert "agent 1: FAIL" in text

    def test_simulate_z_scores(self, tmp_path):
        code, text = run(tmp_path, SYMMETRIC, "simulate")
        assert code == EXIT_OK
        zs = [float(line.rsplit("z=", 1)[1]) for line in text.splitlines() if "z=" in line]
        assert len(zs) == 2 and all(abs(z) <= 3 for z in zs)

    def test_simulate_is_deterministic(self, tmp_path):
        _, first = run(tmp_path, SYMMETRIC, "simulate")
        _, second = run(tmp_path, SYMMETRIC, "simulate")
        assert first == second

    def test_simulate_needs_block(self, tmp_path):
        cfg = {k: v for k, v in SYMMETRIC.items() if k != "simulation"}
        code, _ = run(tmp_path, cfg, "simulate")
        assert code == EXIT_PARSE


class TestConfigErrors:
    @pytest.mark.parametrize("cfg", [
        "{not json",
        {"agents": [{"delta": 1.0}], "impact": {"alpha": 0.0}},
        {"market": MARKET, "agents": [], "impact": {"alpha": 0.0}},
        {"market": MARKET, "agents": [{"delta": -1.0}], "impact": {"alpha": 0.0}},
        {"market": MARKET, "agents": [{"delta": 1.0, "theta": 2.0}], "impact": {"alpha": 0.0}},
        {"market": MARKET, "agents": [{"delta": 1.0}], "impact": {"type": "cubic", "alpha": 0.0}},
        {"market": MARKET, "agents": [{"delta": 1.0}], "impact": {"type": "power", "alpha": 0.0}},
        {"market": {"mu": "high", "sigma": 0.2}, "agents": [{"delta": 1.0}], "impact": {"alpha": 0.0}},
    ])
    def test_parse_errors(self, tmp_path, cfg):
        code, _ = run(tmp_path, cfg, "equilibrium")
        assert code == EXIT_PARSE

    def test_missing_file(self, tmp_path):
        assert main(["equilibrium", "--config", str(tmp_path / "absent.json")], out=io.StringIO()) == EXIT_PARSE

    def test_parsed_spec(self):
        cfg = parse_config(POWER_PAIR)
        assert cfg.spec == GameSpec.from_arrays(0.03, 0.2, [1.0, 2.0], [0.5, 0.7], alpha=0.01)
        assert cfg.impact.gamma == 0.5
        np.testing.assert_allclose(crra_nash(cfg.spec.with_alpha(0.0)).strategies,
                                   crra_no_impact(cfg.spec), rtol=1e-12)


def test_console_entry_point(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(SYMMETRIC))
    proc = subprocess.run([sys.executable, "-m", "impact_nash", "equilibrium", "--config", str(path)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "pi_1: 1.2" in proc.stdout
