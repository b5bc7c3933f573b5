import json

import numpy as np
import pytest

from monopole import cli
from monopole.config import DEFAULT_THRESHOLDS, SCENARIOS, parse_config, parse_documents, scenario
from monopole.errors import ConfigError
from monopole.liealg import orbit_base, orbit_membership


def write_cfg(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run_cli(tmp_path, command, doc, *extra):
    code = cli.main([command, "--config", write_cfg(tmp_path, doc), "--out", str(tmp_path), *extra])
    name = doc.get("name", "run") if isinstance(doc, dict) else None
    report = None
    if name and (tmp_path / f"{name}_report.json").exists():
        report = json.loads((tmp_path / f"{name}_report.json").read_text())
    return code, report


MINIMAL = {"k": 2, "lambda": 1.0, "r0": [1, 0, 0, 0, 0.5], "v0": [0, 1, 0, 0.3, 0]}


class TestParseConfig:
    def test_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.integrator.method == "adaptive_embedded"
        assert cfg.integrator.rel_tol == 1e-10 and cfg.integrator.abs_tol == 1e-12
        assert cfg.integrator.t_end == 20.0 and cfg.integrator.sample_every == 10
        np.testing.assert_array_equal(cfg.xi, orbit_base(1.0, 2).xi)
        assert cfg.thresholds == DEFAULT_THRESHOLDS
        assert cfg.name == "run"

    def test_minimal_k1(self):
        cfg = parse_config({"k": 1, "lambda": 1, "r0": [0, 0, 1], "v0": [1, 0, 0]})
        np.testing.assert_array_equal(cfg.xi, [[0, -1], [1, 0]])
        assert cfg.integrator.method == "adaptive_embedded" and cfg.integrator.sample_every == 10

    def test_json_text(self):
        assert parse_config(json.dumps(MINIMAL)).k == 2

    def test_wrong_length(self):
        with pytest.raises(ConfigError, match="r0 must have length 5"):
            parse_config(dict(MINIMAL, r0=[1, 0, 0]))

    @pytest.mark.parametrize("bad,field", [
        ({"k": 0}, "k"),
        ({"k": 7}, "k"),
        ({"k": 1.5}, "k"),
        ({"lambda": "x"}, "lambda"),
        ({"r0": [0, 0, 0, 0, 0]}, "r0"),
        ({"v0": [0, 1, 0, float("nan"), 0]}, "v0"),
        ({"extra": 1}, "extra"),
        ({"integrator": {"method": "euler"}}, "integrator"),
        ({"integrator": {"dt": -1}}, "integrator"),
        ({"integrator": {"bogus": 1}}, "integrator.bogus"),
        ({"thresholds": {"nope": 1}}, "thresholds.nope"),
        ({"xi_init": {"mode": "weird"}}, "xi_init.mode"),
        ({"name": "a/b"}, "name"),
    ])
    def test_rejects(self, bad, field):
        with pytest.raises(ConfigError) as info:
            parse_config(dict(MINIMAL, **bad))
        assert info.value.field == field

    def test_invalid_json(self):
        with pytest.raises(ConfigError):
            parse_config("{not json")

    def test_explicit_xi(self):
        xi0 = orbit_base(1.0, 2).xi
        good = dict(MINIMAL, xi_init={"mode": "explicit", "matrix": (-xi0).tolist()})
        np.testing.assert_array_equal(parse_config(good).xi, -xi0)
        flipped = xi0.copy()
        flipped[2:, 2:] *= -1
        with pytest.raises(ConfigError, match="not on the orbit"):
            parse_config(dict(MINIMAL, xi_init={"mode": "explicit", "matrix": flipped.tolist()}))
        with pytest.raises(ConfigError, match="not on the orbit"):
            parse_config(dict(MINIMAL, xi_init={"mode": "explicit", "matrix": (2 * xi0).tolist()}))

    def test_random_xi_on_orbit(self):
        cfg = parse_config(dict(MINIMAL, xi_init={"mode": "random", "seed": 3}))
        assert orbit_membership(cfg.xi, 1.0, 2)

    def test_overrides(self):
        cfg = parse_config(dict(MINIMAL, integrator={"method": "fixed_rk4", "dt": 0.01},
                                guards={"string_clearance_min": 1e-3},
                                output={"sample_every": 3},
                                thresholds={"drift_L": 1e-5}))
        assert cfg.integrator.method == "fixed_rk4" and cfg.integrator.dt == 0.01
        assert cfg.integrator.string_eps == 1e-3 and cfg.integrator.sample_every == 3
        assert cfg.thresholds["drift_L"] == 1e-5

    def test_documents(self):
        a, b = dict(MINIMAL, name="a"), dict(MINIMAL, name="b")
        assert [c.name for c in parse_documents({"scenarios": [a, b]})] == ["a", "b"]
        assert len(parse_documents([a])) == 1
        with pytest.raises(ConfigError):
            parse_documents([a, a])

    def test_scenarios_valid(self):
        for key in SCENARIOS:
            cfg = scenario(key)
            assert len(cfg.r0) == 2 * cfg.k + 1

    def test_shipped_configs_match(self):
        from pathlib import Path
        root = Path(__file__).resolve().parents[1] / "configs"
        for key in SCENARIOS:
            doc = json.loads((root / f"scenario_{key.lower()}.json").read_text())
            assert doc == SCENARIOS[key]


class TestExitCodes:
    def test_config_error(self, tmp_path, capsys):
        code, _ = run_cli(tmp_path, "simulate", dict(MINIMAL, k=9))
        assert code == 1
        assert "config error" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert cli.main(["simulate", "--config", str(tmp_path / "nope.json")]) == 1

    def test_simulate_ok(self, tmp_path):
        code, rep = run_cli(tmp_path, "simulate", SCENARIOS["B"])
        assert code == 0 and rep["pass"] and rep["exit_code"] == 0
        assert set(rep["cone"]) == {"axis", "aperture_rad", "norm_L", "norm_Lbar", "norm_V"}
        assert rep["integrator"]["steps"] > 0
        assert all(c["pass"] for c in rep["checks"])

    def test_guard_trip(self, tmp_path):
        doc = {"name": "trip", "k": 1, "lambda": 0.0, "r0": [1e-3, 0, 1], "v0": [0, 0, -1]}
        code, rep = run_cli(tmp_path, "simulate", doc)
        assert code == 2
        assert rep["error"]["kind"] == "StringProximity"
        assert rep["error"]["t"] > 0 and not rep["pass"]

    def test_threshold_failure(self, tmp_path):
        doc = dict(SCENARIOS["A"], thresholds={"drift_energy": 1e-300, "drift_L": 1e-300})
        code, rep = run_cli(tmp_path, "simulate", doc)
        assert code == 3
        failed = {c["name"] for c in rep["checks"] if not c["pass"]}
        assert "drift_L" in failed

    def test_zero_charge_simulate(self, tmp_path):
        doc = dict(MINIMAL, name="free", **{"lambda": 0.0})
        code, rep = run_cli(tmp_path, "simulate", doc)
        assert code == 0
        assert rep["cone"] == {"undefined": "zero charge"}
        rows = (tmp_path / "free.csv").read_text().splitlines()
        assert rows[1].endswith(",nan")


class TestCommands:
    def test_verify(self, tmp_path):
        doc = dict(SCENARIOS["B"], verify={"points": 100, "seed": 7})
        code, rep = run_cli(tmp_path, "verify", doc)
        assert code == 0
        assert rep["identities"]["points"] == 100 and rep["identities"]["seed"] == 7
        names = {c["name"] for c in rep["checks"]}
        assert {"potential_radial", "field_radial", "covariant_derivative", "pairing_gram",
                "pairing_norm", "contraction", "force_norm"} <= names

    def test_cone(self, tmp_path):
        code, rep = run_cli(tmp_path, "cone", SCENARIOS["C"])
        assert code == 0
        assert rep["checks"][0]["value"] <= 1e-12
        assert 0 < rep["cone"]["aperture_rad"] < np.pi / 2

    @pytest.mark.parametrize("key", ["A", "B"])
    def test_compare(self, tmp_path, key):
        code, rep = run_cli(tmp_path, "compare", SCENARIOS[key])
        assert code == 0
        assert rep["oracle"]["kind"] == "cone_geodesic" and rep["oracle"]["times"] == 200
        assert rep["oracle"]["max_error"] <= 1e-5

    def test_compare_free(self, tmp_path):
        code, rep = run_cli(tmp_path, "compare", dict(MINIMAL, name="free", **{"lambda": 0.0}))
        assert code == 0 and rep["oracle"]["kind"] == "free_motion"

    def test_csv_layout(self, tmp_path):
        run_cli(tmp_path, "simulate", SCENARIOS["B"], "--dump-xi")
        rows = (tmp_path / "scenario_b.csv").read_text().splitlines()
        head = rows[0].split(",")
        assert head == (["t"] + [f"x{i}" for i in range(1, 6)] + [f"v{i}" for i in range(1, 6)]
                        + ["energy", "drift_L", "cone_residual"])
        data = np.array([[float(c) for c in r.split(",")] for r in rows[1:]])
        assert data[0, 0] == 0.0 and data[-1, 0] == 20.0
        np.testing.assert_array_equal(data[0, 1:6], SCENARIOS["B"]["r0"])
        xi_rows = (tmp_path / "scenario_b_xi.csv").read_text().splitlines()
        assert len(xi_rows) == len(rows) and len(xi_rows[0].split(",")) == 1 + 6

    def test_sweep_parallel(self, tmp_path, capsys):
        docs = {"scenarios": [SCENARIOS["A"], SCENARIOS["B"], SCENARIOS["C"]]}
        p = write_cfg(tmp_path, docs, "sweep.json")
        code = cli.main(["cone", "--config", p, "--out", str(tmp_path), "--jobs", "2"])
        assert code == 0
        out = capsys.readouterr().out
        for key in "abc":
            assert f"scenario_{key}: exit 0" in out
            assert (tmp_path / f"scenario_{key}_report.json").exists()

    def test_bad_jobs(self, tmp_path):
        p = write_cfg(tmp_path, SCENARIOS["A"])
        assert cli.main(["cone", "--config", p, "--jobs", "0"]) == 1

    def test_run_unknown_command(self):
        with pytest.raises(ValueError):
            cli.run("plot", scenario("A"))
