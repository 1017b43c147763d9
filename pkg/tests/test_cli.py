"""
CLI tests — run the asymcom commands end to end on small job files.

Each test writes a job file into tmp_path, invokes the click group and
checks the exit code plus the JSON/CSV written to the output directory.
"""
import csv
import json
import math

import pytest
from click.testing import CliRunner

from asymcom.abel import C1_EXACT
from asymcom.cli import cli


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _job(tmp_path, data, name="job.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data), encoding="utf-8")
    return str(p)


def _run(*args):
    return CliRunner().invoke(cli, list(args))


def _cx(pair):
    return complex(pair[0], pair[1])


@pytest.fixture
def out(tmp_path):
    return tmp_path / "out"


# ---------------------------------------------------------------------------
# roots
# ---------------------------------------------------------------------------

class TestRootsCommand:
    def test_abel_roots(self, tmp_path, out):
        res = _run("roots", "--config", _job(tmp_path, {"preset": "abel"}), "--out", str(out))
        assert res.exit_code == 0, res.output
        data = json.loads((out / "roots.json").read_text())
        assert len(data["roots"]) == 3
        assert _cx(data["roots"][0]) == pytest.approx(1 / 3)
        assert data["min_separation"] == pytest.approx(1 / math.sqrt(3))

    def test_constant_p0_is_math_error(self, tmp_path, out):
        res = _run("roots", "--config", _job(tmp_path, {"ode": {"coeffs": [[1], [0, 1]]}}), "--out", str(out))
        assert res.exit_code == 3
        assert "DegreeTooLow" in res.output

    def test_double_root(self, tmp_path, out):
        res = _run("roots", "--config", _job(tmp_path, {"ode": {"coeffs": [[1, -2, 1]]}}), "--out", str(out))
        assert res.exit_code == 3
        assert "MultipleRoot" in res.output

    def test_missing_config(self, tmp_path, out):
        res = _run("roots", "--config", str(tmp_path / "missing.json"), "--out", str(out))
        assert res.exit_code == 2
        assert "ConfigNotFound" in res.output

    def test_invalid_config(self, tmp_path, out):
        res = _run("roots", "--config", _job(tmp_path, {"preset": "abel", "bogus": 1}), "--out", str(out))
        assert res.exit_code == 2
        assert "InvalidConfig" in res.output


# ---------------------------------------------------------------------------
# com
# ---------------------------------------------------------------------------

class TestComCommand:
    def test_linear_constants_vanish(self, tmp_path, out):
        res = _run("com", "--config", _job(tmp_path, {"preset": "linear"}), "--out", str(out))
        assert res.exit_code == 0, res.output
        data = json.loads((out / "com.json").read_text())
        assert abs(_cx(data["a"])) < 1e-10
        assert all(abs(_cx(c)) < 1e-10 for c in data["c"])
        with (out / "f_table.csv").open(newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0][:4] == ["y_re", "y_im", "F0_re", "F0_im"]
        assert len(rows) == 4

    def test_abel_constants(self, tmp_path, out):
        res = _run("com", "--config", _job(tmp_path, {"preset": "abel"}), "--out", str(out))
        assert res.exit_code == 0, res.output
        data = json.loads((out / "com.json").read_text())
        assert _cx(data["a"]) == pytest.approx(0.2, abs=1e-9)
        assert _cx(data["c"][0]) == pytest.approx(C1_EXACT, abs=1e-8)
        assert data["n"] == 2

    def test_needs_contour(self, tmp_path, out):
        res = _run("com", "--config", _job(tmp_path, {"ode": {"coeffs": [[1, 0, 1]], "n": 1}}), "--out", str(out))
        assert res.exit_code == 2

    def test_output_is_byte_stable(self, tmp_path):
        job = _job(tmp_path, {"preset": "linear"})
        a, b = tmp_path / "a", tmp_path / "b"
        assert _run("com", "--config", job, "--out", str(a)).exit_code == 0
        assert _run("com", "--config", job, "--out", str(b)).exit_code == 0
        for name in ("com.json", "f_table.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


# ---------------------------------------------------------------------------
# invert
# ---------------------------------------------------------------------------

class TestInvertCommand:
    def test_linear_matches_rk(self, tmp_path, out):
        res = _run("invert", "--config", _job(tmp_path, {"preset": "linear", "rk_samples": 20}), "--out", str(out))
        assert res.exit_code == 0, res.output
        data = json.loads((out / "invert.json").read_text())
        assert data["samples"] == 22
        assert data["max_rel_err"] < 1e-8
        with (out / "trajectory.csv").open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 22
        assert rows[-1]["region"] == "NearRoot(0)"

    def test_x_min_beyond_path(self, tmp_path, out):
        res = _run("invert", "--config", _job(tmp_path, {"preset": "linear", "x_min": 100}), "--out", str(out))
        assert res.exit_code == 2

    def test_quoted_constant_checked_against_trajectory(self, tmp_path, out):
        job = {"preset": "linear", "rk_samples": 20, "K": [0.5, 0.0]}
        res = _run("invert", "--config", _job(tmp_path, job), "--out", str(out))
        assert res.exit_code == 4
        assert not (out / "invert.json").exists()

    def test_constant_within_k_tol_is_accepted(self, tmp_path, out):
        job = {"preset": "linear", "rk_samples": 20, "K": [0.01, 0.0]}
        res = _run("invert", "--config", _job(tmp_path, job), "--out", str(out))
        assert res.exit_code == 0, res.output
        data = json.loads((out / "invert.json").read_text())
        assert abs(_cx(data["K"])) < 1e-9
        assert _cx(data["K_quoted"]) == 0.01
        assert data["max_rel_err"] < 1e-8


# ---------------------------------------------------------------------------
# sing
# ---------------------------------------------------------------------------

class TestSingCommand:
    def test_tan_confirmed(self, tmp_path, out):
        res = _run("sing", "--config", _job(tmp_path, {"preset": "tan"}), "--out", str(out))
        assert res.exit_code == 0, res.output
        data = json.loads((out / "singularities.json").read_text())
        first, second = data["singularities"]
        assert _cx(first["x_sing"]) == pytest.approx(1 + math.pi / 2, abs=1e-8)
        assert _cx(second["x_sing"]) == pytest.approx(1 + 3 * math.pi / 2, abs=1e-8)
        assert first["status"] == "confirmed"
        assert second["status"] == "confirmed"

    def test_without_verification(self, tmp_path, out):
        res = _run("sing", "--config", _job(tmp_path, {"preset": "tan", "verify": False}), "--out", str(out))
        assert res.exit_code == 0, res.output
        data = json.loads((out / "singularities.json").read_text())
        assert {s["status"] for s in data["singularities"]} == {"predicted"}

    def test_linear_has_no_singular_constant(self, tmp_path, out):
        res = _run("sing", "--config", _job(tmp_path, {"preset": "linear"}), "--out", str(out))
        assert res.exit_code == 3


# ---------------------------------------------------------------------------
# phase and regions
# ---------------------------------------------------------------------------

class TestPhaseCommand:
    def test_small_grid(self, tmp_path, out):
        job = {
            "preset": "abel", "x0": [10, 0], "y0": 0.6,
            "phase": {"angles": [-math.pi / 4], "re": [-0.6, 0.6, 3], "im": [-0.6, 0.6, 3]},
        }
        res = _run("phase", "--config", _job(tmp_path, job), "--out", str(out))
        assert res.exit_code == 0, res.output
        data = json.loads((out / "phase.json").read_text())
        (angle,) = data["angles"]
        assert angle["attractor"] == 0
        assert [e["stability"] for e in angle["equilibria"]] == ["stable", "unstable", "stable"]
        with (out / "phase.csv").open(newline="") as fh:
            assert len(list(csv.reader(fh))) == 1 + 9


class TestRegionsCommand:
    def test_linear_order(self, tmp_path, out):
        job = {"preset": "linear", "x_path": [1, 12], "rk_samples": 200}
        res = _run("regions", "--config", _job(tmp_path, job), "--out", str(out))
        assert res.exit_code == 0, res.output
        data = json.loads((out / "regions.json").read_text())
        assert data["order"] == [0]
        assert all(h["within_bound"] for h in data["handoff"])
        with (out / "regions.csv").open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 202
        assert rows[-1]["region"] == "NearRoot(0)"
        assert data["near_root_visits"] == [0]
        assert [h["side"] for h in data["handoff"]] == ["entry"]

    def test_bound_exceeded_exits_4(self, tmp_path, out, monkeypatch):
        import asymcom.cli as cli_module
        from asymcom.model import HandoffRecord

        real = cli_module.handoff

        def inflated(*args, **kwargs):
            return [HandoffRecord(r.root, r.x_range, r.C_trans, 2.0 * r.bound, r.bound, r.side)
                    for r in real(*args, **kwargs)]

        monkeypatch.setattr(cli_module, "handoff", inflated)
        job = {"preset": "linear", "x_path": [1, 12], "rk_samples": 200}
        res = _run("regions", "--config", _job(tmp_path, job), "--out", str(out))
        assert res.exit_code == 4
        data = json.loads((out / "regions.json").read_text())
        assert not any(h["within_bound"] for h in data["handoff"])
