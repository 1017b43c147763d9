"""Tests for asymcom.report — stable JSON and schema-ordered CSV output."""
import json
import math

import numpy as np
import pytest

from asymcom.errors import ConfigError
from asymcom.model import RegionTag, SingularityReport
from asymcom.report import columns, cx, singularity_dict, to_jsonable, write_csv, write_json


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

class TestToJsonable:
    def test_complex_and_numpy(self):
        out = to_jsonable({"z": 1 - 2j, "arr": np.array([1 + 1j, 2]), "i": np.int64(3), "f": np.float64(0.5)})
        assert out == {"z": [1.0, -2.0], "arr": [[1.0, 1.0], [2.0, 0.0]], "i": 3, "f": 0.5}

    def test_non_finite_floats_become_strings(self):
        assert to_jsonable([math.inf, -math.inf]) == ["inf", "-inf"]
        assert to_jsonable(math.nan) == "nan"

    def test_dataclass(self):
        assert to_jsonable(RegionTag("NearRoot", 1)) == {"kind": "NearRoot", "root": 1}

    def test_singularity_dict(self):
        r = SingularityReport(1 + 2j, (0, 1), 2, 3 + 0j, 0.5 + 0j)
        d = to_jsonable(singularity_dict(r))
        assert d["x_sing"] == [1.0, 2.0]
        assert d["branch_shift"] == [0, 1]
        assert d["status"] == "predicted"
        assert d["x_found"] is None


class TestWriteJson:
    def test_sorted_and_stable(self, tmp_path):
        a = write_json(tmp_path / "a.json", {"b": 1, "a": [1j]})
        b = write_json(tmp_path / "sub" / "b.json", {"a": [1j], "b": 1})
        assert a.read_bytes() == b.read_bytes()
        text = a.read_text(encoding="utf-8")
        assert text.index('"a"') < text.index('"b"')
        assert text.endswith("\n")
        assert json.loads(text) == {"a": [[0.0, 1.0]], "b": 1}


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

class TestColumns:
    def test_f_table_per_order(self):
        cols = columns("f_table", 1)
        assert cols[:2] == ["y_re", "y_im"]
        assert cols[2:] == ["F0_re", "F0_im", "dF0_re", "dF0_im", "F1_re", "F1_im", "dF1_re", "dF1_im"]

    def test_f_table_needs_order(self):
        with pytest.raises(ConfigError):
            columns("f_table")

    def test_unknown_table(self):
        with pytest.raises(ConfigError) as exc:
            columns("nope")
        assert "trajectory" in exc.value.details["tables"]

    def test_trajectory_order(self):
        assert columns("trajectory") == [
            "x_re", "x_im", "y_re", "y_im", "K_check_re", "K_check_im",
            "region", "y_rk_re", "y_rk_im", "rel_err",
        ]


class TestWriteCsv:
    def test_cells(self, tmp_path):
        row = {"t": 1, **cx("y", None), "v_re": True}
        path = write_csv(tmp_path / "phase.csv", "phase", [row])
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "t,y_re,y_im,v_re,v_im"
        assert lines[1] == "1,,,true,"

    def test_full_precision(self, tmp_path):
        row = {"t": 0.1, **cx("y", 1 / 3), **cx("v", -2e-300 + 0j)}
        path = write_csv(tmp_path / "phase.csv", "phase", [row])
        cells = path.read_text(encoding="utf-8").splitlines()[1].split(",")
        assert float(cells[1]) == 1 / 3
        assert cells[0] == "0.10000000000000001"
        assert float(cells[3]) == -2e-300

    def test_extra_column_rejected(self, tmp_path):
        with pytest.raises(ConfigError) as exc:
            write_csv(tmp_path / "phase.csv", "phase", [{"t": 0, "speed": 1}])
        assert exc.value.details["columns"] == ["speed"]

    def test_byte_stable(self, tmp_path):
        rows = [{"t": k / 7, **cx("y", complex(k, -k) / 3), **cx("v", 1j ** k)} for k in range(5)]
        a = write_csv(tmp_path / "a.csv", "phase", rows)
        b = write_csv(tmp_path / "b.csv", "phase", rows)
        assert a.read_bytes() == b.read_bytes()
