"""End-to-end tests of the command-line interface and the TOML config loader."""

import csv
import json

import numpy as np
import pytest

from cecert.cli import main
from cecert.experiment import COLUMNS, ConfigError, load_config

BASIC_CONFIG = """\
example = "poly4"
m = 2000
n = 20000
batch_size = 10000
seed = 3

[[regressor]]
type = "linear"

[[regressor]]
type = "poly2"
"""


def write_config(tmp_path, text, name="exp.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestLoadConfig:
    def test_basic_fields(self, tmp_path):
        config = load_config(write_config(tmp_path, BASIC_CONFIG))
        assert config.example_id == "poly4"
        assert config.m == 2000
        assert config.n == 20000
        assert config.seed == 3
        assert [rc.kind for rc in config.regressors] == ["linear", "poly2"]

    def test_distortion_section(self, tmp_path):
        text = BASIC_CONFIG + """
[distortion]
kind = "gaussian_shift_scale"
mean = [1.0, 1.0, 1.0, 1.0]
stdev = [0.5, 0.5, 0.5, 0.5]
"""
        config = load_config(write_config(tmp_path, text))
        assert config.distortion.kind == "gaussian_shift_scale"
        np.testing.assert_array_equal(config.distortion.mean, np.ones(4))

    def test_missing_example_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="example"):
            load_config(write_config(tmp_path, "m = 10\n"))

    def test_empty_regressors_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="regressor"):
            load_config(write_config(tmp_path, 'example = "poly4"\n'))

    def test_unknown_regressor_field_rejected(self, tmp_path):
        text = 'example = "poly4"\n[[regressor]]\ntype = "linear"\nfoo = 1\n'
        with pytest.raises(ConfigError, match="foo"):
            load_config(write_config(tmp_path, text))

    def test_parse_error_reported(self, tmp_path):
        with pytest.raises(ConfigError, match="parse"):
            load_config(write_config(tmp_path, "example = [unclosed\n"))

    def test_missing_file_reported(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(str(tmp_path / "nope.toml"))


class TestCliRun:
    def test_run_writes_outputs_and_exits_zero(self, tmp_path, capsys):
        out_stem = tmp_path / "results"
        text = f'output_path = "{out_stem}"\nformat = "csv"\n' + BASIC_CONFIG
        code = main(["run", "--config", write_config(tmp_path, text)])
        assert code == 0
        csv_path = tmp_path / "results.csv"
        json_path = tmp_path / "results.json"
        assert csv_path.exists() and json_path.exists()
        rows = list(csv.DictReader(csv_path.open()))
        assert [r["label"] for r in rows] == ["lin. regr.", "poly. regr."]
        assert list(rows[0]) == COLUMNS

    def test_csv_and_json_carry_equal_numbers(self, tmp_path, capsys):
        out_stem = tmp_path / "results"
        text = f'output_path = "{out_stem}"\n' + BASIC_CONFIG
        assert main(["run", "--config", write_config(tmp_path, text)]) == 0
        csv_rows = list(csv.DictReader((tmp_path / "results.csv").open()))
        json_rows = json.loads((tmp_path / "results.json").read_text())
        for crow, jrow in zip(csv_rows, json_rows):
            for column in ("u_n", "d_n", "f_n", "c_n", "rel_err", "ci_u_lo"):
                # 17 significant digits round-trip doubles exactly.
                assert float(crow[column]) == jrow[column]

    def test_rerun_is_byte_identical(self, tmp_path, capsys):
        text = f'output_path = "{tmp_path / "a"}"\n' + BASIC_CONFIG
        config_path = write_config(tmp_path, text)
        assert main(["run", "--config", config_path]) == 0
        first = (tmp_path / "a.csv").read_bytes()
        text2 = f'output_path = "{tmp_path / "b"}"\n' + BASIC_CONFIG
        assert main(["run", "--config", write_config(tmp_path, text2, "exp2.toml")]) == 0
        second = (tmp_path / "b.csv").read_bytes()
        # Only fit_seconds may differ between reruns.
        for line_a, line_b in zip(first.decode().splitlines(),
                                  second.decode().splitlines()):
            cells_a, cells_b = line_a.split(","), line_b.split(",")
            idx = COLUMNS.index("fit_seconds")
            del cells_a[idx], cells_b[idx]
            assert cells_a == cells_b

    def test_d_column_is_shared_across_regressors(self, tmp_path, capsys):
        text = f'output_path = "{tmp_path / "r"}"\n' + BASIC_CONFIG
        assert main(["run", "--config", write_config(tmp_path, text)]) == 0
        rows = list(csv.DictReader((tmp_path / "r.csv").open()))
        assert rows[0]["d_n"] == rows[1]["d_n"]
        assert rows[0]["stderr_d"] == rows[1]["stderr_d"]

    def test_config_error_exit_code(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "missing.toml")]) == 1
        bad = write_config(tmp_path, 'example = "nope"\n[[regressor]]\ntype = "linear"\n')
        assert main(["run", "--config", bad]) == 1

    def test_failed_row_exit_code(self, tmp_path, capsys):
        # Forcing Cholesky on a rank-deficient design records a row error.
        text = """\
example = "nonpoly5"
m = 10
n = 1000
batch_size = 1000

[[regressor]]
type = "poly2"
solver = "cholesky"
"""
        code = main(["run", "--config", write_config(tmp_path, text)])
        assert code == 2
        assert "ERROR" in capsys.readouterr().out

    def test_market_run_prints_itm_fraction(self, tmp_path, capsys):
        text = """\
example = "binary"
m = 500
n = 2000
batch_size = 2000
market_d = 4

[[regressor]]
type = "linear"
"""
        assert main(["run", "--config", write_config(tmp_path, text)]) == 0
        assert "in-the-money fraction" in capsys.readouterr().out


class TestCliListExamples:
    def test_lists_all_ids(self, capsys):
        assert main(["list-examples"]) == 0
        out = capsys.readouterr().out
        for example_id in ("poly4", "nonpoly5", "maxcall", "binary"):
            assert example_id in out


class TestCliReproduce:
    def test_table_one_structure(self, tmp_path, capsys):
        code = main(["reproduce", "--table", "1", "--scale-m", "500",
                     "--scale-n", "4000", "--nn-steps", "30",
                     "--output", str(tmp_path / "t1")])
        assert code == 0
        out = capsys.readouterr().out
        for label in ("lin. regr.", "poly. regr.", "NN tanh", "NN ReLU", "NN LSE"):
            assert label in out
        assert "CI U (ref)" in out
        rows = list(csv.DictReader((tmp_path / "t1.csv").open()))
        assert len(rows) == 5

    def test_rejects_unknown_table(self, capsys):
        with pytest.raises(SystemExit):
            main(["reproduce", "--table", "9"])
