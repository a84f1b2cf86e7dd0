"""
Tests for the command-line entry point.
"""

import json

import pytest

from app.main import run

PHI_1 = "9/2 - 2^-s - 3^-s - 2*6^-s"
PHI_2 = "13/2 - 4*2^-s - 4*3^-s + 2*6^-s"


class TestExitCodes:
    """Test cases for exit codes."""

    def test_analyze_writes_report(self, tmp_path):
        out = tmp_path / "report.json"

        assert run(["analyze", "--symbol", PHI_1, "--out", str(out)]) == 0
        report = json.loads(out.read_text(encoding="utf-8"))
        assert report["tool"] == "dirichlet-symbol-lab"
        assert report["command"] == "analyze"
        assert report["verdict"]["verdict"] == "Compact"
        assert report["verdict"]["rule"] == "Thm4-deg≤2"

    def test_class_violation(self, capsys):
        assert run(["analyze", "--symbol", "1/2 - 2^-s"]) == 2
        assert "CLASS_MEMBERSHIP" in capsys.readouterr().err

    def test_parse_error(self, capsys):
        assert run(["analyze", "--symbol", "1^-s"]) == 1
        assert "SYMBOL_PARSE_ERROR" in capsys.readouterr().err

    @pytest.mark.parametrize(
        "argv",
        [[], ["analyze", "--bogus"], ["construct"], ["construct", "--flat", "2"], ["unknown"]],
    )
    def test_usage_errors(self, argv):
        assert run(argv) == 1

    def test_version(self):
        with pytest.raises(SystemExit) as info:
            run(["--version"])

        assert info.value.code == 0


class TestOutputs:
    """Test cases for report formats and destinations."""

    def test_csv_into_directory(self, tmp_path):
        target = tmp_path / "reports"

        assert run(["keylemma", "--a1", "1/2", "--a2", "1/4", "--exact", "--format", "csv", "--out", str(target)]) == 0
        lines = (target / "keylemma.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "name,applicable,counted,residual"
        assert any(line.startswith("re_v3,") for line in lines)

    def test_json_to_stdout(self, capsys):
        assert run(["approx", "--schatten", "1", "4"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["eta"] == "1/2"
        assert report["payload"]["schatten"]["orders"] == [2, 2]

    def test_compactness_index(self, capsys):
        assert run(["approx", "--symbol", PHI_2, "--eta"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["eta"] == "1/3"
        assert report["regularity"][0]["k"] == [4, 2]

    def test_symbol_file(self, tmp_path, capsys):
        source = tmp_path / "phi.txt"
        source.write_text("3/4 - 1/4*6^-s", encoding="utf-8")

        assert run(["analyze", "--file", str(source)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["verdict"]["rule"] == "dim1"

    def test_same_seed_same_bytes(self, tmp_path):
        """Reports carry no timestamps, so repeated runs match byte for byte."""
        argv = ["carleson", "--symbol", "3/2 - 1/2*2^-s - 1/2*3^-s", "--eps", "0.1", "--samples", "5000", "--seed", "3"]

        assert run(argv + ["--out", str(tmp_path / "a.json")]) == 0
        assert run(argv + ["--out", str(tmp_path / "b.json")]) == 0
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
        report = json.loads((tmp_path / "a.json").read_text(encoding="utf-8"))
        assert report["seed"] == 3
        assert report["payload"]["estimate"]["samples"] == 5000
