"""
Tests for the experiment harness: seeded inputs, JSON files, reports,
run configuration, the invariant suite and the command line.
"""
import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import json

import numpy as np
import pandas as pd
import pytest

from main import cli_dispatch, verify_sections
from src.data import (
    load_certificate, load_factor, load_function, load_set, load_sets, planted_quadratic, random_function,
    random_phase, random_set, save_certificate, save_factor, save_function, save_set,
)
from src.errors import MalformedInputError
from src.factors import QuadraticFactor
from src.invariants import InvariantSuite
from src.models import GroupConfig, GrowthFn, LinearForm, OracleParams, RunConfig, SymMatrix, resolve_budget
from src.output import ReportOutput, emit_report, load_report
from src.quadratic import best_quadratic_correlation, quad_correlation


# ----------------------------------------------------------------------
# Inputs
# ----------------------------------------------------------------------

def test_random_set_is_seeded():
    assert random_set(2, 0.5, 3) == random_set(2, 0.5, 3)
    assert random_set(2, 0.0, 3) == set()
    assert random_set(2, 1.0, 3) == set(range(25))
    with pytest.raises(ValueError):
        random_set(2, 1.5, 3)


def test_random_functions_are_one_bounded():
    cfg = GroupConfig(2)
    for kind in ("disc", "pm1", "circle"):
        assert random_function(cfg, 1, kind).is_one_bounded()
    assert np.allclose(np.abs(random_function(cfg, 1, "circle").values), 1)
    with pytest.raises(ValueError):
        random_function(cfg, 1, "gaussian")


def test_planted_quadratic_has_exact_correlation():
    cfg = GroupConfig(2)
    q = random_phase(cfg, 4)
    f = planted_quadratic(cfg, q, 0.4, seed=5)
    assert f.is_one_bounded()
    assert quad_correlation(f, q).correlation == pytest.approx(0.4)
    assert best_quadratic_correlation(f).magnitude >= 0.4 - 1e-12


# ----------------------------------------------------------------------
# JSON files
# ----------------------------------------------------------------------

def test_function_file(tmp_path):
    f = random_function(GroupConfig(1), 2)
    path = str(tmp_path / "f.json")
    save_function(f, path)
    assert load_function(path).allclose(f, 0)


def test_function_file_accepts_real_numbers(tmp_path):
    path = tmp_path / "f.json"
    path.write_text(json.dumps({"n": 1, "values": [1, 0, 0.5, [0, 1], -1]}))
    f = load_function(str(path))
    assert f.values[3] == 1j
    assert f.values[2] == 0.5


def test_malformed_function_files(tmp_path):
    short = tmp_path / "short.json"
    short.write_text(json.dumps({"n": 1, "values": [1, 2]}))
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    for path in (short, broken, tmp_path / "missing.json"):
        with pytest.raises(MalformedInputError):
            load_function(str(path))


def test_set_files(tmp_path):
    cfg = GroupConfig(2)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_set({3, 1, 4}, cfg, str(a))
    save_set({0}, cfg, str(b))
    assert load_set(str(a)) == (cfg, {1, 3, 4})
    assert json.loads(a.read_text())["members"] == [1, 3, 4]
    assert load_sets([str(a), str(b)]) == (cfg, [{1, 3, 4}, {0}])
    c = tmp_path / "c.json"
    save_set({0}, GroupConfig(1), str(c))
    with pytest.raises(MalformedInputError):
        load_sets([str(a), str(c)])


def test_set_member_out_of_range(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n": 1, "members": [0, 5]}))
    with pytest.raises(MalformedInputError):
        load_set(str(path))


def test_factor_and_certificate_files(tmp_path):
    cfg = GroupConfig(2)
    factor = QuadraticFactor(cfg, (LinearForm((1, 2)),), (SymMatrix.identity(2),))
    save_factor(factor, str(tmp_path / "factor.json"))
    assert load_factor(str(tmp_path / "factor.json")) == factor
    cert = best_quadratic_correlation(random_function(cfg, 6))
    save_certificate(cert, str(tmp_path / "cert.json"))
    loaded = load_certificate(str(tmp_path / "cert.json"))
    assert loaded.phase == cert.phase
    assert loaded.magnitude == pytest.approx(cert.magnitude)


def test_non_symmetric_factor_file(tmp_path):
    path = tmp_path / "factor.json"
    path.write_text(json.dumps({"n": 2, "linear": [], "quadratics": [[[0, 1], [0, 0]]]}))
    with pytest.raises(MalformedInputError):
        load_factor(str(path))


# ----------------------------------------------------------------------
# Configuration and reports
# ----------------------------------------------------------------------

def test_oracle_parameters():
    params = OracleParams()
    assert params.theta(0.5) == pytest.approx(0.03125)
    assert params.increment_floor(0.5) == pytest.approx(0.03125 ** 2 / 4)
    assert params.iteration_cap(0.5) == 1032
    assert params.iteration_cap(0.0) == 10_000
    assert params.iteration_cap(1e-80) == 10_000


def test_growth_presets():
    growth = GrowthFn.parse("exponential:base=5,scale=2")
    assert growth(2) == pytest.approx(50)
    assert growth.is_monotone()
    assert GrowthFn.parse("polynomial:power=2,offset=1")(3) == pytest.approx(16)
    assert GrowthFn.constant(3)(100) == 3
    for text in ("cubic:power=3", "exponential:base", "polynomial:power=-1"):
        with pytest.raises(ValueError):
            GrowthFn.parse(text)


def test_budget_precedence(monkeypatch):
    monkeypatch.delenv("QF_BUDGET", raising=False)
    assert resolve_budget() == 10 ** 9
    monkeypatch.setenv("QF_BUDGET", "5000")
    assert resolve_budget() == 5000
    assert resolve_budget(12) == 12
    monkeypatch.setenv("QF_BUDGET", "lots")
    with pytest.raises(ValueError):
        resolve_budget()


def test_emit_report(tmp_path):
    path = str(tmp_path / "out" / "report.json")
    text = emit_report({"value": 0.1, "big": float("inf"), "z": 1 + 2j, "arr": np.arange(3)}, path,
                       RunConfig(command="ft"), {"evaluations": 7})
    data = json.loads(text)
    assert data["schema_version"] == 1
    assert data["config"]["command"] == "ft"
    assert data["metrics"] == {"evaluations": 7}
    assert data["report"] == {"value": 0.1, "big": "inf", "z": [1.0, 2.0], "arr": [0, 1, 2]}
    assert load_report(path) == data


def test_emit_report_keeps_every_digit(tmp_path):
    path = str(tmp_path / "digits.json")
    value = 1 / 3
    text = emit_report({"third": value, "tenth": 0.1, "whole": 2.0}, path, RunConfig(command="ft"))
    assert '"third": 0.33333333333333331' in text
    assert '"tenth": 0.10000000000000001' in text
    assert '"whole": 2.0' in text
    assert load_report(path)["report"]["third"] == value


def test_load_report_checks_schema(tmp_path):
    path = tmp_path / "old.json"
    path.write_text(json.dumps({"schema_version": 0}))
    with pytest.raises(MalformedInputError):
        load_report(str(path))


def test_report_output(tmp_path, capsys):
    out = ReportOutput(RunConfig(), str(tmp_path))
    out.print_validation(True, [])
    out.print_validation(False, ["bound exceeded"])
    printed = capsys.readouterr().out
    assert "[OK] All checks passed" in printed
    assert "  - bound exceeded" in printed
    path = out.save_report("SUMMARY", {"bounds": {"f2_l2": 0.1}})
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    assert "BOUNDS:\n" in text
    assert "  f2_l2: 0.1\n" in text


# ----------------------------------------------------------------------
# Invariant suite
# ----------------------------------------------------------------------

def test_invariant_suite_cheap_checks():
    suite = InvariantSuite(n=1, seed=0, trials=2)
    suite.add_field_checks()
    suite.add_fourier_checks()
    suite.add_progression_checks()
    table = suite.run()
    assert list(table.columns) == [
        "suite", "module", "invariant", "anchor", "trials", "violations", "max_error", "passed"]
    assert (table["anchor"].str.len() > 0).all()
    assert table["passed"].all(), table[~table["passed"]]
    assert (table["trials"] <= 2).all()


def test_invariant_suite_is_reproducible():
    tables = []
    for _ in range(2):
        suite = InvariantSuite(n=2, seed=11, trials=2)
        suite.add_quadratic_checks()
        tables.append(suite.run())
    assert tables[0]["max_error"].tolist() == tables[1]["max_error"].tolist()
    assert tables[0]["passed"].all()


def test_invariant_suite_counts_exceptions_as_violations():
    suite = InvariantSuite(n=1, trials=3)

    def failing(rng):
        raise MalformedInputError("broken")

    suite.register("demo", "demo", "always fails", failing, "none")
    row = suite.run().iloc[0]
    assert row["anchor"] == "none"
    assert row["violations"] == 3
    assert row["max_error"] == float("inf")
    assert not row["passed"]


# ----------------------------------------------------------------------
# Command line
# ----------------------------------------------------------------------

def test_cli_ft_writes_report(tmp_path):
    path = tmp_path / "ft.json"
    assert cli_dispatch(["ft", "--n", "1", "--output", str(path)]) == 0
    data = json.loads(path.read_text())
    assert data["schema_version"] == 1
    assert data["report"]["sup"] <= data["report"]["l2"] + 1e-12
    assert "wall_seconds" not in data["metrics"]
    assert data["metrics"]["evaluations"] > 0


def test_cli_timings_are_opt_in(tmp_path):
    path = tmp_path / "ft.json"
    assert cli_dispatch(["ft", "--n", "1", "--timings", "--output", str(path)]) == 0
    assert "wall_seconds" in json.loads(path.read_text())["metrics"]


def test_cli_reports_are_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli_dispatch(["inverse", "--n", "1", "--seed", "3", "--output", str(a)]) == 0
    assert cli_dispatch(["inverse", "--n", "1", "--seed", "3", "--output", str(b)]) == 0
    first, second = json.loads(a.read_text()), json.loads(b.read_text())
    assert first["report"] == second["report"]
    assert first["metrics"] == second["metrics"]


def test_cli_gowers_both_methods():
    assert cli_dispatch(["gowers", "--n", "1", "--k", "3", "--method", "both"]) == 0


def test_cli_lambda_with_set_file(tmp_path):
    path = tmp_path / "set.json"
    save_set({1, 2, 3, 4}, GroupConfig(1), str(path))
    out = tmp_path / "lambda.json"
    assert cli_dispatch(["lambda", "--k", "4", "--input", str(path), "--output", str(out)]) == 0
    census = json.loads(out.read_text())["report"]["census"]
    assert (census["with_trivial"], census["without_trivial"]) == (8, 4)


def test_cli_kvn_and_factor(tmp_path):
    assert cli_dispatch(["kvn", "--n", "2", "--method", "linear", "--delta", "0.5"]) == 0
    factor = tmp_path / "factor.json"
    save_factor(QuadraticFactor(GroupConfig(2), (), (SymMatrix.identity(2),)), str(factor))
    assert cli_dispatch(["factor", "--input", str(factor), "--growth", "constant:value=1"]) == 0


def test_cli_bhk(tmp_path):
    out = tmp_path / "bhk.json"
    assert cli_dispatch(["bhk", "--n", "1", "--alpha", "0.8", "--epsilon", "0.5", "--output", str(out)]) == 0
    assert json.loads(out.read_text())["report"]["witness"] is not None


def test_verify_sections():
    table = pd.DataFrame([
        {"module": "fourier", "invariant": "Parseval", "passed": True, "violations": 0, "max_error": 0.0},
        {"module": "fourier", "invariant": "inversion", "passed": False, "violations": 2, "max_error": 0.5},
        {"module": "gowers", "invariant": "nesting", "passed": True, "violations": 0, "max_error": 0.0},
    ])
    sections = verify_sections(table)
    assert sections["summary"] == {"checks": 3, "passed": 2, "failed": 1}
    assert sections["modules"] == {"fourier": "1/2 passed", "gowers": "1/1 passed"}
    assert sections["failures"] == {"fourier: inversion": "2 violations, max error 0.5"}
    assert "failures" not in verify_sections(table[table["passed"]])


def test_cli_verify_writes_summary(tmp_path):
    out = tmp_path / "verify.json"
    assert cli_dispatch(["verify", "--n", "1", "--trials", "1", "--output", str(out)]) == 0
    summary = (tmp_path / "verify.txt").read_text()
    assert summary.startswith("=" * 80 + "\nINVARIANT SUITE\n")
    assert "SUMMARY:\n" in summary
    assert "  failed: 0\n" in summary
    assert "FAILURES:" not in summary
    table = pd.read_csv(tmp_path / "verify.csv")
    assert "anchor" in table.columns


def test_cli_usage_errors(tmp_path):
    assert cli_dispatch(["kvn", "--method", "bogus"]) == 2
    assert cli_dispatch(["factor"]) == 2
    assert cli_dispatch(["nonsense"]) == 2
    assert cli_dispatch(["inverse", "--n", "4"]) == 2
    assert cli_dispatch(["gowers", "--n", "3", "--k", "3", "--method", "direct", "--budget", "10"]) == 2
    assert cli_dispatch(["ft", "--input", str(tmp_path / "missing.json")]) == 2
    assert cli_dispatch(["regularity", "--growth", "exponential:base=0.5"]) == 2
