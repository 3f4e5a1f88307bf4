import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from lossdispatch import checks
from lossdispatch.cli import EXIT_CHECK, EXIT_INPUT, EXIT_OK, main, parse_ldf
from lossdispatch.matpower import load_case
from lossdispatch.report import CSV_COLUMNS, TierSpec, compare_tiers, true_cost
from lossdispatch.line_functions import ApproxTier

FIXTURES = Path(__file__).parent / "fixtures"
CSV_HEADER = (
    "schema_version,case,label,tier,allocation,status,objective,cost_delta_vs_exact,total_dispatch_mw,"
    "dispatched_count,l1_dispatch_delta_mw,linf_dispatch_delta_mw,lmp_mean,lmp_min,lmp_max,"
    "max_normalized_lmp_delta,max_abs_dtheta,binding_windows,iterations,wall_time"
)


class TestCompare:
    def test_exact_row_is_zero(self, case3):
        rep = compare_tiers(case3, ["exact"])
        assert [r.label for r in rep.rows] == ["exact"]
        row = rep.rows[0]
        assert row.cost_delta_vs_exact == 0 and row.l1_dispatch_delta_mw == 0
        assert row.max_normalized_lmp_delta == 0
        assert row.dispatched_count == 2 and row.binding_windows == 1

    def test_all_tiers(self, case3):
        rep = compare_tiers(case3, ["taylor", "nominal", "dc", TierSpec(ApproxTier.DC, ldf_slack=1)], jobs=3)
        assert [r.label for r in rep.rows] == ["exact", "taylor", "nominal", "dc", "dc_ldf"]
        assert rep.row("dc_ldf").allocation == "ldf"
        exact = rep.row("exact")
        for r in rep.rows[1:]:
            assert r.status == "converged"
            assert abs(r.cost_delta_vs_exact) <= 0.05 * exact.objective
        # the table shows total generation including losses
        assert exact.total_dispatch_mw > 200

    def test_cost_delta_sign(self, case3):
        rep = compare_tiers(case3, ["dc"])
        dc = rep.row("dc")
        from lossdispatch.dispatch import assemble, solve_dispatch
        P_exact = solve_dispatch(assemble(case3, "exact")).P
        P_dc = solve_dispatch(assemble(case3, "dc")).P
        assert dc.cost_delta_vs_exact == pytest.approx(true_cost(case3, P_exact) - true_cost(case3, P_dc))

    def test_csv_schema(self, case3):
        text = compare_tiers(case3, ["dc"]).to_csv()
        assert text.splitlines()[0] == CSV_HEADER == ",".join(CSV_COLUMNS)
        rows = list(csv.DictReader(io.StringIO(text)))
        assert [r["label"] for r in rows] == ["exact", "dc"]
        assert rows[0]["schema_version"] == "1"
        float(rows[1]["objective"])

    def test_json_and_table(self, case3):
        rep = compare_tiers(case3, ["nominal"], repeat=2)
        doc = json.loads(rep.to_json())
        assert doc["schema_version"] == 1 and len(doc["rows"]) == 2
        table = rep.to_table()
        assert "nominal" in table and "max lmp" in table


class TestChecks:
    def test_case30_suite(self, case30):
        results = checks.run_all(case30, "exact")
        assert all(r.passed for r in results), [r.line() for r in results if not r.passed]
        assert any(r.waived for r in results)

    @pytest.mark.parametrize("tier", ["taylor", "nominal", "dc"])
    def test_approximate_tiers(self, case3, tier):
        results = checks.run_all(case3, tier, seed=3)
        assert all(r.passed for r in results), [r.line() for r in results if not r.passed]

    def test_relative_error(self):
        assert checks.relative_error(1.5, 1.0) == pytest.approx(0.5)
        assert checks.relative_error(1e-9, 0.0) == pytest.approx(1e-9)
        assert checks.relative_error(110.0, 100.0) == pytest.approx(0.1)

    def test_result_line(self):
        assert checks.CheckResult("x", True, "ok").line() == "[PASS] x: ok"
        assert checks.CheckResult("x", True, "r0", waived=True).line().startswith("[WAIVED]")


class TestCli:
    def case(self, name="case3.m"):
        return str(FIXTURES / name)

    def test_parse_ldf(self):
        assert parse_ldf("slack") is None and parse_ldf("slack=4") == 4
        with pytest.raises(Exception):
            parse_ldf("bus=4")

    @pytest.mark.parametrize("fmt", ["table", "json", "csv"])
    def test_solve(self, fmt, capsys):
        assert main(["solve", self.case(), "--tier", "dc", "--format", fmt]) == EXIT_OK
        out = capsys.readouterr().out
        if fmt == "json":
            doc = json.loads(out)
            assert doc["status"] == "converged" and len(doc["buses"]) == 3
        else:
            assert out.strip()

    def test_solve_options(self, capsys, tmp_path):
        out = tmp_path / "s.json"
        args = ["solve", self.case(), "--reference", "3", "--relax", "--limits", "flow", "--ldf", "slack=2",
                "--format", "json", "--out", str(out)]
        assert main(args) == EXIT_OK
        doc = json.loads(out.read_text())
        assert doc["reference_bus"] == 3 and doc["relaxed"]

    def test_compare(self, capsys):
        assert main(["compare", self.case(), "--format", "csv", "--ldf", "slack=2", "--jobs", "2"]) == EXIT_OK
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert [r["label"] for r in rows] == ["exact", "taylor", "nominal", "dc", "dc_ldf"]

    def test_check(self, capsys):
        assert main(["check", self.case("case30.m")]) == EXIT_OK
        out = capsys.readouterr().out
        assert "[WAIVED]" in out and "[FAIL]" not in out

    def test_check_failure_exit_code(self, capsys, monkeypatch):
        monkeypatch.setattr(checks, "run_all", lambda *a, **k: [checks.CheckResult("x", False, "bad")])
        assert main(["check", self.case()]) == EXIT_CHECK

    def test_convert_round_trip(self, tmp_path):
        js = tmp_path / "c.json"
        m = tmp_path / "c.m"
        assert main(["convert", self.case("case30.m"), str(js)]) == EXIT_OK
        assert main(["convert", str(js), str(m)]) == EXIT_OK
        assert load_case(m).same_content(load_case(self.case("case30.m")))

    def test_input_errors(self, tmp_path, capsys):
        assert main(["solve", str(tmp_path / "missing.m")]) == EXIT_INPUT
        bad = tmp_path / "bad.m"
        bad.write_text("mpc.baseMVA = 100;\n")
        assert main(["solve", str(bad)]) == EXIT_INPUT
        assert main(["solve", self.case(), "--reference", "99"]) == EXIT_INPUT
        with pytest.raises(SystemExit) as info:
            main(["solve", self.case(), "--tier", "nope"])
        assert info.value.code == EXIT_INPUT

    def test_solver_failure_exit_code(self, capsys):
        from lossdispatch.cli import EXIT_SOLVER
        assert main(["solve", self.case(), "--max-iter", "2"]) == EXIT_SOLVER
        assert "solver failure" in capsys.readouterr().err
