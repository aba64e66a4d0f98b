import csv
import io
from dataclasses import replace

import pytest

from varx_shm.damage_analysis import DAMAGED, HEALTHY, Element
from varx_shm.errors import CalibrationFailed, ScenarioError, ValidationError
from varx_shm.experiment_harness import (
    BASELINE_SEED_OFFSET,
    SuiteResult,
    emit_report,
    estimate_for,
    paper_suite,
    parse_report,
    run_scenario,
    run_suite,
)

A = lambda r, c: Element("A1", r, c)  # noqa: E731


def by_name(scenarios):
    return {s.name: s for s in scenarios}


class TestPaperSuite:
    def test_nineteen_scenarios(self):
        for seed in (0, 17):
            assert len(paper_suite(seed, "exact")) == 19

    def test_seeds_and_modes(self):
        suite = paper_suite(100, "realistic")
        assert [s.seed for s in suite] == list(range(100, 119))
        assert all(s.sim.seed == s.seed for s in suite)
        assert all(s.sim.substep_ratio == 10 for s in suite)
        assert all(s.severity_tolerance == 0.02 for s in suite)
        exact = paper_suite(0, "exact")
        assert all(s.sim.substep_ratio == 1 and s.sim.measurement_noise_std == 0 for s in exact)
        assert all(s.sim.ts == 1e-3 and s.excitation_dof == 8 for s in exact)

    def test_external_expected_healthy(self):
        named = by_name(paper_suite(0))
        for sev in ("0.05", "0.10", "0.20"):
            assert named[f"k1-{sev}"].expected_verdict == HEALTHY
            assert named[f"k8-{sev}"].expected_verdict == HEALTHY
            assert named[f"k1-{sev}"].expected_spring is None

    def test_k5_pattern(self):
        s = by_name(paper_suite(0))["k5-0.10"]
        assert s.expected_verdict == DAMAGED and s.expected_spring == 5
        assert s.expected_pattern == {A(2, 2), A(2, 3), A(3, 2), A(3, 3)}

    def test_unknown_mode(self):
        with pytest.raises(ValidationError):
            paper_suite(0, "fast")

    def test_severity_requires_spring(self):
        s = paper_suite(0)[0]
        with pytest.raises(ValidationError):
            replace(s, severity=0.1)


class TestRunScenario:
    def test_self_baseline_is_healthy(self):
        healthy = paper_suite(0)[0]
        own, _ = estimate_for(healthy.chain, healthy.spec, healthy.sim, healthy.excitation_dof)
        row = run_scenario(healthy, own, 1e-6)
        assert row.report.verdict == HEALTHY
        assert all(v == 0.0 for v in row.report.indicators.values.values())
        assert row.passed

    def test_k4_twenty_percent(self):
        named = by_name(paper_suite(0))
        base = named["healthy"]
        baseline, _ = estimate_for(
            base.chain, base.spec, replace(base.sim, seed=BASELINE_SEED_OFFSET), base.excitation_dof
        )
        row = run_scenario(named["k4-0.20"], baseline, 1e-6)
        assert row.report.verdict == DAMAGED
        assert row.report.localized_spring == 4
        assert abs(row.report.severity_estimate - 0.20) <= 0.01
        assert row.passed
        row = run_scenario(named["k8-0.20"], baseline, 1e-6)
        assert row.report.verdict == HEALTHY and row.passed

    def test_errors_carry_scenario_name(self):
        s = paper_suite(0)[5]
        bad = replace(s, sim=replace(s.sim, ts=1e-2))
        baseline, _ = estimate_for(s.chain, s.spec, s.sim, s.excitation_dof)
        with pytest.raises(ScenarioError) as info:
            run_scenario(bad, baseline, 1e-6)
        assert s.name in str(info.value)


class TestRunSuite:
    def test_exact_mode_all_pass(self, exact_suite):
        assert len(exact_suite.rows) == 19
        failed = [r.scenario.name for r in exact_suite.rows if not r.passed]
        assert failed == []
        assert exact_suite.metadata["threshold"] == 1e-6

    def test_metadata_carries_seeds(self, exact_suite):
        meta = exact_suite.metadata
        assert meta["base_seed"] == 0
        assert meta["baseline_seed"] == BASELINE_SEED_OFFSET
        assert len(meta["calibration_seeds"]) == 10
        assert meta["scenario_seeds"] == list(range(19))
        assert set(meta["calibration_seeds"]).isdisjoint(meta["scenario_seeds"] + [meta["baseline_seed"]])

    def test_empty(self):
        result = run_suite([])
        assert result.rows == () and result.baseline is None

    def test_too_few_calibration_seeds(self):
        with pytest.raises(CalibrationFailed):
            run_suite(paper_suite(0), calibration_seeds=5)

    def test_determinism(self, exact_suite):
        again = run_suite(paper_suite(0, "exact"))
        assert emit_report(again, "structured") == emit_report(exact_suite, "structured")

    def test_order_independence(self, exact_suite):
        scenarios = paper_suite(0, "exact")[::-1]
        result = run_suite(scenarios, base_seed=0)
        assert {r.scenario.name: r for r in result.rows} == {r.scenario.name: r for r in exact_suite.rows}
        assert result.metadata["threshold"] == exact_suite.metadata["threshold"]

    def test_parallel_matches_sequential(self):
        scenarios = paper_suite(3, "exact")[:4]
        scenarios = [replace(s, sim=replace(s.sim, duration=2.0)) for s in scenarios]
        seq = run_suite(scenarios)
        par = run_suite(scenarios, max_workers=2)
        assert emit_report(par, "structured") == emit_report(seq, "structured")

    def test_monotone_in_severity(self):
        # fixed seed across severities
        base = paper_suite(0)
        baseline, _ = estimate_for(base[0].chain, base[0].spec, replace(base[0].sim, seed=99), 8)
        named = by_name(base)
        for spring, elems in {3: [A(1, 1)], 4: [A(1, 2), A(2, 1)], 5: [A(2, 3), A(3, 2)], 6: [A(3, 3)]}.items():
            di = []
            for sev in ("0.05", "0.10", "0.20"):
                s = replace(named[f"k{spring}-{sev}"], seed=5, sim=replace(named[f"k{spring}-{sev}"].sim, seed=5))
                di.append(run_scenario(s, baseline, 1e-6).report.indicators.values)
            for e in elems:
                assert di[2][e] > di[1][e] > di[0][e]


class TestEmitReport:
    def test_table(self, exact_suite):
        text = emit_report(exact_suite, "table")
        rows = list(csv.reader(io.StringIO(text)))
        assert rows[0] == [
            "scenario", "spring", "severity", "verdict", "localized_spring",
            "estimated_severity", "max_di", "pass",
        ]
        assert len(rows) == 20
        k4 = next(r for r in rows if r[0] == "k4-0.10")
        assert k4[3:5] == ["damaged", "k4"] and k4[-1] == "pass"

    def test_structured_round_trip(self, exact_suite):
        text = emit_report(exact_suite, "structured")
        back = parse_report(text)
        assert back == exact_suite
        assert emit_report(back, "structured") == text

    def test_k3_b1_indicator(self, exact_suite):
        row = next(r for r in exact_suite.rows if r.scenario.name == "k3-0.05")
        assert row.report.indicators.values[Element("B1", 1, 1)] == pytest.approx(0.05, abs=1e-9)

    def test_empty_suite_report(self):
        assert emit_report(SuiteResult(), "table").count("\n") == 1
        assert parse_report(emit_report(SuiteResult(), "structured")) == SuiteResult()

    def test_unknown_format(self, exact_suite):
        with pytest.raises(ValidationError):
            emit_report(exact_suite, "xml")
