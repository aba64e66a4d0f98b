"""Scenario grid for the eight-storey shear building and self-checking suite runs.

Seeds are fixed offsets from ``base_seed``: scenario ``i`` uses ``base_seed + i``,
the healthy baseline ``base_seed + BASELINE_SEED_OFFSET`` and calibration run
``j`` uses ``base_seed + CALIBRATION_SEED_OFFSET + j``. Every output is a
deterministic function of the scenario definitions.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

from .damage_analysis import (
    DAMAGED,
    HEALTHY,
    DamageReport,
    Element,
    analyze,
    calibrate_threshold,
    damage_indicators,
    spring_pattern,
)
from .errors import CalibrationFailed, ScenarioError, ValidationError, VarxShmError
from .simulator import SimConfig, extract_substructure_signals, generate_excitation, simulate
from .structure_model import ChainModel, SubstructureSpec, VarxModel, apply_damage, build_chain
from .varx_estimation import EstimationDiagnostics, estimate_varx

logger = logging.getLogger(__name__)

BASELINE_SEED_OFFSET = 1000
CALIBRATION_SEED_OFFSET = 2000
MIN_CALIBRATION_SEEDS = 10

BUILDING_MASS = 100.0  # kg per floor
BUILDING_STIFFNESS = 1.0e6  # N/m per storey
BUILDING_FLOORS = 8
BUILDING_SUBSTRUCTURE = (2, 6)
BUILDING_SPRINGS = (1, 3, 4, 5, 6, 8)
BUILDING_SEVERITIES = (0.05, 0.10, 0.20)
BUILDING_TS = 1e-3

MODES = {
    "exact": {"substep_ratio": 1, "severity_tolerance": 0.01},
    "realistic": {"substep_ratio": 10, "severity_tolerance": 0.02},
}


def scenario_name(spring: int | None, severity: float) -> str:
    return "healthy" if spring is None else f"k{spring}-{severity:.2f}"


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    spring: int | None
    severity: float
    seed: int
    sim: SimConfig
    spec: SubstructureSpec
    chain: ChainModel
    excitation_dof: int
    expected_verdict: str
    expected_spring: int | None
    expected_pattern: frozenset[Element] = frozenset()
    severity_tolerance: float = 0.01

    def __post_init__(self) -> None:
        if (self.severity == 0.0) != (self.spring is None):
            raise ValidationError(f"scenario {self.name!r}: severity is 0 exactly when no spring is damaged")

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "spring": self.spring,
            "severity": self.severity,
            "seed": self.seed,
            "sim": self.sim.to_dict(),
            "substructure": self.spec.to_dict(),
            "chain": self.chain.to_dict(),
            "excitation_dof": self.excitation_dof,
            "expected_verdict": self.expected_verdict,
            "expected_spring": self.expected_spring,
            "expected_pattern": sorted(e.label for e in self.expected_pattern),
            "severity_tolerance": self.severity_tolerance,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ScenarioSpec":
        return cls(
            name=doc["name"],
            spring=doc["spring"],
            severity=float(doc["severity"]),
            seed=int(doc["seed"]),
            sim=SimConfig.from_dict(doc["sim"]),
            spec=SubstructureSpec.from_dict(doc["substructure"]),
            chain=ChainModel.from_dict(doc["chain"]),
            excitation_dof=int(doc["excitation_dof"]),
            expected_verdict=doc["expected_verdict"],
            expected_spring=doc["expected_spring"],
            expected_pattern=frozenset(Element.parse(x) for x in doc["expected_pattern"]),
            severity_tolerance=float(doc["severity_tolerance"]),
        )


@dataclass(frozen=True)
class ScenarioRow:
    scenario: ScenarioSpec
    report: DamageReport
    diagnostics: EstimationDiagnostics
    passed: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario.to_dict(),
            "report": self.report.to_dict(),
            "diagnostics": self.diagnostics.to_dict(),
            "pass": self.passed,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ScenarioRow":
        return cls(
            scenario=ScenarioSpec.from_dict(doc["scenario"]),
            report=DamageReport.from_dict(doc["report"]),
            diagnostics=EstimationDiagnostics.from_dict(doc["diagnostics"]),
            passed=bool(doc["pass"]),
        )


@dataclass(frozen=True)
class SuiteResult:
    rows: tuple[ScenarioRow, ...] = ()
    metadata: dict[str, Any] = field(default_factory=dict)
    baseline: VarxModel | None = None

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_dict(self) -> dict[str, Any]:
        return {
            "metadata": self.metadata,
            "baseline": None if self.baseline is None else self.baseline.to_dict(),
            "rows": [r.to_dict() for r in self.rows],
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "SuiteResult":
        return cls(
            rows=tuple(ScenarioRow.from_dict(r) for r in doc["rows"]),
            metadata=dict(doc["metadata"]),
            baseline=None if doc["baseline"] is None else VarxModel.from_dict(doc["baseline"]),
        )


def expected_outcome(spec: SubstructureSpec, spring: int | None) -> tuple[str, int | None, frozenset[Element]]:
    """Verdict, spring and A1 pattern a single-spring loss should produce."""
    if spring is None or spring not in spec.springs:
        return HEALTHY, None, frozenset()
    return DAMAGED, spring, spring_pattern(spec.q, spring - spec.lower_interface)


def build_suite(
    chain: ChainModel,
    spec: SubstructureSpec,
    sim: SimConfig,
    springs: Sequence[int],
    severities: Sequence[float],
    base_seed: int,
    excitation_dof: int,
    severity_tolerance: float,
) -> list[ScenarioSpec]:
    """Healthy scenario followed by every (spring, severity) pair, spring-major."""
    spec.validate_for(chain)
    cases: list[tuple[int | None, float]] = [(None, 0.0)]
    cases += [(s, sev) for s in springs for sev in severities]
    scenarios = []
    for i, (spring, severity) in enumerate(cases):
        verdict, exp_spring, pattern = expected_outcome(spec, spring)
        seed = base_seed + i
        scenarios.append(
            ScenarioSpec(
                name=scenario_name(spring, severity),
                spring=spring,
                severity=severity,
                seed=seed,
                sim=replace(sim, seed=seed),
                spec=spec,
                chain=chain,
                excitation_dof=excitation_dof,
                expected_verdict=verdict,
                expected_spring=exp_spring,
                expected_pattern=pattern,
                severity_tolerance=severity_tolerance,
            )
        )
    return scenarios


def building_chain() -> ChainModel:
    return build_chain([BUILDING_MASS] * BUILDING_FLOORS, [BUILDING_STIFFNESS] * BUILDING_FLOORS)


def mode_sim_config(mode: str, **overrides: Any) -> SimConfig:
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {sorted(MODES)}, got {mode!r}")
    fields = {"ts": BUILDING_TS, "substep_ratio": MODES[mode]["substep_ratio"]}
    fields.update(overrides)
    return SimConfig(**fields)


def paper_suite(base_seed: int = 0, mode: str = "exact") -> list[ScenarioSpec]:
    """The 19 scenarios: healthy plus springs k1, k3..k6, k8 at 5, 10 and 20 %."""
    return build_suite(
        chain=building_chain(),
        spec=SubstructureSpec(*BUILDING_SUBSTRUCTURE),
        sim=mode_sim_config(mode),
        springs=BUILDING_SPRINGS,
        severities=BUILDING_SEVERITIES,
        base_seed=base_seed,
        excitation_dof=BUILDING_FLOORS,
        severity_tolerance=MODES[mode]["severity_tolerance"],
    )


def estimate_for(
    chain: ChainModel, spec: SubstructureSpec, sim: SimConfig, excitation_dof: int
) -> tuple[VarxModel, EstimationDiagnostics]:
    """Simulate ``chain`` and estimate the substructure VARX model."""
    record = simulate(chain, generate_excitation(sim, excitation_dof), sim)
    return estimate_varx(*extract_substructure_signals(record, spec))


def scenario_passes(scenario: ScenarioSpec, report: DamageReport) -> bool:
    if report.verdict != scenario.expected_verdict:
        return False
    if report.localized_spring != scenario.expected_spring:
        return False
    if report.verdict == DAMAGED:
        exceeded = frozenset(
            e for e, v in report.indicators.a1_values().items() if v > report.threshold
        )
        if exceeded != scenario.expected_pattern:
            return False
        if report.severity_estimate is None:
            return False
        return abs(report.severity_estimate - scenario.severity) <= scenario.severity_tolerance
    return True


def run_scenario(scenario: ScenarioSpec, baseline: VarxModel, threshold: float) -> ScenarioRow:
    """Damage, simulate, estimate, analyze and check one scenario against its expectation."""
    try:
        chain = scenario.chain
        if scenario.spring is not None:
            chain = apply_damage(chain, scenario.spring, scenario.severity)
        model, diagnostics = estimate_for(chain, scenario.spec, scenario.sim, scenario.excitation_dof)
        report = analyze(model, baseline, threshold)
    except VarxShmError as exc:
        raise ScenarioError(scenario.name, exc) from exc
    passed = scenario_passes(scenario, report)
    logger.info(
        "%s: verdict=%s spring=%s severity=%s pass=%s",
        scenario.name, report.verdict, report.spring_label, report.severity_estimate, passed,
    )
    return ScenarioRow(scenario, report, diagnostics, passed)


def _run_row(args: tuple[ScenarioSpec, VarxModel, float]) -> ScenarioRow:
    return run_scenario(*args)


def _estimate_seed(args: tuple[ChainModel, SubstructureSpec, SimConfig, int]) -> VarxModel:
    return estimate_for(*args)[0]


def _digest(doc: Any) -> str:
    payload = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _map(fn, items: list, max_workers: int) -> list:
    if max_workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def run_suite(
    scenarios: Sequence[ScenarioSpec],
    calibration_seeds: int = MIN_CALIBRATION_SEEDS,
    base_seed: int | None = None,
    max_workers: int = 1,
) -> SuiteResult:
    """Estimate the healthy baseline, calibrate the threshold and run every scenario.

    The scenarios must share chain, substructure, excitation point and simulation
    settings apart from the seed. ``base_seed`` defaults to the first scenario's
    seed, which is what :func:`build_suite` assigns.
    """
    if calibration_seeds < MIN_CALIBRATION_SEEDS:
        raise CalibrationFailed(
            f"need >= {MIN_CALIBRATION_SEEDS} calibration seeds, got {calibration_seeds}"
        )
    if not scenarios:
        return SuiteResult()
    first = scenarios[0]
    for s in scenarios[1:]:
        if (s.chain, s.spec, s.excitation_dof, replace(s.sim, seed=0)) != (
            first.chain, first.spec, first.excitation_dof, replace(first.sim, seed=0)
        ):
            raise ValidationError(f"scenario {s.name!r} does not share the suite configuration")
    if base_seed is None:
        base_seed = first.seed

    baseline_sim = replace(first.sim, seed=base_seed + BASELINE_SEED_OFFSET)
    baseline, _ = estimate_for(first.chain, first.spec, baseline_sim, first.excitation_dof)

    calib_jobs = [
        (first.chain, first.spec, replace(first.sim, seed=base_seed + CALIBRATION_SEED_OFFSET + j),
         first.excitation_dof)
        for j in range(calibration_seeds)
    ]
    healthy = _map(_estimate_seed, calib_jobs, max_workers)
    try:
        threshold = calibrate_threshold([damage_indicators(m, baseline) for m in healthy])
    except VarxShmError as exc:
        raise CalibrationFailed(str(exc)) from exc

    rows = _map(_run_row, [(s, baseline, threshold) for s in scenarios], max_workers)
    metadata = {
        "base_seed": base_seed,
        "baseline_seed": baseline_sim.seed,
        "calibration_seeds": [job[2].seed for job in calib_jobs],
        "scenario_seeds": [s.seed for s in scenarios],
        "threshold": threshold,
        "config_digest": _digest([s.to_dict() for s in scenarios]),
        "passed": sum(r.passed for r in rows),
        "total": len(rows),
    }
    return SuiteResult(rows=tuple(rows), metadata=metadata, baseline=baseline)


TABLE_COLUMNS = (
    "scenario", "spring", "severity", "verdict", "localized_spring",
    "estimated_severity", "max_di", "pass",
)


def emit_report(result: SuiteResult, format: str = "table") -> str:
    """Render a suite as CSV rows (``table``) or the full JSON document (``structured``)."""
    if format == "structured":
        return json.dumps(result.to_dict(), indent=2) + "\n"
    if format != "table":
        raise ValidationError(f"report format must be 'table' or 'structured', got {format!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for row in result.rows:
        s, rep = row.scenario, row.report
        writer.writerow([
            s.name,
            "" if s.spring is None else f"k{s.spring}",
            f"{s.severity:.2f}",
            rep.verdict,
            rep.spring_label or "",
            "" if rep.severity_estimate is None else f"{rep.severity_estimate:.6f}",
            f"{rep.indicators.max_value:.6e}",
            "pass" if row.passed else "FAIL",
        ])
    return buf.getvalue()


def parse_report(text: str) -> SuiteResult:
    """Inverse of ``emit_report(result, "structured")``."""
    return SuiteResult.from_dict(json.loads(text))
