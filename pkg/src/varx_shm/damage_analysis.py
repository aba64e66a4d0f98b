"""Damage indicators, health verdicts, localization and severity from VARX models.

Indicators are computed on a stiffness transform of the coefficients so that
every tracked quantity is proportional to stiffness over mass:

* diagonal ``A1(r,r)`` -> ``2 - A1(r,r)`` (sum of the two adjacent springs),
* off-diagonal ``A1(r,r+1)``, ``A1(r+1,r)`` -> unchanged (the shared spring),
* ``B1(1,1)`` and ``B1(q,2)`` -> unchanged (the two boundary springs).

Element positions are 1-based throughout, matching their printed labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    BaselineDegenerate,
    DimensionMismatch,
    NotLocalized,
    TooFewRuns,
    ValidationError,
)
from .structure_model import VarxModel

HEALTHY = "healthy"
DAMAGED = "damaged"
INCONCLUSIVE = "inconclusive"
VERDICTS = (HEALTHY, DAMAGED, INCONCLUSIVE)

THRESHOLD_FLOOR = 1e-6
THRESHOLD_SIGMAS = 5.0
MIN_CALIBRATION_RUNS = 10
DEGENERATE_TOL = 1e-12


class Element(NamedTuple):
    matrix: str  # "A1" or "B1"
    row: int
    col: int

    @property
    def label(self) -> str:
        return f"{self.matrix}({self.row},{self.col})"

    @classmethod
    def parse(cls, label: str) -> "Element":
        try:
            matrix, rest = label.split("(", 1)
            row, col = rest.rstrip(")").split(",")
            elem = cls(matrix.strip(), int(row), int(col))
        except ValueError:
            raise ValidationError(f"bad element label {label!r}") from None
        if elem.matrix not in ("A1", "B1"):
            raise ValidationError(f"bad element label {label!r}")
        return elem


def a1_elements(q: int) -> list[Element]:
    """Tridiagonal A1 positions in row-major order."""
    return [
        Element("A1", r, c)
        for r in range(1, q + 1)
        for c in range(max(1, r - 1), min(q, r + 1) + 1)
    ]


def b1_elements(q: int) -> list[Element]:
    return [Element("B1", 1, 1), Element("B1", q, 2)]


def tracked_elements(q: int) -> list[Element]:
    return a1_elements(q) + b1_elements(q)


def spring_pattern(q: int, local_spring: int) -> frozenset[Element]:
    """A1 elements driven by the ``local_spring``-th substructure spring (1..q+1).

    Spring 1 sits below the first internal DOF, spring ``q + 1`` above the last.
    """
    if not 1 <= local_spring <= q + 1:
        raise ValidationError(f"local spring {local_spring} outside 1..{q + 1}")
    if local_spring == 1:
        return frozenset({Element("A1", 1, 1)})
    if local_spring == q + 1:
        return frozenset({Element("A1", q, q)})
    r = local_spring - 1
    return frozenset(
        {
            Element("A1", r, r),
            Element("A1", r, r + 1),
            Element("A1", r + 1, r),
            Element("A1", r + 1, r + 1),
        }
    )


def severity_elements(q: int, local_spring: int) -> list[Element]:
    """Elements proportional to a single spring, used for the severity estimate."""
    if local_spring == 1:
        return [Element("B1", 1, 1)]
    if local_spring == q + 1:
        return [Element("B1", q, 2)]
    r = local_spring - 1
    return [Element("A1", r, r + 1), Element("A1", r + 1, r)]


def stiffness_transform(model: VarxModel) -> dict[Element, float]:
    theta: dict[Element, float] = {}
    for e in a1_elements(model.q):
        value = float(model.a1[e.row - 1, e.col - 1])
        theta[e] = 2.0 - value if e.row == e.col else value
    for e in b1_elements(model.q):
        theta[e] = float(model.b1[e.row - 1, e.col - 1])
    return theta


@dataclass(frozen=True)
class DamageIndicators:
    values: dict[Element, float]
    baseline_id: str

    def __post_init__(self) -> None:
        for e, v in self.values.items():
            if not (math.isfinite(v) and v >= 0.0):
                raise ValidationError(f"damage indicator {e.label} must be finite and >= 0, got {v!r}")

    def a1_values(self) -> dict[Element, float]:
        return {e: v for e, v in self.values.items() if e.matrix == "A1"}

    @property
    def max_value(self) -> float:
        return max(self.values.values(), default=0.0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "baseline_id": self.baseline_id,
            "values": {e.label: v for e, v in self.values.items()},
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "DamageIndicators":
        return cls(
            values={Element.parse(k): float(v) for k, v in doc["values"].items()},
            baseline_id=str(doc["baseline_id"]),
        )


@dataclass(frozen=True)
class DamageReport:
    verdict: str
    localized_spring: int | None
    severity_estimate: float | None
    indicators: DamageIndicators
    threshold: float

    def __post_init__(self) -> None:
        if self.verdict not in VERDICTS:
            raise ValidationError(f"unknown verdict {self.verdict!r}")
        if (self.localized_spring is not None) != (self.verdict == DAMAGED):
            raise ValidationError("a localized spring is reported exactly when the verdict is damaged")
        if self.severity_estimate is not None:
            if self.localized_spring is None:
                raise ValidationError("severity requires a localized spring")
            if not 0.0 <= self.severity_estimate < 1.0:
                raise ValidationError(f"severity must lie in [0, 1), got {self.severity_estimate!r}")

    @property
    def spring_label(self) -> str | None:
        return None if self.localized_spring is None else f"k{self.localized_spring}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict,
            "spring": self.spring_label,
            "severity": self.severity_estimate,
            "threshold": self.threshold,
            "baseline_id": self.indicators.baseline_id,
            "indicators": {e.label: v for e, v in self.indicators.values.items()},
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "DamageReport":
        spring = doc.get("spring")
        return cls(
            verdict=doc["verdict"],
            localized_spring=None if spring is None else int(str(spring).lstrip("k")),
            severity_estimate=None if doc.get("severity") is None else float(doc["severity"]),
            indicators=DamageIndicators(
                values={Element.parse(k): float(v) for k, v in doc["indicators"].items()},
                baseline_id=str(doc["baseline_id"]),
            ),
            threshold=float(doc["threshold"]),
        )


def _check_compatible(current: VarxModel, baseline: VarxModel) -> None:
    if current.q != baseline.q:
        raise DimensionMismatch(f"model dimensions differ: q={current.q} vs q={baseline.q}")
    if not math.isclose(current.ts, baseline.ts, rel_tol=1e-12):
        raise DimensionMismatch(f"sampling periods differ: {current.ts!r} vs {baseline.ts!r}")


def damage_indicators(current: VarxModel, baseline: VarxModel) -> DamageIndicators:
    """Relative change of every tracked transform value with respect to the baseline."""
    _check_compatible(current, baseline)
    th_cur = stiffness_transform(current)
    th_base = stiffness_transform(baseline)
    values = {}
    for e, ref in th_base.items():
        if abs(ref) <= DEGENERATE_TOL:
            raise BaselineDegenerate(f"baseline {e.label} transform {ref!r} is too close to zero")
        values[e] = abs(th_cur[e] - ref) / abs(ref)
    return DamageIndicators(values=values, baseline_id=baseline.digest())


def calibrate_threshold(healthy_runs: Sequence[DamageIndicators]) -> float:
    """Mean plus five standard deviations of the pooled healthy indicators, floored."""
    if len(healthy_runs) < MIN_CALIBRATION_RUNS:
        raise TooFewRuns(
            f"threshold calibration needs >= {MIN_CALIBRATION_RUNS} healthy runs, got {len(healthy_runs)}"
        )
    pooled = np.array([v for run in healthy_runs for v in run.values.values()])
    tau = float(pooled.mean() + THRESHOLD_SIGMAS * pooled.std())
    return max(tau, THRESHOLD_FLOOR)


def _decision_table(q: int) -> dict[frozenset[Element], list[int]]:
    table: dict[frozenset[Element], list[int]] = {}
    for s in range(1, q + 2):
        table.setdefault(spring_pattern(q, s), []).append(s)
    return table


def localize(
    indicators: DamageIndicators, threshold: float, q: int, lower_interface: int = 0
) -> DamageReport:
    """Health verdict and damaged spring from the set of A1 indicators above ``threshold``.

    Springs are reported by global index: the substructure's ``j``-th spring is
    ``lower_interface + j``, and the default of 0 gives local numbering. With a
    single internal DOF both boundary springs drive the same A1 element, and the
    B1 indicators decide between them.
    """
    exceeded = frozenset(e for e, v in indicators.a1_values().items() if v > threshold)
    if not exceeded:
        return DamageReport(HEALTHY, None, None, indicators, threshold)
    candidates = _decision_table(q).get(exceeded, [])
    if len(candidates) > 1:
        b1_hits = [
            s for s in candidates
            if any(indicators.values.get(e, 0.0) > threshold for e in severity_elements(q, s))
        ]
        candidates = b1_hits
    if len(candidates) != 1:
        return DamageReport(INCONCLUSIVE, None, None, indicators, threshold)
    return DamageReport(DAMAGED, lower_interface + candidates[0], None, indicators, threshold)


def estimate_severity(current: VarxModel, baseline: VarxModel, spring: int | None) -> float:
    """Fractional stiffness loss of ``spring`` (global index), assuming unchanged masses."""
    if spring is None:
        raise NotLocalized("severity requires a localized spring")
    _check_compatible(current, baseline)
    local = spring - current.exogenous_labels[0]
    if not 1 <= local <= current.q + 1:
        raise NotLocalized(f"spring k{spring} is not part of the substructure")
    th_cur = stiffness_transform(current)
    th_base = stiffness_transform(baseline)
    elems = severity_elements(current.q, local)
    ratio = sum(th_cur[e] / th_base[e] for e in elems) / len(elems)
    return 1.0 - ratio


def analyze(current: VarxModel, baseline: VarxModel, threshold: float) -> DamageReport:
    """Indicators, verdict and, when damage is localized, its severity.

    A localized stiffness gain would give a negative loss; it is reported as 0.
    """
    if current.exogenous_labels != baseline.exogenous_labels:
        raise DimensionMismatch(
            f"models describe different substructures: {current.exogenous_labels} "
            f"vs {baseline.exogenous_labels}"
        )
    indicators = damage_indicators(current, baseline)
    report = localize(indicators, threshold, current.q, current.exogenous_labels[0])
    if report.verdict != DAMAGED:
        return report
    severity = estimate_severity(current, baseline, report.localized_spring)
    return DamageReport(DAMAGED, report.localized_spring, max(severity, 0.0), indicators, threshold)

