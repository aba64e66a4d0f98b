"""Multivariable least-squares estimation of substructure VARX models.

The model class is fixed: two endogenous lags and one exogenous lag, no
intercept. With ``Y`` holding targets ``z(n)`` as columns and ``X`` the stacked
regressors ``[z(n-1); z(n-2); u(n-1)]``, the estimate is the coefficient
block ``C = [A1 A2 B1]`` minimising ``||Y - C X||_F``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from scipy import linalg

from .errors import (
    ChannelCountMismatch,
    DimensionMismatch,
    RankDeficient,
    TooFewSamples,
)
from .simulator import DisplacementRecord
from .structure_model import VarxModel

RANK_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class RegressionProblem:
    y: np.ndarray
    x: np.ndarray
    q: int

    def __post_init__(self) -> None:
        if self.y.shape[0] != self.q or self.x.shape[0] != 2 * self.q + 2:
            raise DimensionMismatch(
                f"expected y with {self.q} rows and x with {2 * self.q + 2}, "
                f"got {self.y.shape[0]} and {self.x.shape[0]}"
            )
        if self.y.shape[1] != self.x.shape[1]:
            raise DimensionMismatch("y and x must have the same number of columns")
        if self.t_usable < 2 * self.q + 2:
            raise TooFewSamples(
                f"{self.t_usable} usable samples for {2 * self.q + 2} unknowns per row"
            )

    @property
    def t_usable(self) -> int:
        return self.y.shape[1]


@dataclass(frozen=True)
class EstimationDiagnostics:
    residual_rms: tuple[float, ...]
    condition_indicator: float
    samples_used: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "residual_rms": list(self.residual_rms),
            "condition_indicator": self.condition_indicator,
            "samples_used": self.samples_used,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "EstimationDiagnostics":
        return cls(
            residual_rms=tuple(float(v) for v in doc["residual_rms"]),
            condition_indicator=float(doc["condition_indicator"]),
            samples_used=int(doc["samples_used"]),
        )


def _check_pair(endog: DisplacementRecord, exog: DisplacementRecord) -> None:
    if exog.data.shape[1] != 2:
        raise ChannelCountMismatch(f"expected 2 exogenous channels, got {exog.data.shape[1]}")
    if endog.n_samples != exog.n_samples:
        raise DimensionMismatch(
            f"endogenous record has {endog.n_samples} samples, exogenous {exog.n_samples}"
        )
    if endog.dt != exog.dt:
        raise DimensionMismatch(f"sample periods differ: {endog.dt!r} vs {exog.dt!r}")


def assemble_regression(endog: DisplacementRecord, exog: DisplacementRecord) -> RegressionProblem:
    """Stack targets ``z(n)`` and regressors ``[z(n-1); z(n-2); u(n-1)]`` for n >= 3."""
    _check_pair(endog, exog)
    z = endog.data.T
    u = exog.data.T
    q = z.shape[0]
    if endog.n_samples < 2 * q + 4:
        raise TooFewSamples(
            f"{endog.n_samples} samples give {endog.n_samples - 2} equations per row, "
            f"need at least {2 * q + 2}"
        )
    y = z[:, 2:]
    x = np.vstack([z[:, 1:-1], z[:, :-2], u[:, 1:-1]])
    return RegressionProblem(y=np.ascontiguousarray(y), x=np.ascontiguousarray(x), q=q)


def _singular_values(rmat: np.ndarray) -> np.ndarray:
    # singular values of x equal those of the triangular factor of x.T
    return linalg.svdvals(rmat)


def solve_mls(y: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares ``C`` with ``C x ~= y`` via QR of ``x.T``.

    Returns the coefficients and the singular values of ``x``.
    """
    qmat, rmat = linalg.qr(x.T, mode="economic")
    sv = _singular_values(rmat)
    if sv[0] == 0.0 or not np.all(np.isfinite(sv)) or sv[-1] <= RANK_RTOL * sv[0]:
        raise RankDeficient(
            "regressor matrix is rank deficient "
            f"(singular values {sv[0]:.3g} .. {sv[-1]:.3g}); the excitation is insufficient"
        )
    coef_t = linalg.solve_triangular(rmat, qmat.T @ y.T)
    return coef_t.T, sv


def normal_equations_solve(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Textbook ``Y X^T (X X^T)^-1``; kept as an independent check on :func:`solve_mls`."""
    return y @ x.T @ np.linalg.inv(x @ x.T)


def _residual_rms(coef: np.ndarray, problem: RegressionProblem) -> tuple[float, ...]:
    resid = problem.y - coef @ problem.x
    return tuple(float(v) for v in np.sqrt(np.mean(resid * resid, axis=1)))


def mls_estimate(
    problem: RegressionProblem,
    ts: float,
    endogenous_labels: Sequence[int],
    exogenous_labels: Sequence[int],
) -> tuple[VarxModel, EstimationDiagnostics]:
    coef, sv = solve_mls(problem.y, problem.x)
    q = problem.q
    model = VarxModel(
        a1=coef[:, :q],
        a2=coef[:, q : 2 * q],
        b1=coef[:, 2 * q :],
        ts=ts,
        endogenous_labels=tuple(endogenous_labels),
        exogenous_labels=tuple(exogenous_labels),
    )
    diag = EstimationDiagnostics(
        residual_rms=_residual_rms(model.coefficients, problem),
        condition_indicator=float((sv[0] / sv[-1]) ** 2),
        samples_used=problem.t_usable,
    )
    return model, diag


def estimate_varx(
    endog: DisplacementRecord, exog: DisplacementRecord
) -> tuple[VarxModel, EstimationDiagnostics]:
    """Convenience wrapper: regression assembly plus MLS with labels from the records."""
    problem = assemble_regression(endog, exog)
    return mls_estimate(problem, endog.dt, endog.dof_labels, exog.dof_labels)


def predict_one_step(
    model: VarxModel, z_prev: Any, z_prev2: Any, u_prev: Any
) -> np.ndarray:
    z1 = np.asarray(z_prev, dtype=float)
    z2 = np.asarray(z_prev2, dtype=float)
    u1 = np.asarray(u_prev, dtype=float)
    q = model.q
    if z1.shape[:1] != (q,) or z2.shape[:1] != (q,) or u1.shape[:1] != (2,):
        raise DimensionMismatch(
            f"expected z vectors of length {q} and u of length 2, "
            f"got {z1.shape}, {z2.shape}, {u1.shape}"
        )
    return model.a1 @ z1 + model.a2 @ z2 + model.b1 @ u1


def residual_stats(
    model: VarxModel, endog: DisplacementRecord, exog: DisplacementRecord
) -> EstimationDiagnostics:
    """One-step prediction RMS of ``model`` over every usable index of the records."""
    _check_pair(endog, exog)
    if endog.data.shape[1] != model.q:
        raise DimensionMismatch(
            f"model has {model.q} endogenous channels, record has {endog.data.shape[1]}"
        )
    if not math.isclose(endog.dt, model.ts, rel_tol=1e-12):
        raise DimensionMismatch(f"record period {endog.dt!r} differs from model ts {model.ts!r}")
    problem = assemble_regression(endog, exog)
    sv = _singular_values(linalg.qr(problem.x.T, mode="economic")[1])
    cond = float((sv[0] / sv[-1]) ** 2) if sv[-1] > 0.0 else math.inf
    return EstimationDiagnostics(
        residual_rms=_residual_rms(model.coefficients, problem),
        condition_indicator=cond,
        samples_used=problem.t_usable,
    )
