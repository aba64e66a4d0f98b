"""Shear-building chain model, substructure partition and analytic VARX matrices.

DOFs and springs are numbered 1..N bottom to top. Spring ``j`` connects DOF
``j-1`` to DOF ``j``; spring 1 ties DOF 1 to the ground and the top DOF has no
spring above it.

VARX matrices use the convention

    z(n) = A1 z(n-1) + A2 z(n-2) + B1 u(n-1)

where ``z`` stacks the internal DOFs of a substructure and ``u`` holds the
lower and upper interface displacements, in that order.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    InvalidSpec,
    LengthMismatch,
    NonPositiveParameter,
    SeverityOutOfRange,
    ValidationError,
)


@dataclass(frozen=True)
class ChainModel:
    masses: tuple[float, ...]
    stiffnesses: tuple[float, ...]

    def __post_init__(self) -> None:
        masses = tuple(float(m) for m in self.masses)
        stiffnesses = tuple(float(k) for k in self.stiffnesses)
        if len(masses) != len(stiffnesses):
            raise LengthMismatch(
                f"masses has {len(masses)} entries but stiffnesses has {len(stiffnesses)}"
            )
        if len(masses) < 2:
            raise LengthMismatch(f"a chain needs at least 2 DOFs, got {len(masses)}")
        for name, values in (("masses", masses), ("stiffnesses", stiffnesses)):
            for j, v in enumerate(values, start=1):
                if not (math.isfinite(v) and v > 0.0):
                    raise NonPositiveParameter(name, j, v)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "stiffnesses", stiffnesses)

    @property
    def n_dof(self) -> int:
        return len(self.masses)

    def mass(self, j: int) -> float:
        """Mass of DOF ``j`` (1-based)."""
        return self.masses[j - 1]

    def stiffness(self, j: int) -> float:
        """Stiffness of spring ``j`` (1-based); zero above the top DOF."""
        if j == self.n_dof + 1:
            return 0.0
        return self.stiffnesses[j - 1]

    def to_dict(self) -> dict[str, Any]:
        return {"masses": list(self.masses), "stiffnesses": list(self.stiffnesses)}

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ChainModel":
        try:
            return build_chain(doc["masses"], doc["stiffnesses"])
        except KeyError as exc:
            raise ValidationError(f"chain document is missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class SubstructureSpec:
    """Substructure bounded by two measured interface DOFs (1-based)."""

    lower_interface: int
    upper_interface: int

    def __post_init__(self) -> None:
        lo, hi = int(self.lower_interface), int(self.upper_interface)
        if lo < 1:
            raise InvalidSpec(f"lower_interface must be >= 1, got {lo}")
        if hi - lo < 2:
            raise InvalidSpec(
                f"substructure {lo}..{hi} has no internal DOF (need upper - lower >= 2)"
            )
        object.__setattr__(self, "lower_interface", lo)
        object.__setattr__(self, "upper_interface", hi)

    @property
    def internal_dofs(self) -> tuple[int, ...]:
        return tuple(range(self.lower_interface + 1, self.upper_interface))

    @property
    def interface_dofs(self) -> tuple[int, int]:
        return (self.lower_interface, self.upper_interface)

    @property
    def q(self) -> int:
        return self.upper_interface - self.lower_interface - 1

    @property
    def springs(self) -> tuple[int, ...]:
        """Springs whose stiffness enters the substructure equations."""
        return tuple(range(self.lower_interface + 1, self.upper_interface + 1))

    def validate_for(self, model: ChainModel) -> None:
        if self.upper_interface > model.n_dof:
            raise InvalidSpec(
                f"upper_interface {self.upper_interface} exceeds the {model.n_dof}-DOF chain"
            )

    def to_dict(self) -> dict[str, int]:
        return {"lower_interface": self.lower_interface, "upper_interface": self.upper_interface}

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "SubstructureSpec":
        try:
            return cls(doc["lower_interface"], doc["upper_interface"])
        except KeyError as exc:
            raise ValidationError(f"substructure document is missing field {exc.args[0]!r}") from None


def _frozen(a: Any) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class VarxModel:
    a1: np.ndarray
    a2: np.ndarray
    b1: np.ndarray
    ts: float
    endogenous_labels: tuple[int, ...]
    exogenous_labels: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        a1, a2, b1 = _frozen(self.a1), _frozen(self.a2), _frozen(self.b1)
        if a1.ndim != 2 or a1.shape[0] != a1.shape[1]:
            raise DimensionMismatch(f"a1 must be square, got shape {a1.shape}")
        q = a1.shape[0]
        if a2.shape != (q, q):
            raise DimensionMismatch(f"a2 must have shape {(q, q)}, got {a2.shape}")
        if b1.shape != (q, 2):
            raise DimensionMismatch(f"b1 must have shape {(q, 2)}, got {b1.shape}")
        if not (self.ts > 0.0):
            raise ValidationError(f"ts must be > 0, got {self.ts!r}")
        endo = tuple(int(x) for x in self.endogenous_labels)
        exo = tuple(int(x) for x in self.exogenous_labels)
        if len(endo) != q:
            raise DimensionMismatch(f"{len(endo)} endogenous labels for q={q}")
        if len(exo) != 2:
            raise DimensionMismatch(f"expected 2 exogenous labels, got {len(exo)}")
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "ts", float(self.ts))
        object.__setattr__(self, "endogenous_labels", endo)
        object.__setattr__(self, "exogenous_labels", exo)

    @property
    def q(self) -> int:
        return self.a1.shape[0]

    @property
    def coefficients(self) -> np.ndarray:
        """Stacked block ``[A1 A2 B1]`` of shape ``(q, 2q + 2)``."""
        return np.hstack([self.a1, self.a2, self.b1])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VarxModel):
            return NotImplemented
        return (
            self.ts == other.ts
            and self.endogenous_labels == other.endogenous_labels
            and self.exogenous_labels == other.exogenous_labels
            and np.array_equal(self.a1, other.a1)
            and np.array_equal(self.a2, other.a2)
            and np.array_equal(self.b1, other.b1)
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "ts": self.ts,
            "a1": self.a1.tolist(),
            "a2": self.a2.tolist(),
            "b1": self.b1.tolist(),
            "endogenous_labels": list(self.endogenous_labels),
            "exogenous_labels": list(self.exogenous_labels),
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "VarxModel":
        try:
            return cls(
                a1=doc["a1"],
                a2=doc["a2"],
                b1=doc["b1"],
                ts=doc["ts"],
                endogenous_labels=doc["endogenous_labels"],
                exogenous_labels=doc["exogenous_labels"],
            )
        except KeyError as exc:
            raise ValidationError(f"VARX document is missing field {exc.args[0]!r}") from None

    def digest(self) -> str:
        """Content hash of the numeric model, used as a stable baseline id."""
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def build_chain(masses: Sequence[float], stiffnesses: Sequence[float]) -> ChainModel:
    """Validated chain model; raises on mismatched lengths or non-positive values."""
    return ChainModel(tuple(masses), tuple(stiffnesses))


def apply_damage(model: ChainModel, spring_index: int, severity: float) -> ChainModel:
    """Copy of ``model`` with spring ``spring_index`` scaled by ``1 - severity``."""
    if not 1 <= spring_index <= model.n_dof:
        raise IndexOutOfRange(f"spring index {spring_index} outside 1..{model.n_dof}")
    if not 0.0 <= severity < 1.0:
        raise SeverityOutOfRange(f"severity must be in [0, 1), got {severity!r}")
    if severity == 0.0:
        return model
    k = list(model.stiffnesses)
    k[spring_index - 1] *= 1.0 - severity
    return replace(model, stiffnesses=tuple(k))


def assemble_matrices(model: ChainModel) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal mass matrix and tridiagonal stiffness matrix of the full chain."""
    n = model.n_dof
    k = np.append(np.asarray(model.stiffnesses), 0.0)
    mass = np.diag(model.masses)
    stiff = np.diag(k[:-1] + k[1:])
    off = -k[1:n]
    stiff += np.diag(off, 1) + np.diag(off, -1)
    return mass, stiff


def max_frequency_bound(model: ChainModel) -> float:
    """Gershgorin upper bound on the largest undamped natural frequency (rad/s).

    Row ``j`` of ``M^-1 K`` has diagonal ``(k_j + k_{j+1}) / m_j`` and absolute
    off-diagonal sum no larger than the same value, so every eigenvalue is at
    most twice the largest diagonal.
    """
    diag = [
        (model.stiffness(j) + model.stiffness(j + 1)) / model.mass(j)
        for j in range(1, model.n_dof + 1)
    ]
    return math.sqrt(2.0 * max(diag))


def ground_truth_varx(model: ChainModel, spec: SubstructureSpec, ts: float) -> VarxModel:
    """Analytic VARX matrices of the substructure under central differences."""
    spec.validate_for(model)
    if not ts > 0.0:
        raise ValidationError(f"ts must be > 0, got {ts!r}")
    q = spec.q
    ts2 = ts * ts
    a1 = np.zeros((q, q))
    b1 = np.zeros((q, 2))
    for r, g in enumerate(spec.internal_dofs):
        m = model.mass(g)
        a1[r, r] = 2.0 - ts2 * (model.stiffness(g) + model.stiffness(g + 1)) / m
        if r > 0:
            a1[r, r - 1] = ts2 * model.stiffness(g) / m
        if r < q - 1:
            a1[r, r + 1] = ts2 * model.stiffness(g + 1) / m
    lo, hi = spec.interface_dofs
    b1[0, 0] = ts2 * model.stiffness(lo + 1) / model.mass(lo + 1)
    b1[q - 1, 1] = ts2 * model.stiffness(hi) / model.mass(hi - 1)
    return VarxModel(
        a1=a1,
        a2=-np.eye(q),
        b1=b1,
        ts=ts,
        endogenous_labels=spec.internal_dofs,
        exogenous_labels=spec.interface_dofs,
    )
