"""White-noise excitation and explicit central-difference integration of the chain."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import (
    MissingChannel,
    StabilityViolation,
    TooFewSamples,
    ValidationError,
)
from .structure_model import ChainModel, SubstructureSpec, assemble_matrices, max_frequency_bound

CSV_FLOAT = "{:.16e}"  # 17 significant digits, lossless for float64


@dataclass(frozen=True)
class SimConfig:
    ts: float = 1e-3
    substep_ratio: int = 1
    duration: float = 20.0
    force_std: float = 1.0
    seed: int = 0
    measurement_noise_std: float = 0.0

    def __post_init__(self) -> None:
        if not self.ts > 0.0:
            raise ValidationError(f"ts must be > 0, got {self.ts!r}")
        if int(self.substep_ratio) != self.substep_ratio or self.substep_ratio < 1:
            raise ValidationError(f"substep_ratio must be an integer >= 1, got {self.substep_ratio!r}")
        if not self.duration >= 3 * self.ts:
            raise ValidationError(f"duration must be >= 3*ts, got {self.duration!r}")
        if not self.force_std > 0.0:
            raise ValidationError(f"force_std must be > 0, got {self.force_std!r}")
        if not self.measurement_noise_std >= 0.0:
            raise ValidationError(
                f"measurement_noise_std must be >= 0, got {self.measurement_noise_std!r}"
            )
        object.__setattr__(self, "substep_ratio", int(self.substep_ratio))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def step(self) -> float:
        """Integration step ``ts / substep_ratio``."""
        return self.ts / self.substep_ratio

    @property
    def n_output_intervals(self) -> int:
        return int(round(self.duration / self.ts))

    @property
    def n_steps(self) -> int:
        return self.n_output_intervals * self.substep_ratio

    def to_dict(self) -> dict[str, Any]:
        return {
            "ts": self.ts,
            "substep_ratio": self.substep_ratio,
            "duration": self.duration,
            "force_std": self.force_std,
            "seed": self.seed,
            "measurement_noise_std": self.measurement_noise_std,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "SimConfig":
        unknown = set(doc) - set(cls().to_dict())
        if unknown:
            raise ValidationError(f"unknown simulation fields: {sorted(unknown)}")
        return cls(**doc)


@dataclass(frozen=True, eq=False)
class ForceRecord:
    samples: np.ndarray
    dof: int
    dt: float
    seed: int

    def __post_init__(self) -> None:
        if not self.dt > 0.0:
            raise ValidationError(f"dt must be > 0, got {self.dt!r}")
        arr = np.array(self.samples, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,f\n")
        for n, f in enumerate(self.samples):
            buf.write(f"{CSV_FLOAT.format(n * self.dt)},{CSV_FLOAT.format(f)}\n")
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class DisplacementRecord:
    """Samples x DOFs displacement matrix (m) at period ``dt``."""

    data: np.ndarray
    dt: float
    dof_labels: tuple[int, ...]

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=float)
        if data.ndim != 2:
            raise ValidationError(f"data must be 2-D, got shape {data.shape}")
        labels = tuple(int(x) for x in self.dof_labels)
        if data.shape[1] != len(labels):
            raise ValidationError(
                f"{data.shape[1]} data columns but {len(labels)} DOF labels"
            )
        if len(set(labels)) != len(labels):
            raise ValidationError(f"duplicate DOF labels: {labels}")
        if not self.dt > 0.0:
            raise ValidationError(f"dt must be > 0, got {self.dt!r}")
        if data.shape[0] < 3:
            raise TooFewSamples(f"a displacement record needs >= 3 samples, got {data.shape[0]}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dof_labels", labels)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    def select(self, dofs: Sequence[int]) -> "DisplacementRecord":
        index = {label: col for col, label in enumerate(self.dof_labels)}
        missing = [d for d in dofs if d not in index]
        if missing:
            raise MissingChannel(
                f"record has no channel for DOF(s) {missing}; available {list(self.dof_labels)}"
            )
        cols = [index[d] for d in dofs]
        return DisplacementRecord(self.data[:, cols], self.dt, tuple(dofs))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(["t"] + [f"z{j}" for j in self.dof_labels]) + "\n")
        for n, row in enumerate(self.data):
            buf.write(
                ",".join([CSV_FLOAT.format(n * self.dt)] + [CSV_FLOAT.format(v) for v in row])
            )
            buf.write("\n")
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str, dt: float | None = None) -> "DisplacementRecord":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValidationError("empty displacement CSV")
        header = [h.strip() for h in rows[0]]
        if not header or header[0] != "t" or len(header) < 2:
            raise ValidationError(f"displacement CSV header must be 't,z1,...', got {header}")
        labels = []
        for name in header[1:]:
            if not (name.startswith("z") and name[1:].isdigit()):
                raise ValidationError(f"bad displacement column name {name!r}")
            labels.append(int(name[1:]))
        body = [r for r in rows[1:] if r]
        if len(body) < 3:
            raise TooFewSamples(f"a displacement record needs >= 3 samples, got {len(body)}")
        try:
            values = np.array([[float(v) for v in r] for r in body])
        except ValueError as exc:
            raise ValidationError(f"non-numeric value in displacement CSV: {exc}") from None
        if values.shape[1] != len(header):
            raise ValidationError("ragged displacement CSV")
        if dt is None:
            dt = values[1, 0] - values[0, 0]
        return cls(values[:, 1:], dt, tuple(labels))

    @classmethod
    def read_csv(cls, path: str | Path, dt: float | None = None) -> "DisplacementRecord":
        return cls.from_csv(Path(path).read_text(), dt)


def generate_excitation(config: SimConfig, dof: int) -> ForceRecord:
    """Seeded i.i.d. Gaussian force samples at the integration step."""
    rng = np.random.default_rng(config.seed)
    samples = config.force_std * rng.standard_normal(config.n_steps)
    return ForceRecord(samples=samples, dof=dof, dt=config.step, seed=config.seed)


def check_stability(model: ChainModel, step: float) -> None:
    bound = max_frequency_bound(model)
    if not step < 2.0 / bound:
        raise StabilityViolation(step, bound)


def _noise_rng(seed: int) -> np.random.Generator:
    # separate stream from the force generator, which uses default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))


def simulate(model: ChainModel, force: ForceRecord, config: SimConfig) -> DisplacementRecord:
    """Integrate the undamped chain from rest and return displacements at period ``ts``.

    The full chain is advanced with

        z(k+1) = 2 z(k) - z(k-1) + h^2 M^-1 (F(k) - K z(k))

    at ``h = ts / substep_ratio`` and every ``substep_ratio``-th state is kept.
    ``z(1) = h^2 M^-1 F(0) / 2`` starts the recursion from rest. Measurement
    noise, if any, is added to the decimated output only.
    """
    h = config.step
    check_stability(model, h)
    if not 1 <= force.dof <= model.n_dof:
        raise ValidationError(f"excited DOF {force.dof} outside 1..{model.n_dof}")
    if not math.isclose(force.dt, h, rel_tol=1e-12):
        raise ValidationError(f"force period {force.dt!r} does not match integration step {h!r}")
    n_steps = config.n_steps
    if force.samples.shape[0] < n_steps:
        raise ValidationError(f"force record has {force.samples.shape[0]} samples, need {n_steps}")

    mass, stiff = assemble_matrices(model)
    n = model.n_dof
    r = config.substep_ratio
    c = h * h / np.diag(mass)
    d = force.dof - 1
    f = force.samples

    out = np.zeros((n_steps // r + 1, n))
    z_prev = np.zeros(n)
    z = np.zeros(n)
    z[d] = 0.5 * c[d] * f[0]
    if r == 1:
        out[1] = z
    for k in range(1, n_steps):
        acc = -(stiff @ z)
        acc[d] += f[k]
        z_next = 2.0 * z - z_prev + c * acc
        z_prev = z
        z = z_next
        if (k + 1) % r == 0:
            out[(k + 1) // r] = z

    if config.measurement_noise_std > 0.0:
        out = out + config.measurement_noise_std * _noise_rng(config.seed).standard_normal(out.shape)
    return DisplacementRecord(out, config.ts, tuple(range(1, n + 1)))


def extract_substructure_signals(
    record: DisplacementRecord, spec: SubstructureSpec
) -> tuple[DisplacementRecord, DisplacementRecord]:
    """Internal (endogenous) and ``[lower, upper]`` interface (exogenous) channels."""
    return record.select(spec.internal_dofs), record.select(spec.interface_dofs)
