"""Command-line entry point.

Exit codes: 0 ok, 1 suite row failed, 2 invalid configuration or input,
3 integration stability violation, 4 estimation failure.

The configuration file is JSON; every section is optional and missing values
fall back to the eight-storey building defaults::

    {
      "chain": {"masses": [...], "stiffnesses": [...]},
      "substructure": {"lower_interface": 2, "upper_interface": 6},
      "sim": {"ts": 0.001, "duration": 20.0, "force_std": 1.0, "seed": 0,
              "substep_ratio": 1, "measurement_noise_std": 0.0},
      "excitation_dof": 8,
      "mode": "exact",
      "damage": {"spring": 4, "severity": 0.1},
      "suite": {"springs": [1, 3, 4, 5, 6, 8], "severities": [0.05, 0.1, 0.2],
                "base_seed": 0, "calibration_seeds": 10,
                "expected_overrides": {"k4-0.10": {"verdict": "healthy", "spring": null}}}
    }

Command-line flags win over file values.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

from . import damage_analysis as da
from . import experiment_harness as eh
from .errors import (
    EstimationError,
    ScenarioError,
    StabilityViolation,
    ValidationError,
    VarxShmError,
)
from .simulator import DisplacementRecord, SimConfig, extract_substructure_signals, generate_excitation, simulate
from .structure_model import (
    ChainModel,
    SubstructureSpec,
    VarxModel,
    apply_damage,
    ground_truth_varx,
)
from .varx_estimation import estimate_varx

logger = logging.getLogger("varx_shm")

EXIT_OK = 0
EXIT_SUITE_FAILED = 1
EXIT_CONFIG = 2
EXIT_STABILITY = 3
EXIT_ESTIMATION = 4

_TOP_KEYS = {"chain", "substructure", "sim", "excitation_dof", "mode", "damage", "suite"}
_SUITE_KEYS = {"springs", "severities", "base_seed", "calibration_seeds", "expected_overrides"}


@dataclass(frozen=True)
class CliConfig:
    chain: ChainModel
    spec: SubstructureSpec
    sim: SimConfig
    excitation_dof: int
    mode: str
    damage: tuple[int, float] | None = None
    springs: tuple[int, ...] = eh.BUILDING_SPRINGS
    severities: tuple[float, ...] = eh.BUILDING_SEVERITIES
    base_seed: int = 0
    calibration_seeds: int = eh.MIN_CALIBRATION_SEEDS
    expected_overrides: dict[str, dict[str, Any]] = field(default_factory=dict)

    def damaged_chain(self) -> ChainModel:
        if self.damage is None:
            return self.chain
        return apply_damage(self.chain, *self.damage)


def _read_json(path: str | Path, what: str) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ValidationError(f"{what} file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{what} file {path} is not valid JSON: {exc}") from None


def load_config(path: str | None, args: argparse.Namespace | None = None) -> CliConfig:
    """Merge defaults, the optional config file and command-line overrides."""
    doc: dict[str, Any] = {} if path is None else _read_json(path, "config")
    if not isinstance(doc, dict):
        raise ValidationError("config must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ValidationError(f"unknown config field(s): {sorted(unknown)}")

    chain = ChainModel.from_dict(doc["chain"]) if "chain" in doc else eh.building_chain()
    spec = (
        SubstructureSpec.from_dict(doc["substructure"])
        if "substructure" in doc
        else SubstructureSpec(*eh.BUILDING_SUBSTRUCTURE)
    )
    spec.validate_for(chain)

    mode = doc.get("mode", "exact")
    cli_mode = getattr(args, "mode", None)
    sim_doc = dict(doc.get("sim", {}))
    if cli_mode is not None:
        mode = cli_mode
        sim_doc.pop("substep_ratio", None)
    sim = eh.mode_sim_config(mode, **sim_doc)
    seed = getattr(args, "seed", None)
    if seed is not None:
        sim = replace(sim, seed=seed)

    excitation_dof = int(doc.get("excitation_dof", chain.n_dof))
    if not 1 <= excitation_dof <= chain.n_dof:
        raise ValidationError(f"excitation_dof {excitation_dof} outside 1..{chain.n_dof}")

    damage = None
    if doc.get("damage") is not None:
        d = doc["damage"]
        damage = (int(d["spring"]), float(d["severity"]))
        apply_damage(chain, *damage)

    suite = dict(doc.get("suite", {}))
    unknown = set(suite) - _SUITE_KEYS
    if unknown:
        raise ValidationError(f"unknown suite field(s): {sorted(unknown)}")
    base_seed = int(suite.get("base_seed", 0))
    if seed is not None:
        base_seed = seed
    return CliConfig(
        chain=chain,
        spec=spec,
        sim=sim,
        excitation_dof=excitation_dof,
        mode=mode,
        damage=damage,
        springs=tuple(int(s) for s in suite.get("springs", eh.BUILDING_SPRINGS)),
        severities=tuple(float(s) for s in suite.get("severities", eh.BUILDING_SEVERITIES)),
        base_seed=base_seed,
        calibration_seeds=int(suite.get("calibration_seeds", eh.MIN_CALIBRATION_SEEDS)),
        expected_overrides=dict(suite.get("expected_overrides", {})),
    )


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _dump(doc: Any) -> str:
    return json.dumps(doc, indent=2) + "\n"


def cmd_truth(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args)
    model = ground_truth_varx(cfg.damaged_chain(), cfg.spec, cfg.sim.ts)
    _write(_dump(model.to_dict()), args.out)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args)
    force = generate_excitation(cfg.sim, cfg.excitation_dof)
    record = simulate(cfg.damaged_chain(), force, cfg.sim)
    out = args.out or "displacements.csv"
    _write(record.to_csv(), out)
    if out != "-":
        meta = {
            "seed": cfg.sim.seed,
            "sim": cfg.sim.to_dict(),
            "chain": cfg.chain.to_dict(),
            "damage": None if cfg.damage is None else {"spring": cfg.damage[0], "severity": cfg.damage[1]},
            "excitation_dof": cfg.excitation_dof,
        }
        _write(_dump(meta), out + ".meta.json")
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args)
    try:
        record = DisplacementRecord.read_csv(args.csv)
    except FileNotFoundError:
        raise ValidationError(f"displacement file not found: {args.csv}") from None
    model, diagnostics = estimate_varx(*extract_substructure_signals(record, cfg.spec))
    doc = model.to_dict()
    doc["diagnostics"] = diagnostics.to_dict()
    # the simulate sidecar knows the seed that produced the data; the config only guesses
    sidecar = Path(str(args.csv) + ".meta.json")
    seed = _read_json(sidecar, "metadata").get("seed") if sidecar.is_file() else cfg.sim.seed
    doc["provenance"] = {"source": str(args.csv), "seed": seed}
    _write(_dump(doc), args.out)
    return EXIT_OK


def _threshold_from(args: argparse.Namespace) -> float:
    if args.threshold is not None:
        return float(args.threshold)
    if args.calibration is None:
        raise ValidationError("analyze needs --threshold or --calibration")
    doc = _read_json(args.calibration, "calibration")
    if "threshold" in doc:
        return float(doc["threshold"])
    if "metadata" in doc and "threshold" in doc["metadata"]:
        return float(doc["metadata"]["threshold"])
    if "healthy_indicators" in doc:
        runs = [da.DamageIndicators.from_dict(d) for d in doc["healthy_indicators"]]
        return da.calibrate_threshold(runs)
    raise ValidationError(
        f"calibration file {args.calibration} has no 'threshold' or 'healthy_indicators'"
    )


def report_document(report: da.DamageReport) -> str:
    return _dump(report.to_dict())


def cmd_analyze(args: argparse.Namespace) -> int:
    current = VarxModel.from_dict(_read_json(args.current, "current model"))
    baseline = VarxModel.from_dict(_read_json(args.baseline, "baseline model"))
    report = da.analyze(current, baseline, _threshold_from(args))
    _write(report_document(report), args.out)
    return EXIT_OK


def build_cli_suite(cfg: CliConfig) -> list[eh.ScenarioSpec]:
    scenarios = eh.build_suite(
        chain=cfg.chain,
        spec=cfg.spec,
        sim=cfg.sim,
        springs=cfg.springs,
        severities=cfg.severities,
        base_seed=cfg.base_seed,
        excitation_dof=cfg.excitation_dof,
        severity_tolerance=eh.MODES[cfg.mode]["severity_tolerance"],
    )
    names = {s.name for s in scenarios}
    unknown = set(cfg.expected_overrides) - names
    if unknown:
        raise ValidationError(f"expected_overrides name unknown scenario(s): {sorted(unknown)}")
    out = []
    for s in scenarios:
        o = cfg.expected_overrides.get(s.name)
        if o is not None:
            spring = o.get("spring", s.expected_spring)
            s = replace(
                s,
                expected_verdict=o.get("verdict", s.expected_verdict),
                expected_spring=None if spring is None else int(str(spring).lstrip("k")),
                expected_pattern=frozenset(
                    da.Element.parse(x) for x in o.get("pattern", [e.label for e in s.expected_pattern])
                ),
            )
        out.append(s)
    return out


def cmd_suite(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args)
    scenarios = build_cli_suite(cfg)
    result = eh.run_suite(
        scenarios,
        calibration_seeds=cfg.calibration_seeds,
        base_seed=cfg.base_seed,
        max_workers=args.workers,
    )
    table = eh.emit_report(result, "table")
    structured = eh.emit_report(result, "structured")
    if args.out is None:
        sys.stdout.write(table)
    else:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "suite_table.csv").write_text(table)
        (out / "suite_report.json").write_text(structured)
        sys.stdout.write(table)
    passed, total = result.metadata.get("passed", 0), result.metadata.get("total", 0)
    print(f"{passed}/{total} scenarios passed (threshold {result.metadata.get('threshold')})", file=sys.stderr)
    return EXIT_OK if result.all_passed else EXIT_SUITE_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="varx-shm",
        description="Substructure VARX damage localization for shear-building chains.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, seed: bool = True, mode: bool = True) -> None:
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", help="output path ('-' or omitted: stdout)")
        if seed:
            p.add_argument("--seed", type=int, help="random seed (base seed for the suite)")
        if mode:
            p.add_argument("--mode", choices=sorted(eh.MODES), help="exact: substep 1, realistic: substep 10")

    p = sub.add_parser("truth", help="write the analytic VARX model of the substructure")
    common(p, seed=False)
    p.set_defaults(func=cmd_truth)

    p = sub.add_parser("simulate", help="simulate the chain and write a displacement CSV")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate the substructure VARX model from a CSV")
    p.add_argument("csv", help="displacement CSV (t,z1,...,zN)")
    common(p, mode=False)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("analyze", help="damage report of a model against a healthy baseline")
    p.add_argument("current", help="current VARX model JSON")
    p.add_argument("baseline", help="healthy baseline VARX model JSON")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--threshold", type=float, help="damage indicator threshold")
    group.add_argument("--calibration", help="JSON with 'threshold' or 'healthy_indicators'")
    common(p, seed=False, mode=False)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("suite", help="run the full healthy + damaged scenario grid")
    common(p)
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ScenarioError as exc:
        return _fail(exc.cause, f"scenario {exc.scenario}: ")
    except VarxShmError as exc:
        return _fail(exc)
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error: invalid configuration: {exc!r}", file=sys.stderr)
        return EXIT_CONFIG


def _fail(exc: Exception, prefix: str = "") -> int:
    print(f"error: {prefix}{exc}", file=sys.stderr)
    if isinstance(exc, StabilityViolation):
        return EXIT_STABILITY
    if isinstance(exc, EstimationError):
        return EXIT_ESTIMATION
    if isinstance(exc, ValidationError):
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
