import json
from dataclasses import replace

import numpy as np
import pytest

from varx_shm.cli import main, report_document
from varx_shm.experiment_harness import BASELINE_SEED_OFFSET, estimate_for, paper_suite, run_scenario
from varx_shm.simulator import DisplacementRecord
from varx_shm.structure_model import SubstructureSpec, VarxModel, ground_truth_varx


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def short_config(tmp_path):
    return write_json(tmp_path / "short.json", {"sim": {"duration": 2.0}})


@pytest.fixture(scope="module")
def baseline_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "healthy.csv"
    assert main(["simulate", "--seed", "3", "--out", str(path)]) == 0
    return path


class TestTruth:
    def test_building_defaults(self, tmp_path, chain, spec):
        out = tmp_path / "truth.json"
        assert main(["truth", "--out", str(out)]) == 0
        model = VarxModel.from_dict(json.loads(out.read_text()))
        assert model.a1[0, 0] == pytest.approx(1.98, rel=1e-15)
        assert model == ground_truth_varx(chain, spec, 1e-3)

    def test_stdout(self, capsys):
        assert main(["truth"]) == 0
        assert json.loads(capsys.readouterr().out)["endogenous_labels"] == [3, 4, 5]

    def test_zero_mass(self, tmp_path, capsys):
        cfg = write_json(tmp_path / "c.json", {"chain": {"masses": [100, 100, 0, 100], "stiffnesses": [1e6] * 4},
                                                "substructure": {"lower_interface": 1, "upper_interface": 4}})
        assert main(["truth", "--config", cfg]) == 2
        assert "masses[" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        assert main(["truth", "--config", str(tmp_path / "nope.json")]) == 2

    def test_unknown_field(self, tmp_path):
        assert main(["truth", "--config", write_json(tmp_path / "c.json", {"chains": {}})]) == 2


class TestSimulate:
    def test_shape_and_meta(self, tmp_path):
        out = tmp_path / "d.csv"
        assert main(["simulate", "--seed", "5", "--out", str(out)]) == 0
        rec = DisplacementRecord.read_csv(out)
        assert rec.data.shape == (20_001, 8)
        meta = json.loads((tmp_path / "d.csv.meta.json").read_text())
        assert meta["seed"] == 5

    def test_same_seed_byte_identical(self, tmp_path, short_config):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            assert main(["simulate", "--config", short_config, "--seed", "8", "--out", str(p)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_unstable_step(self, tmp_path, capsys):
        cfg = write_json(tmp_path / "c.json", {"sim": {"ts": 0.01, "duration": 1.0}})
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == 3
        assert "substep_ratio" in capsys.readouterr().err


class TestEstimate:
    def test_matches_truth(self, tmp_path, baseline_csv, chain, spec):
        out = tmp_path / "m.json"
        assert main(["estimate", str(baseline_csv), "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        model = VarxModel.from_dict(doc)
        truth = ground_truth_varx(chain, spec, 1e-3)
        assert np.abs(model.coefficients - truth.coefficients).max() <= 1e-8
        assert doc["diagnostics"]["samples_used"] == 19_999
        assert doc["provenance"] == {"source": str(baseline_csv), "seed": 3}

    def test_too_few_rows(self, tmp_path):
        csv = tmp_path / "tiny.csv"
        rows = ["t," + ",".join(f"z{i}" for i in range(1, 9))]
        rng = np.random.default_rng(0)
        rows += [",".join(f"{v:.6e}" for v in [k * 1e-3, *rng.standard_normal(8)]) for k in range(4)]
        csv.write_text("\n".join(rows) + "\n")
        assert main(["estimate", str(csv)]) == 4

    def test_missing_column(self, tmp_path, baseline_csv):
        rec = DisplacementRecord.read_csv(baseline_csv)
        cut = tmp_path / "cut.csv"
        DisplacementRecord(rec.data[:, :5], rec.dt, rec.dof_labels[:5]).write_csv(cut)
        assert main(["estimate", str(cut)]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["estimate", str(tmp_path / "none.csv")]) == 2


class TestAnalyze:
    def test_baseline_against_itself(self, tmp_path, baseline_csv, capsys):
        model = tmp_path / "m.json"
        main(["estimate", str(baseline_csv), "--out", str(model)])
        assert main(["analyze", str(model), str(model), "--threshold", "1e-6"]) == 0
        assert json.loads(capsys.readouterr().out)["verdict"] == "healthy"

    def test_exact_damage_localized(self, tmp_path, baseline_csv, capsys):
        dmg = tmp_path / "dmg.csv"
        cfg = write_json(tmp_path / "c.json", {"damage": {"spring": 4, "severity": 0.1}})
        assert main(["simulate", "--config", cfg, "--seed", "11", "--out", str(dmg)]) == 0
        cur, base = tmp_path / "cur.json", tmp_path / "base.json"
        main(["estimate", str(dmg), "--out", str(cur)])
        assert main(["truth", "--out", str(base)]) == 0
        cal = write_json(tmp_path / "cal.json", {"threshold": 1e-6})
        assert main(["analyze", str(cur), str(base), "--calibration", cal]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["verdict"] == "damaged" and doc["spring"] == "k4"
        assert doc["severity"] == pytest.approx(0.10, abs=1e-6)

    def test_dimension_mismatch(self, tmp_path, chain):
        a = write_json(tmp_path / "a.json", ground_truth_varx(chain, SubstructureSpec(2, 6), 1e-3).to_dict())
        b = write_json(tmp_path / "b.json", ground_truth_varx(chain, SubstructureSpec(2, 5), 1e-3).to_dict())
        assert main(["analyze", a, b, "--threshold", "1e-6"]) == 2

    def test_needs_threshold(self, tmp_path, chain, spec):
        a = write_json(tmp_path / "a.json", ground_truth_varx(chain, spec, 1e-3).to_dict())
        assert main(["analyze", a, a]) == 2


class TestSuite:
    def test_exact(self, tmp_path, capsys):
        assert main(["suite", "--mode", "exact", "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "suite_table.csv").read_text().count("\n") == 20
        report = json.loads((tmp_path / "o" / "suite_report.json").read_text())
        assert report["metadata"]["passed"] == 19
        assert "19/19" in capsys.readouterr().err

    @pytest.mark.slow
    def test_realistic(self, tmp_path):
        assert main(["suite", "--mode", "realistic", "--out", str(tmp_path / "o")]) == 0

    def test_wrong_expectation_fails(self, tmp_path):
        cfg = write_json(tmp_path / "c.json", {"suite": {
            "springs": [4], "severities": [0.1],
            "expected_overrides": {"k4-0.10": {"verdict": "healthy", "spring": None}}}})
        assert main(["suite", "--config", cfg]) == 1

    def test_unknown_override(self, tmp_path):
        cfg = write_json(tmp_path / "c.json", {"suite": {"expected_overrides": {"k9-0.10": {}}}})
        assert main(["suite", "--config", cfg]) == 2


def test_pipeline_matches_in_process(tmp_path, exact_suite):
    """simulate -> estimate -> analyze through files equals the harness report byte for byte."""
    scenario = next(s for s in paper_suite(0, "exact") if s.name == "k5-0.20")
    tau = exact_suite.metadata["threshold"]

    dmg_cfg = write_json(tmp_path / "dmg.json", {"damage": {"spring": 5, "severity": 0.2}})
    files = {}
    for name, cfg, seed in (("cur", dmg_cfg, scenario.seed), ("base", None, BASELINE_SEED_OFFSET)):
        csv = tmp_path / f"{name}.csv"
        extra = ["--config", cfg] if cfg else []
        assert main(["simulate", *extra, "--seed", str(seed), "--out", str(csv)]) == 0
        files[name] = tmp_path / f"{name}.json"
        assert main(["estimate", str(csv), "--out", str(files[name])]) == 0
    out = tmp_path / "report.json"
    assert main(["analyze", str(files["cur"]), str(files["base"]), "--threshold", repr(tau), "--out", str(out)]) == 0

    baseline, _ = estimate_for(
        scenario.chain, scenario.spec, replace(scenario.sim, seed=BASELINE_SEED_OFFSET), scenario.excitation_dof
    )
    expected = report_document(run_scenario(scenario, baseline, tau).report)
    assert out.read_text() == expected
