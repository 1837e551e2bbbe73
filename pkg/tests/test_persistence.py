"""
Tests for JSON persistence of instances, checkpoints, records and reports.
"""

import json
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np
import pytest

from policy_certificates.exceptions import ReportSchemaError, StorageError
from policy_certificates.generators import gen_bandit, gen_random_contextual, gen_random_tabular, shift_schedule
from policy_certificates.harness import RunRecord, aggregate
from policy_certificates.least_squares import LsqStats
from policy_certificates.orlc import run_orlc
from policy_certificates.orlc_si import run_orlc_si
from policy_certificates.persistence import (
    SCHEMA_VERSION,
    checkpoint_episode,
    iter_records,
    load_contextual_mdp,
    load_lsq_stats,
    load_report,
    load_tabular_mdp,
    load_visit_stats,
    read_records,
    save_contextual_mdp,
    save_lsq_stats,
    save_report,
    save_tabular_mdp,
    save_visit_stats,
    write_records,
)
from policy_certificates.stats import VisitStats


def sample_records(count=5):
    return [
        RunRecord(
            k=k,
            epsilon=1.0 / k,
            interval_lo=0.2,
            interval_hi=0.2 + 1.0 / k,
            gap=0.1 / k,
            policy_return=0.3,
            optimal_return=0.3 + 0.1 / k,
            realized_reward=float(k % 2),
            context_tag="segment-0",
        )
        for k in range(1, count + 1)
    ]


class TestInstances:
    """Test saving and loading MDP instances."""

    def test_tabular_mdp(self):
        """Test a tabular MDP survives saving and loading."""
        mdp = gen_random_tabular(4, 3, 5, seed=2)
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "instance.json"
            save_tabular_mdp(mdp, path)
            loaded = load_tabular_mdp(path)
        assert np.array_equal(loaded.transitions, mdp.transitions)
        assert np.array_equal(loaded.rewards, mdp.rewards)
        assert loaded.horizon == 5
        assert loaded.reward_noise is mdp.reward_noise
        assert loaded.metadata["seed"] == 2

    def test_contextual_mdp(self):
        """Test a contextual MDP keeps its parameters and context schedule."""
        cmdp = gen_random_contextual(3, 2, 2, 4, shift_schedule(4, 50), seed=1)
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "instance.json"
            save_contextual_mdp(cmdp, path)
            loaded = load_contextual_mdp(path)
        assert np.array_equal(loaded.theta_r, cmdp.theta_r)
        assert np.array_equal(loaded.theta_p, cmdp.theta_p)
        assert loaded.context_r.describe() == cmdp.context_r.describe()
        assert loaded.context_r.segment_at(50) == 1
        assert loaded.xi_theta_r == pytest.approx(cmdp.xi_theta_r)

    def test_bandit_constant_context(self):
        """Test constant context samplers are restored."""
        cmdp = gen_bandit(5, 3, seed=0, contextual=False)
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "bandit.json"
            save_contextual_mdp(cmdp, path)
            loaded = load_contextual_mdp(path)
        assert loaded.context_r.describe() == {"kind": "constant", "value": [1.0]}

    def test_files_are_deterministic(self):
        """Test equal instances produce byte-identical files with a schema version."""
        with TemporaryDirectory() as tmp:
            first, second = Path(tmp) / "a.json", Path(tmp) / "b.json"
            save_tabular_mdp(gen_random_tabular(3, 2, 2, seed=5), first)
            save_tabular_mdp(gen_random_tabular(3, 2, 2, seed=5), second)
            assert first.read_bytes() == second.read_bytes()
            assert json.loads(first.read_text())["schema_version"] == SCHEMA_VERSION

    def test_wrong_kind(self):
        """Test loading a contextual file as tabular raises StorageError."""
        cmdp = gen_bandit(2, 2, seed=0)
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "bandit.json"
            save_contextual_mdp(cmdp, path)
            with pytest.raises(StorageError) as exc_info:
                load_tabular_mdp(path)
        assert exc_info.value.operation == "load_tabular_mdp"

    def test_missing_file(self):
        """Test a missing file raises StorageError with the cause chained."""
        with pytest.raises(StorageError) as exc_info:
            load_tabular_mdp("/nonexistent/instance.json")
        assert exc_info.value.original_error is not None

    def test_unwritable_location(self):
        """Test writing below a regular file raises StorageError."""
        with TemporaryDirectory() as tmp:
            blocker = Path(tmp) / "file"
            blocker.write_text("x")
            with pytest.raises(StorageError) as exc_info:
                save_tabular_mdp(gen_random_tabular(2, 2, 2, seed=0), blocker / "instance.json")
        assert exc_info.value.operation == "save_tabular_mdp"


class TestCheckpoints:
    """Test learner checkpoints."""

    def test_visit_stats_resume(self):
        """Test a run resumed from a checkpoint equals the uninterrupted run."""
        mdp = gen_random_tabular(3, 2, 3, seed=0)
        stats = VisitStats.empty(3, 2, 3)
        list(run_orlc(mdp, 40, rng=0, stats=stats))
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "stats.json"
            save_visit_stats(stats, path, episode=40)
            loaded = load_visit_stats(path)
            assert checkpoint_episode(path) == 40
        assert np.array_equal(loaded.counts, stats.counts)
        assert np.allclose(loaded.transition_mean, stats.transition_mean)
        assert np.allclose(loaded.reward_mean, stats.reward_mean)

    def test_lsq_stats(self):
        """Test least-squares statistics give the same estimates after reloading."""
        cmdp = gen_random_contextual(3, 2, 2, 4, shift_schedule(4, None), seed=0)
        stats = LsqStats.empty(3, 2, 4, 1, 1.0)
        list(run_orlc_si(cmdp, 30, rng=0, stats=stats))
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "lsq.json"
            save_lsq_stats(stats, path, episode=30)
            loaded = load_lsq_stats(path)
        assert loaded.lam == 1.0
        assert np.allclose(loaded.estimates()[0], stats.estimates()[0])
        assert np.allclose(loaded.log_determinants()[0], stats.log_determinants()[0])

    def test_missing_checkpoint(self):
        """Test reading a missing checkpoint raises StorageError."""
        with pytest.raises(StorageError):
            checkpoint_episode("/nonexistent/checkpoint.json")


class TestRecords:
    """Test JSONL audit records."""

    def test_write_and_read(self):
        """Test records are written one per line and read back."""
        records = sample_records()
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "run.records.jsonl"
            assert write_records(records, path) == 5
            lines = path.read_text().splitlines()
            assert len(lines) == 5
            assert json.loads(lines[0])["valid"] is True
            assert read_records(path) == records

    def test_iter_records_streams(self):
        """Test records can be consumed lazily."""
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "run.records.jsonl"
            write_records(sample_records(3), path)
            iterator = iter_records(path)
            assert next(iterator).k == 1
            assert [r.k for r in iterator] == [2, 3]

    def test_malformed_line(self):
        """Test a malformed line names its line number."""
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.jsonl"
            path.write_text('{"k": 1}\n')
            with pytest.raises(StorageError) as exc_info:
                read_records(path)
        assert "line 1" in str(exc_info.value)


class TestReports:
    """Test report files."""

    def test_save_and_load(self):
        """Test a report survives saving and loading."""
        report = aggregate(sample_records())
        report.metadata["seed"] = 3
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "run.report.json"
            save_report(report, path)
            loaded = load_report(path)
        assert loaded == report

    def test_not_a_report(self):
        """Test other files raise ReportSchemaError."""
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "instance.json"
            save_tabular_mdp(gen_random_tabular(2, 2, 2, seed=0), path)
            with pytest.raises(ReportSchemaError):
                load_report(path)

    def test_wrong_schema_version(self):
        """Test reports of another schema version are rejected."""
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "run.report.json"
            save_report(aggregate(sample_records()), path)
            data = json.loads(path.read_text())
            data["schema_version"] = SCHEMA_VERSION + 1
            path.write_text(json.dumps(data))
            with pytest.raises(ReportSchemaError) as exc_info:
                load_report(path)
        assert exc_info.value.file_path == str(path)

    def test_missing_fields(self):
        """Test reports without required fields are rejected."""
        with TemporaryDirectory() as tmp:
            path = Path(tmp) / "run.report.json"
            path.write_text(json.dumps({"kind": "ipoc_report", "schema_version": SCHEMA_VERSION}))
            with pytest.raises(ReportSchemaError):
                load_report(path)
