"""
Config-driven experiment execution.

For every seed: generate the instance, run the learner, audit each
certificate on the episode's true MDP, write the kept records as JSONL and
the run report as JSON. Seeds are independent and may run in parallel.
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .config import EnvironmentSpec, ExperimentConfig
from .exceptions import ReportSchemaError, StorageError
from .generators import gen_bandit, gen_random_contextual, gen_random_tabular, shift_schedule
from .harness import AuditColumns, IpocReport, RunRecord, aggregate_columns, audit_outcome
from .least_squares import LsqStats
from .mdp import realize_context, solve_exact
from .orlc import run_orlc
from .orlc_si import run_orlc_si
from .persistence import (
    dumps,
    load_report,
    read_records,
    save_contextual_mdp,
    save_lsq_stats,
    save_report,
    save_tabular_mdp,
    save_visit_stats,
    write_records,
)
from .stats import VisitStats
from .types import Certificate, ContextualLinearMdp, EpisodeOutcome, PlanningResult, TabularMdp

logger = logging.getLogger(__name__)

Instance = Union[TabularMdp, ContextualLinearMdp]

EXIT_OK = 0
EXIT_VIOLATION = 1

SUMMARY_METRICS = (
    "episodes",
    "validity_violations",
    "gap_violations",
    "return_violations",
    "cumulative_certificates",
    "regret",
    "pearson_correlation",
    "mean_epsilon",
    "mean_gap",
    "max_gap",
    "final_epsilon",
)


def build_environment(spec: EnvironmentSpec, seed: int, tabular: bool = False) -> Instance:
    """
    Generate the benchmark instance of ``spec`` for one root seed.

    With ``tabular=True`` a bandit without context is returned as the
    TabularMdp of its constant context, the form the tabular learner runs on.
    """
    if spec.kind == "tabular":
        return gen_random_tabular(
            spec.n_states, spec.n_actions, spec.horizon, seed, reward_noise=spec.reward_noise
        )
    if spec.kind == "contextual":
        return gen_random_contextual(
            spec.n_states,
            spec.n_actions,
            spec.horizon,
            spec.dim_r,
            shift_schedule(spec.dim_r, spec.shift_episode),
            seed,
            reward_noise=spec.reward_noise,
        )
    bandit = gen_bandit(
        spec.n_actions, spec.dim_r, seed, contextual=spec.contextual, reward_noise=spec.reward_noise
    )
    if tabular and not spec.contextual:
        return realize_context(bandit, np.ones(1), np.ones(1))
    return bandit


@dataclass
class SeedResult:
    """Outputs of one seed."""
    seed: int
    report: IpocReport
    records_path: Path
    report_path: Path
    records_written: int


@dataclass
class ExperimentResult:
    """Outputs of all seeds of an experiment, in seed order."""
    config: ExperimentConfig
    seeds: List[SeedResult] = field(default_factory=list)

    @property
    def total_violations(self) -> int:
        return sum(result.report.validity_violations for result in self.seeds)

    @property
    def exit_code(self) -> int:
        return EXIT_VIOLATION if self.total_violations else EXIT_OK


def output_paths(config: ExperimentConfig, seed: int) -> Dict[str, Path]:
    base = Path(config.output_dir) / f"{config.name}-seed{seed}"
    return {
        "records": base.with_name(base.name + ".records.jsonl"),
        "report": base.with_name(base.name + ".report.json"),
        "instance": base.with_name(base.name + ".instance.json"),
        "checkpoint": base.with_name(base.name + ".checkpoint.json"),
    }


def keep_record(index: int, total: int, config: ExperimentConfig, record: RunRecord) -> bool:
    """Stride filter; violations and the first and last ``endpoint_window`` episodes are always kept."""
    if not record.valid:
        return True
    if index < config.endpoint_window or index >= total - config.endpoint_window:
        return True
    return index % config.stride == 0


def _collapse(outcome: EpisodeOutcome) -> EpisodeOutcome:
    upper = outcome.certificate.upper
    return replace(outcome, certificate=Certificate(lower=upper, upper=upper))


def _audited(
    outcomes: Iterator[EpisodeOutcome], fixed_planning: Optional[PlanningResult]
) -> Iterator[RunRecord]:
    cached_env: Optional[TabularMdp] = None
    cached_planning = fixed_planning
    for outcome in outcomes:
        if fixed_planning is None and outcome.environment is not cached_env:
            cached_env = outcome.environment
            cached_planning = solve_exact(cached_env, validate=False)
        yield audit_outcome(outcome, planning=cached_planning)


def run_seed(config: ExperimentConfig, seed: int) -> SeedResult:
    """
    Run, audit and persist one seed.

    Raises:
        StorageError: If an output file cannot be written
    """
    paths = output_paths(config, seed)
    instance = build_environment(config.environment, seed, tabular=config.algorithm.name == "orlc")
    learner = config.algorithm.learner_config()
    T = config.episodes
    logger.info(f"[{config.name}] seed {seed}: {T} episode(s) of {config.algorithm.name}")

    stats: Union[VisitStats, LsqStats]
    fixed_planning: Optional[PlanningResult] = None
    if isinstance(instance, TabularMdp):
        stats = VisitStats.empty(instance.n_states, instance.n_actions, instance.horizon)
        outcomes = run_orlc(instance, T, learner, rng=seed, stats=stats)
        # the value table of the fixed instance serves every start state
        fixed_planning = solve_exact(instance)
    else:
        stats = LsqStats.empty(
            instance.n_states, instance.n_actions, instance.dim_r, instance.dim_p, learner.lam
        )
        outcomes = run_orlc_si(instance, T, learner, rng=seed, stats=stats)
    if config.algorithm.collapse_certificates:
        outcomes = (_collapse(outcome) for outcome in outcomes)

    columns = AuditColumns.allocate(T)
    kept: List[RunRecord] = []
    for index, record in enumerate(_audited(outcomes, fixed_planning)):
        columns.set(index, record)
        if keep_record(index, T, config, record):
            kept.append(record)

    report = aggregate_columns(
        columns, config.thresholds, config.pac_levels, config.correlation_stride
    )
    report.metadata = {
        "name": config.name,
        "seed": int(seed),
        "environment_kind": config.environment.kind,
        "algorithm": config.algorithm.name,
        "n_states": instance.n_states,
        "n_actions": instance.n_actions,
        "horizon": instance.horizon,
    }
    written = write_records(kept, paths["records"])
    save_report(report, paths["report"])
    if config.checkpoint:
        if isinstance(instance, TabularMdp):
            save_tabular_mdp(instance, paths["instance"])
            save_visit_stats(stats, paths["checkpoint"], episode=T)
        else:
            save_contextual_mdp(instance, paths["instance"])
            save_lsq_stats(stats, paths["checkpoint"], episode=T)
    if report.validity_violations:
        logger.warning(
            f"[{config.name}] seed {seed}: {report.validity_violations} certificate violation(s)"
        )
    return SeedResult(
        seed=int(seed),
        report=report,
        records_path=paths["records"],
        report_path=paths["report"],
        records_written=written,
    )


def format_run_table(results: Sequence[SeedResult]) -> str:
    header = (
        f"{'seed':>6} {'episodes':>9} {'violations':>10} {'sum eps':>12} "
        f"{'regret':>12} {'corr':>7} {'final eps':>10}"
    )
    lines = [header, "-" * len(header)]
    for result in results:
        report = result.report
        lines.append(
            f"{result.seed:>6} {report.episodes:>9} {report.validity_violations:>10} "
            f"{report.cumulative_certificates:>12.4g} {report.regret:>12.4g} "
            f"{report.pearson_correlation:>7.3f} {report.final_epsilon:>10.4g}"
        )
    return "\n".join(lines)


def run_experiment(config: ExperimentConfig, echo: bool = True) -> ExperimentResult:
    """
    Run every seed of ``config`` and write their records and reports.

    Args:
        config: Resolved experiment configuration
        echo: Print the per-seed summary table to stdout

    Returns:
        ExperimentResult; ``exit_code`` is 1 if any certificate was violated
    """
    try:
        Path(config.output_dir).mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise StorageError(
            f"Cannot create output directory {config.output_dir}: {e}",
            operation="run_experiment",
            original_error=e,
        ) from e
    if config.n_jobs == 1 or len(config.seeds) == 1:
        results = [run_seed(config, seed) for seed in config.seeds]
    else:
        results = Parallel(n_jobs=config.n_jobs)(
            delayed(run_seed)(config, seed) for seed in config.seeds
        )
    outcome = ExperimentResult(config=config, seeds=list(results))
    if echo:
        print(format_run_table(outcome.seeds))
    logger.info(
        f"[{config.name}] finished {len(outcome.seeds)} seed(s), "
        f"{outcome.total_violations} violation(s)"
    )
    return outcome


def _metric_stats(values: Sequence[float]) -> Dict[str, Any]:
    array = np.asarray(values, dtype=float)
    return {
        "mean": float(array.mean()),
        "min": float(array.min()),
        "max": float(array.max()),
        "count": int(array.size),
    }


def summarize(report_files: Sequence[Union[str, Path]]) -> Dict[str, Any]:
    """
    Cross-seed mean, min and max of every report metric.

    Threshold-keyed metrics appear as ``mistakes@tau``, ``precision@tau`` and
    ``pac@eps``; seeds where a value is undefined are left out of its statistics.

    Raises:
        StorageError: If a report cannot be read
        ReportSchemaError: If reports are malformed or mix environment kinds
    """
    if not report_files:
        raise ReportSchemaError("no report files given")
    reports = [load_report(path) for path in report_files]
    kinds = {report.metadata.get("environment_kind") for report in reports}
    if len(kinds) != 1:
        raise ReportSchemaError(
            f"reports mix environment kinds: {', '.join(sorted(str(kind) for kind in kinds))}",
            file_path=str(report_files[-1]),
        )

    values: Dict[str, List[float]] = {metric: [] for metric in SUMMARY_METRICS}
    for report in reports:
        for metric in SUMMARY_METRICS:
            values[metric].append(float(getattr(report, metric)))
        for prefix, mapping in (
            ("mistakes", report.mistake_counts),
            ("precision", report.intervention_precision),
            ("pac", report.pac_times),
        ):
            for key, value in mapping.items():
                bucket = values.setdefault(f"{prefix}@{key:g}", [])
                if value is not None:
                    bucket.append(float(value))

    metrics = {name: _metric_stats(series) for name, series in values.items() if series}
    undefined = [name for name, series in values.items() if not series]
    return {
        "reports": len(reports),
        "environment_kind": kinds.pop(),
        "metrics": metrics,
        "undefined": undefined,
    }


def format_summary_table(summary: Dict[str, Any]) -> str:
    header = f"{'metric':<28} {'mean':>12} {'min':>12} {'max':>12} {'n':>4}"
    lines = [
        f"{summary['reports']} report(s), environment {summary['environment_kind']}",
        header,
        "-" * len(header),
    ]
    for name, stats in summary["metrics"].items():
        lines.append(
            f"{name:<28} {stats['mean']:>12.6g} {stats['min']:>12.6g} "
            f"{stats['max']:>12.6g} {stats['count']:>4}"
        )
    for name in summary["undefined"]:
        lines.append(f"{name:<28} {'undefined':>12}")
    return "\n".join(lines)


def summary_json(summary: Dict[str, Any]) -> str:
    return dumps(summary)


def export_csv(records_file: Union[str, Path], csv_file: Union[str, Path]) -> int:
    """
    Convert a JSONL record file to CSV for plotting tools.

    Returns:
        Number of rows written

    Raises:
        StorageError: If reading or writing fails
    """
    records = read_records(records_file)
    columns = list(RunRecord.__dataclass_fields__) + ["valid"]
    frame = pd.DataFrame([record.to_dict() for record in records], columns=columns)
    try:
        Path(csv_file).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(csv_file, index=False)
    except OSError as e:
        raise StorageError(
            f"Failed to write {csv_file}: {e}", operation="export_csv", original_error=e
        ) from e
    logger.info(f"Exported {len(frame)} record(s) to {csv_file}")
    return len(frame)
