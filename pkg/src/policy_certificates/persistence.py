"""
JSON persistence for instances, learner checkpoints, audit records and reports.

All files are UTF-8 JSON with a ``schema_version`` field (JSONL record files
carry it in their report). Arrays are stored as row-major nested lists and
keys are written in sorted order, so equal content gives byte-identical files.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Union

import numpy as np

from .exceptions import ReportSchemaError, StorageError
from .generators import ConstantContextSampler, DirichletContextSampler
from .harness import IpocReport, RunRecord
from .least_squares import LsqStats
from .stats import VisitStats
from .types import ContextSampler, ContextualLinearMdp, RewardNoise, TabularMdp

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

PathLike = Union[str, Path]


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def dumps(data: Any, indent: Union[int, None] = 2) -> str:
    """Deterministic JSON encoding used for every file written by the package."""
    return json.dumps(data, indent=indent, sort_keys=True, ensure_ascii=False, default=_json_default)


def _write_json(data: Dict[str, Any], file_path: PathLike, operation: str) -> None:
    try:
        payload = dict(data)
        payload["schema_version"] = SCHEMA_VERSION
        path = Path(file_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(dumps(payload))
            f.write("\n")
        logger.info(f"Wrote {path}")
    except Exception as e:
        raise StorageError(
            f"Failed to write {file_path}: {e}", operation=operation, original_error=e
        ) from e


def _read_json(file_path: PathLike, operation: str, kind: str) -> Dict[str, Any]:
    try:
        with open(file_path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except Exception as e:
        raise StorageError(
            f"Failed to read {file_path}: {e}", operation=operation, original_error=e
        ) from e
    if not isinstance(data, dict) or data.get("kind") != kind:
        found = data.get("kind") if isinstance(data, dict) else type(data).__name__
        raise StorageError(f"{file_path} does not hold a {kind} (found {found!r})", operation=operation)
    if data.get("schema_version") != SCHEMA_VERSION:
        raise StorageError(
            f"{file_path} has schema version {data.get('schema_version')!r}, "
            f"expected {SCHEMA_VERSION}",
            operation=operation,
        )
    return data


def _sampler_to_dict(sampler: ContextSampler) -> Dict[str, Any]:
    return sampler.describe()


def _sampler_from_dict(data: Dict[str, Any]) -> ContextSampler:
    if data["kind"] == "constant":
        return ConstantContextSampler(data["value"])
    if data["kind"] == "dirichlet":
        return DirichletContextSampler([(start, alpha) for start, alpha in data["schedule"]])
    raise ValueError(f"unknown context sampler kind {data['kind']!r}")


def save_tabular_mdp(mdp: TabularMdp, file_path: PathLike) -> None:
    """
    Save a tabular MDP.

    Raises:
        StorageError: If the file cannot be written
    """
    _write_json(
        {
            "kind": "tabular_mdp",
            "transitions": mdp.transitions,
            "rewards": mdp.rewards,
            "horizon": mdp.horizon,
            "reward_noise": mdp.reward_noise.value,
            "initial_state": mdp.initial_state,
            "initial_distribution": mdp.initial_distribution,
            "metadata": mdp.metadata,
        },
        file_path,
        "save_tabular_mdp",
    )


def load_tabular_mdp(file_path: PathLike) -> TabularMdp:
    """
    Load a tabular MDP saved by ``save_tabular_mdp``.

    Raises:
        StorageError: If the file is unreadable or holds something else
    """
    data = _read_json(file_path, "load_tabular_mdp", "tabular_mdp")
    try:
        distribution = data.get("initial_distribution")
        return TabularMdp(
            transitions=np.array(data["transitions"], dtype=float),
            rewards=np.array(data["rewards"], dtype=float),
            horizon=int(data["horizon"]),
            reward_noise=RewardNoise(data["reward_noise"]),
            initial_state=int(data["initial_state"]),
            initial_distribution=None if distribution is None else np.array(distribution),
            metadata=data.get("metadata", {}),
        )
    except (KeyError, ValueError, TypeError) as e:
        raise StorageError(
            f"Malformed tabular MDP in {file_path}: {e}",
            operation="load_tabular_mdp",
            original_error=e,
        ) from e


def save_contextual_mdp(cmdp: ContextualLinearMdp, file_path: PathLike) -> None:
    """
    Save a contextual MDP including its context samplers.

    Raises:
        StorageError: If the file cannot be written
    """
    _write_json(
        {
            "kind": "contextual_mdp",
            "theta_r": cmdp.theta_r,
            "theta_p": cmdp.theta_p,
            "horizon": cmdp.horizon,
            "context_r": _sampler_to_dict(cmdp.context_r),
            "context_p": _sampler_to_dict(cmdp.context_p),
            "xi_theta_r": cmdp.xi_theta_r,
            "xi_theta_p": cmdp.xi_theta_p,
            "xi_x_r": cmdp.xi_x_r,
            "xi_x_p": cmdp.xi_x_p,
            "reward_noise": cmdp.reward_noise.value,
            "initial_state": cmdp.initial_state,
            "initial_distribution": cmdp.initial_distribution,
            "metadata": cmdp.metadata,
        },
        file_path,
        "save_contextual_mdp",
    )


def load_contextual_mdp(file_path: PathLike) -> ContextualLinearMdp:
    """
    Load a contextual MDP saved by ``save_contextual_mdp``.

    Raises:
        StorageError: If the file is unreadable or holds something else
    """
    data = _read_json(file_path, "load_contextual_mdp", "contextual_mdp")
    try:
        distribution = data.get("initial_distribution")
        return ContextualLinearMdp(
            theta_r=np.array(data["theta_r"], dtype=float),
            theta_p=np.array(data["theta_p"], dtype=float),
            horizon=int(data["horizon"]),
            context_r=_sampler_from_dict(data["context_r"]),
            context_p=_sampler_from_dict(data["context_p"]),
            xi_theta_r=float(data["xi_theta_r"]),
            xi_theta_p=float(data["xi_theta_p"]),
            xi_x_r=float(data["xi_x_r"]),
            xi_x_p=float(data["xi_x_p"]),
            reward_noise=RewardNoise(data["reward_noise"]),
            initial_state=int(data["initial_state"]),
            initial_distribution=None if distribution is None else np.array(distribution),
            metadata=data.get("metadata", {}),
        )
    except (KeyError, ValueError, TypeError) as e:
        raise StorageError(
            f"Malformed contextual MDP in {file_path}: {e}",
            operation="load_contextual_mdp",
            original_error=e,
        ) from e


def save_visit_stats(stats: VisitStats, file_path: PathLike, episode: int = 0) -> None:
    """Checkpoint tabular statistics after ``episode`` episodes."""
    _write_json(
        {
            "kind": "visit_stats",
            "episode": int(episode),
            "counts": stats.counts,
            "reward_mean": stats.reward_mean,
            "transition_mean": stats.transition_mean,
            "horizon": stats.horizon,
        },
        file_path,
        "save_visit_stats",
    )


def load_visit_stats(file_path: PathLike) -> VisitStats:
    data = _read_json(file_path, "load_visit_stats", "visit_stats")
    try:
        return VisitStats(
            counts=np.array(data["counts"], dtype=np.int64),
            reward_mean=np.array(data["reward_mean"], dtype=float),
            transition_mean=np.array(data["transition_mean"], dtype=float),
            horizon=int(data["horizon"]),
        )
    except (KeyError, ValueError, TypeError) as e:
        raise StorageError(
            f"Malformed statistics in {file_path}: {e}",
            operation="load_visit_stats",
            original_error=e,
        ) from e


def save_lsq_stats(stats: LsqStats, file_path: PathLike, episode: int = 0) -> None:
    """Checkpoint least-squares statistics after ``episode`` episodes."""
    _write_json(
        {
            "kind": "lsq_stats",
            "episode": int(episode),
            "gram_r": stats.gram_r,
            "gram_p": stats.gram_p,
            "target_r": stats.target_r,
            "target_p": stats.target_p,
            "lam": stats.lam,
        },
        file_path,
        "save_lsq_stats",
    )


def load_lsq_stats(file_path: PathLike) -> LsqStats:
    data = _read_json(file_path, "load_lsq_stats", "lsq_stats")
    try:
        return LsqStats(
            gram_r=np.array(data["gram_r"], dtype=float),
            gram_p=np.array(data["gram_p"], dtype=float),
            target_r=np.array(data["target_r"], dtype=float),
            target_p=np.array(data["target_p"], dtype=float),
            lam=float(data["lam"]),
        )
    except (KeyError, ValueError, TypeError) as e:
        raise StorageError(
            f"Malformed statistics in {file_path}: {e}",
            operation="load_lsq_stats",
            original_error=e,
        ) from e


def checkpoint_episode(file_path: PathLike) -> int:
    """Number of episodes folded into a saved checkpoint."""
    try:
        with open(file_path, "r", encoding="utf-8") as f:
            return int(json.load(f).get("episode", 0))
    except Exception as e:
        raise StorageError(
            f"Failed to read checkpoint {file_path}: {e}",
            operation="checkpoint_episode",
            original_error=e,
        ) from e


def write_records(records: Iterable[RunRecord], file_path: PathLike) -> int:
    """
    Write audit records as JSON lines.

    Returns:
        Number of records written

    Raises:
        StorageError: If the file cannot be written
    """
    count = 0
    try:
        path = Path(file_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            for record in records:
                f.write(dumps(record.to_dict(), indent=None))
                f.write("\n")
                count += 1
    except Exception as e:
        raise StorageError(
            f"Failed to write records to {file_path}: {e}",
            operation="write_records",
            original_error=e,
        ) from e
    logger.info(f"Wrote {count} record(s) to {file_path}")
    return count


def iter_records(file_path: PathLike) -> Iterator[RunRecord]:
    """
    Stream audit records from a JSON lines file.

    Raises:
        StorageError: If the file is unreadable or a line is malformed
    """
    try:
        with open(file_path, "r", encoding="utf-8") as f:
            for line_number, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    yield RunRecord.from_dict(json.loads(line))
                except (KeyError, ValueError, TypeError) as e:
                    raise StorageError(
                        f"Malformed record on line {line_number} of {file_path}: {e}",
                        operation="read_records",
                        original_error=e,
                    ) from e
    except OSError as e:
        raise StorageError(
            f"Failed to read records from {file_path}: {e}",
            operation="read_records",
            original_error=e,
        ) from e


def read_records(file_path: PathLike) -> List[RunRecord]:
    return list(iter_records(file_path))


def save_report(report: IpocReport, file_path: PathLike) -> None:
    """Write a run report; ``kind`` and ``schema_version`` are added."""
    data = report.to_dict()
    data["kind"] = "ipoc_report"
    _write_json(data, file_path, "save_report")


def load_report(file_path: PathLike) -> IpocReport:
    """
    Load a run report.

    Raises:
        StorageError: If the file cannot be read
        ReportSchemaError: If the file is not a report of the current schema
    """
    try:
        with open(file_path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except Exception as e:
        raise StorageError(
            f"Failed to read report {file_path}: {e}",
            operation="load_report",
            original_error=e,
        ) from e
    if not isinstance(data, dict) or data.get("kind") != "ipoc_report":
        raise ReportSchemaError(f"{file_path} is not a run report", file_path=str(file_path))
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ReportSchemaError(
            f"{file_path} has schema version {data.get('schema_version')!r}, "
            f"expected {SCHEMA_VERSION}",
            file_path=str(file_path),
        )
    try:
        return IpocReport.from_dict(data)
    except (KeyError, ValueError, TypeError) as e:
        raise ReportSchemaError(
            f"{file_path} is missing report fields: {e}", file_path=str(file_path)
        ) from e
