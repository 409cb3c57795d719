# app/trainer/trajectory.py
from functools import singledispatch
from typing import Any, Optional, Sequence, Tuple

import numpy as np

from common.api_error import DomainError, ShapeMismatchError
from app.schemas import (
    EvalRecord,
    GuessStats,
    SeriesSummary,
    TrainTrajectory,
    TrajectorySummary,
)


def dominant_permutation(fractions: Sequence[float]) -> Tuple[int, ...]:
    """Classes ordered by decreasing fraction; ties keep the lower index first."""
    return tuple(int(i) for i in np.argsort(-np.asarray(fractions), kind="stable"))


def _take(values: Optional[Sequence[float]], order: Sequence[int]) -> Optional[Tuple[float, ...]]:
    return None if values is None else tuple(values[k] for k in order)


@singledispatch
def relabel_dominant(view: Any) -> Any:
    """
    Permute classes so class 0 is the initially most-predicted class.

    Accepts a TrainTrajectory (every per-class series is permuted with the
    same permutation, taken from the first record) or a GuessStats.
    """
    raise TypeError(f"cannot relabel {type(view).__name__}")


@relabel_dominant.register
def _(view: GuessStats) -> GuessStats:
    order = dominant_permutation(view.fractions)
    return GuessStats(counts=tuple(view.counts[k] for k in order))


@relabel_dominant.register
def _(view: TrainTrajectory) -> TrainTrajectory:
    order = dominant_permutation(view.initial.guess_fractions)
    records = tuple(
        r.model_copy(
            update={
                "train_class_accuracy": _take(r.train_class_accuracy, order),
                "guess_fractions": _take(r.guess_fractions, order),
                "test_class_accuracy": _take(r.test_class_accuracy, order),
            }
        )
        for r in view.records
    )
    return TrainTrajectory(
        records=records,
        class_priors=_take(view.class_priors, order),
        test_class_priors=_take(view.test_class_priors, order),
        permutation=tuple(view.permutation[k] for k in order),
        relabeled=True,
        seed=view.seed,
    )


def bias_trajectory(trajectory: TrainTrajectory) -> Tuple[float, ...]:
    """max_c G_c at every recorded step."""
    return tuple(r.max_guess_fraction for r in trajectory.records)


def convergence_time(trajectory: TrainTrajectory, level: float = 0.6) -> Optional[int]:
    """First recorded step whose global train accuracy reaches ``level``; None if never."""
    if not 0 < level <= 1:
        raise DomainError("level must lie in (0, 1]", argument="level", value=level)
    for record in trajectory.records:
        if record.train_accuracy >= level:
            return record.step
    return None


def _record_series(record: EvalRecord) -> dict[str, float]:
    series = {
        "loss": record.loss,
        "acc_global_train": record.train_accuracy,
        "max_guess_fraction": record.max_guess_fraction,
    }
    for c, acc in enumerate(record.train_class_accuracy):
        series[f"acc_class_{c}_train"] = acc
    if record.test_accuracy is not None:
        series["acc_global_test"] = record.test_accuracy
    for c, acc in enumerate(record.test_class_accuracy or ()):
        series[f"acc_class_{c}_test"] = acc
    return series


def trajectory_table(trajectory: TrainTrajectory) -> Tuple[list[str], list[list[Any]]]:
    """CSV header and rows: step, loss, global and per-class accuracies, max guess fraction."""
    num_classes = trajectory.num_classes
    header = ["step", "loss", "acc_global_train"]
    header += [f"acc_class_{c}_train" for c in range(num_classes)]
    header += ["acc_global_test"] + [f"acc_class_{c}_test" for c in range(num_classes)]
    header.append("max_guess_fraction")
    rows = []
    for record in trajectory.records:
        series = _record_series(record)
        rows.append([record.step] + [series.get(name) for name in header[1:]])
    return header, rows


def aggregate_trajectories(trajectories: Sequence[TrainTrajectory]) -> TrajectorySummary:
    """
    Mean and standard error across runs of every series, per step.

    Raises:
        DomainError: no trajectories
        ShapeMismatchError: runs recorded at different steps
    """
    if not trajectories:
        raise DomainError("nothing to aggregate", argument="trajectories", value=0)
    steps = trajectories[0].steps
    for t in trajectories[1:]:
        if t.steps != steps:
            raise ShapeMismatchError(
                "trajectories recorded at different steps", expected=steps, actual=t.steps
            )

    tables = [[_record_series(r) for r in t.records] for t in trajectories]
    names = [n for n in tables[0][0] if all(n in table[0] for table in tables)]
    n_runs = len(trajectories)
    series = {}
    for name in names:
        values = np.array([[row[name] for row in table] for table in tables])
        se = values.std(axis=0, ddof=1) / np.sqrt(n_runs) if n_runs > 1 else np.zeros(len(steps))
        series[name] = SeriesSummary(
            mean=tuple(float(v) for v in values.mean(axis=0)),
            se=tuple(float(v) for v in se),
        )
    return TrajectorySummary(steps=steps, n_runs=n_runs, series=series)


__all__ = [
    "dominant_permutation",
    "relabel_dominant",
    "bias_trajectory",
    "convergence_time",
    "trajectory_table",
    "aggregate_trajectories",
]
