# app/metrics/filtering.py
from typing import Optional

from app.schemas import EnsembleResult, FilterResult, FilterThresholds, Regime


def classify_guess(
    top_fraction: float, num_classes: int, thresholds: FilterThresholds = FilterThresholds()
) -> Regime:
    """Regime of one initialization from its largest class fraction G-hat_0."""
    if abs(top_fraction - 1.0 / num_classes) <= thresholds.neutral_halfwidth:
        return Regime.NEUTRAL
    if top_fraction >= thresholds.deep_threshold:
        return Regime.DEEP_PREJUDICE
    return Regime.WEAK_PREJUDICE


def filter_initializations(
    samples: EnsembleResult, thresholds: Optional[FilterThresholds] = None
) -> FilterResult:
    """Split ensemble seeds into neutral / weakly / deeply prejudiced groups."""
    thresholds = thresholds or FilterThresholds()
    groups: dict[Regime, list[int]] = {r: [] for r in Regime}
    for seed, stats in zip(samples.seeds, samples.guess_stats):
        groups[classify_guess(stats.top_fraction, stats.num_classes, thresholds)].append(seed)
    return FilterResult(
        neutral=tuple(groups[Regime.NEUTRAL]),
        weak_prejudice=tuple(groups[Regime.WEAK_PREJUDICE]),
        deep_prejudice=tuple(groups[Regime.DEEP_PREJUDICE]),
        thresholds=thresholds,
    )


__all__ = ["classify_guess", "filter_initializations"]
