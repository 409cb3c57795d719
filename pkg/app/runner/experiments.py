# app/runner/experiments.py
"""
Experiment kinds.

Each runner writes its CSVs through a ResultWriter and returns the payload
of ``results.json`` together with the seeds and design decisions the
manifest records. Runs inside an experiment are merged in seed order, so
output does not depend on the thread count.
"""

from pathlib import Path
from typing import Any, Callable, NamedTuple, Optional

import numpy as np
from structlog.contextvars import bound_contextvars

from common.api_error import DegenerateVarianceError, DomainError
from common.context_vars import stage_timer_context_var
from common.logger import StageTimer, get_app_logger, stage
from common.scripts import map_ordered
from app.core import batch_norm_loo, estimator_gap, forward, init_network, predict, relu
from app.data import build_dataset, train_test_split
from app.metrics import (
    classify_guess,
    ensemble_g0,
    estimate_gamma,
    filter_initializations,
    gamma_vs_shift,
    guess_stats_from_predictions,
    ks_distance,
    MIN_KS_SAMPLES,
    ln_rms_gap,
    output_gamma,
    pooled_gamma,
)
from app.schemas import (
    Dataset,
    EnsembleResult,
    ExperimentConfig,
    ExperimentKind,
    ForwardMode,
    GuessStats,
    NetworkConfig,
    NormKind,
    Regime,
    TheoryPrediction,
    TrainTrajectory,
)
from app.theory import (
    bn_relu_moments,
    bn_unit_cdf,
    bn_unit_pdf,
    g0_cdf_from_gamma,
    g0_pdf_from_gamma,
    gamma_prediction,
    loo_normalized_variance,
    loo_var_expectation,
    std_normal_pdf,
    theory_table,
)
from app.trainer import aggregate_trajectories, convergence_time, train, trajectory_table
from .results import RESULTS_NAME, ResultWriter

logger = get_app_logger("igb.runner")

# candidates are classified in fixed-size chunks, in seed order
CANDIDATE_CHUNK = 32
GAUSSIAN_LIMIT_GRID = np.linspace(-4.0, 4.0, 801)


class ExperimentOutput(NamedTuple):
    results: dict[str, Any]
    seeds: dict[str, Any]
    decisions: dict[str, Any]


def _prediction(net: NetworkConfig) -> Optional[TheoryPrediction]:
    try:
        return gamma_prediction(net)
    except DomainError as e:
        logger.warning("no closed-form prediction", network=net.label(), reason=e.message)
        return None


def _prediction_payload(prediction: Optional[TheoryPrediction]) -> Optional[dict[str, Any]]:
    return None if prediction is None else prediction.model_dump(mode="json")


def _common_decisions(config: ExperimentConfig) -> dict[str, Any]:
    return {
        "seed_rule": "run seed = base_seed + run index",
        "tie_rule": "argmax ties go to the lowest class index",
        "data_seed_stream": "synthetic data draws from seed sequence [0xDA7A, seed]",
        "thresholds": config.thresholds.model_dump(),
    }


# ---------------------------------------------------------------------------
# static-ensemble
# ---------------------------------------------------------------------------


def _histogram_rows(ensemble: EnsembleResult, gamma: Optional[float]) -> list[list[Any]]:
    edges = np.asarray(ensemble.histogram.edges)
    n = len(ensemble.samples)
    theory: list[Optional[float]] = [None] * (len(edges) - 1)
    if gamma is not None:
        cdf = np.asarray(g0_cdf_from_gamma(edges, gamma))
        theory = [float(v) for v in np.diff(cdf)]
    return [
        [float(lo), float(hi), count, count / n, t]
        for lo, hi, count, t in zip(edges[:-1], edges[1:], ensemble.histogram.counts, theory)
    ]


def run_static_ensemble(config: ExperimentConfig, writer: ResultWriter) -> ExperimentOutput:
    networks: dict[str, Any] = {}
    seeds: dict[str, Any] = {}
    for label, net in config.networks.items():
        with bound_contextvars(network=label), stage(f"ensemble:{label}"):
            ensemble = ensemble_g0(
                net,
                config.data,
                config.runs,
                base_seed=config.base_seed,
                threads=config.threads,
                bins=config.histogram_bins,
            )
        prediction = _prediction(net)
        gamma_theory = prediction.gamma if prediction is not None else None
        writer.csv(
            f"histogram_{label}.csv",
            ["bin_low", "bin_high", "count", "fraction", "theory_fraction"],
            _histogram_rows(ensemble, gamma_theory),
        )
        writer.csv(
            f"samples_{label}.csv",
            ["seed", "g0", "top_fraction", "dominant_class", "regime"],
            [
                [
                    seed,
                    stats.g0,
                    stats.top_fraction,
                    stats.dominant_class,
                    classify_guess(stats.top_fraction, stats.num_classes, config.thresholds).value,
                ]
                for seed, stats in zip(ensemble.seeds, ensemble.guess_stats)
            ],
        )
        try:
            empirical = output_gamma(ensemble)
            gamma_entry: Optional[dict[str, Any]] = empirical.model_dump()
        except DegenerateVarianceError as e:
            logger.error("output gamma undefined", network=label, reason=e.message)
            gamma_entry = None
        ks = None
        if gamma_theory and len(ensemble.samples) >= MIN_KS_SAMPLES:
            ks = ks_distance(
                ensemble.samples,
                lambda g: g0_cdf_from_gamma(np.clip(g, 0.0, 1.0), gamma_theory),
            )
        samples = np.asarray(ensemble.samples)
        networks[label] = {
            "network": net.label(),
            "samples": list(ensemble.samples),
            "g0_mean": float(samples.mean()),
            "g0_std": float(samples.std(ddof=1)),
            "mass_045_055": ensemble.histogram.mass_within(0.45, 0.55),
            "deep_fraction_090": float(np.mean(np.asarray(ensemble.top_fractions) > 0.9)),
            "census": filter_initializations(ensemble, config.thresholds).census(),
            "output_gamma": gamma_entry,
            "theory": _prediction_payload(prediction),
            "ks_vs_theory": ks,
            "metadata": ensemble.metadata,
        }
        seeds[label] = list(ensemble.seeds)
    decisions = {
        **_common_decisions(config),
        "bn_statistics": "full batch, or shuffled mini-batches of bn_batch_size when set",
        "histogram_bins": config.histogram_bins,
        "fresh_data_per_run": config.data.fresh_per_run,
    }
    return ExperimentOutput({"networks": networks}, seeds, decisions)


# ---------------------------------------------------------------------------
# gamma-scan
# ---------------------------------------------------------------------------


def run_gamma_scan(config: ExperimentConfig, writer: ResultWriter) -> ExperimentOutput:
    networks: dict[str, Any] = {}
    seeds: dict[str, Any] = {}
    for label, net in config.networks.items():
        with bound_contextvars(network=label), stage(f"gamma:{label}"):
            report = estimate_gamma(
                net, config.data, config.runs, config.gamma.layers, config.base_seed, config.threads
            )
        writer.csv(
            f"gamma_{label}.csv",
            ["layer", "gamma", "gamma_se", "var_w", "var_d", "gamma_per_node"],
            [
                [e.layer, e.gamma, e.gamma_se, e.var_w, e.var_d, e.gamma_per_node]
                for e in report.layers
            ],
        )
        output_layer = net.depth + 1
        entry: dict[str, Any] = {
            "network": net.label(),
            "layers": [e.model_dump() for e in report.layers],
            "output_gamma": next(
                (e.gamma for e in report.layers if e.layer == output_layer), None
            ),
            "theory": _prediction_payload(_prediction(net)),
        }
        if config.gamma.shifts:
            with bound_contextvars(network=label), stage(f"shift:{label}"):
                by_shift = gamma_vs_shift(
                    net,
                    config.data,
                    config.gamma.shifts,
                    config.runs,
                    config.base_seed,
                    config.threads,
                )
            writer.csv(
                f"gamma_shift_{label}.csv",
                ["shift", "gamma", "gamma_se"],
                [[c, e.gamma, e.gamma_se] for c, e in by_shift],
            )
            entry["shift_gamma"] = [
                {"shift": c, "gamma": e.gamma, "gamma_se": e.gamma_se} for c, e in by_shift
            ]
        if net.norm_kind in (NormKind.LAYER, NormKind.RMS):
            data = build_dataset(config.data, input_dim=net.input_dim)
            entry["ln_rms_gap"] = ln_rms_gap(init_network(net, config.base_seed), data).model_dump()
        networks[label] = entry
        seeds[label] = list(report.seeds)
    decisions = {
        **_common_decisions(config),
        "bn_statistics": "full batch over the dataset; bn_batch_size only shapes the theory entry",
        "var_w": "pooled over nodes and runs, ddof = 1",
        "gamma_se": "leave-one-run-out jackknife",
    }
    return ExperimentOutput({"networks": networks}, seeds, decisions)


# ---------------------------------------------------------------------------
# theory-table
# ---------------------------------------------------------------------------


def run_theory_table(config: ExperimentConfig, writer: ResultWriter) -> ExperimentOutput:
    rows = theory_table(config.theory.batch_sizes)
    writer.csv(
        "theory_table.csv",
        [
            "batch_size",
            "activation_mean",
            "activation_variance",
            "gamma",
            "loo_sigma2_expectation",
            "loo_normalized_variance",
        ],
        [
            [
                r.batch_size,
                r.activation_mean,
                r.activation_variance,
                r.gamma,
                r.loo_sigma2_expectation,
                r.loo_normalized_variance,
            ]
            for r in rows
        ],
    )
    bins = config.histogram_bins
    midpoints = (np.arange(bins) + 0.5) / bins
    networks: dict[str, Any] = {}
    for label, net in config.networks.items():
        prediction = _prediction(net)
        networks[label] = {"network": net.label(), "theory": _prediction_payload(prediction)}
        if prediction is not None and prediction.gamma:
            pdf = np.asarray(g0_pdf_from_gamma(midpoints, prediction.gamma))
            cdf = np.asarray(g0_cdf_from_gamma(midpoints, prediction.gamma))
            writer.csv(
                f"g0_density_{label}.csv",
                ["g", "pdf", "cdf"],
                [[float(g), float(p), float(c)] for g, p, c in zip(midpoints, pdf, cdf)],
            )
    results = {"rows": [r.model_dump() for r in rows], "networks": networks}
    decisions = {"full_batch_row": "batch_size empty: the full-batch limit"}
    return ExperimentOutput(results, {}, decisions)


# ---------------------------------------------------------------------------
# dist-test
# ---------------------------------------------------------------------------


def _distribution_row(batch_size: int, samples: int, rng: np.random.Generator) -> dict[str, Any]:
    columns = -(-samples // batch_size)
    x = rng.standard_normal((batch_size, columns))
    hat, stats = batch_norm_loo(x)
    z = hat.ravel()[:samples]
    loo_sigma2 = (stats.std**2).ravel()[:samples]
    gap_mean, gap_var = estimator_gap(x)
    row: dict[str, Any] = {
        "batch_size": batch_size,
        "samples": int(z.size),
        "ks_distance": ks_distance(z, lambda v: bn_unit_cdf(v, batch_size)),
        "loo_sigma2_empirical": float(loo_sigma2.mean()),
        "loo_sigma2_theory": loo_var_expectation(1.0, batch_size),
        "var_empirical": float(z.var()),
        "var_theory": None,
        "relu_mean_empirical": float(relu(z).mean()),
        "relu_mean_theory": None,
        "relu_var_empirical": float(relu(z).var()),
        "relu_var_theory": None,
        "estimator_gap_mean": gap_mean,
        "estimator_gap_var": gap_var,
    }
    if batch_size >= 5:
        relu_mean, relu_var = bn_relu_moments(batch_size)
        row.update(
            var_theory=loo_normalized_variance(batch_size),
            relu_mean_theory=relu_mean,
            relu_var_theory=relu_var,
        )
    return row


def run_distribution_test(config: ExperimentConfig, writer: ResultWriter) -> ExperimentOutput:
    spec = config.dist_test
    rows = []
    for b in spec.batch_sizes:
        with stage(f"dist:{b}"):
            rng = np.random.default_rng([config.base_seed, spec.seed, b])
            rows.append(_distribution_row(b, spec.samples, rng))
        logger.info("distribution test", batch_size=b, ks=rows[-1]["ks_distance"])
    header = list(rows[0])
    writer.csv("dist_test.csv", header, [[row[k] for k in header] for row in rows])
    limit = spec.gaussian_limit_batch_size
    gap = np.abs(
        np.asarray(bn_unit_pdf(GAUSSIAN_LIMIT_GRID, limit))
        - np.asarray(std_normal_pdf(GAUSSIAN_LIMIT_GRID))
    )
    results = {
        "rows": rows,
        "gaussian_limit": {"batch_size": limit, "max_abs_pdf_difference": float(gap.max())},
    }
    decisions = {
        "estimator": "leave-one-out mean and variance",
        "rng": "seed sequence [base_seed, dist_test.seed, batch_size]",
        "ks_reference": "exact CDF of the leave-one-out variable",
    }
    return ExperimentOutput(results, {"dist_test": spec.seed}, decisions)


# ---------------------------------------------------------------------------
# filtered-dynamics
# ---------------------------------------------------------------------------


def _initial_guess(
    net: NetworkConfig, data: Dataset, seed: int
) -> tuple[GuessStats, np.ndarray, np.ndarray]:
    outputs = forward(init_network(net, seed), data, ForwardMode.FULL_BATCH).outputs
    stats = guess_stats_from_predictions(predict(outputs), net.num_classes)
    return stats, outputs.mean(axis=0), outputs.var(axis=0)


class _Scan(NamedTuple):
    groups: dict[str, list[int]]
    census: dict[str, int]
    scanned: int
    output_gamma: Optional[float]


def _scan_candidates(net: NetworkConfig, data: Dataset, config: ExperimentConfig) -> _Scan:
    spec = config.dynamics
    wanted = set(spec.groups) if spec.filter else set()
    groups: dict[Regime, list[int]] = {r: [] for r in Regime}
    census = {r.value: 0 for r in Regime}
    means: list[np.ndarray] = []
    variances: list[np.ndarray] = []

    if spec.filter:
        candidates = range(config.base_seed, config.base_seed + spec.max_candidates)
    else:
        candidates = range(config.base_seed, config.base_seed + config.runs)

    def unfilled() -> bool:
        return not spec.filter or any(len(groups[r]) < spec.runs_per_group for r in wanted)

    for start in range(0, len(candidates), CANDIDATE_CHUNK):
        if not unfilled():
            break
        chunk = list(candidates[start : start + CANDIDATE_CHUNK])
        outcomes = map_ordered(lambda s: _initial_guess(net, data, s), chunk, config.threads)
        for seed, (stats, m, v) in zip(chunk, outcomes):
            regime = classify_guess(stats.top_fraction, stats.num_classes, config.thresholds)
            census[regime.value] += 1
            means.append(m)
            variances.append(v)
            if not spec.filter or (regime in wanted and len(groups[regime]) < spec.runs_per_group):
                groups[regime].append(seed)

    gamma = None
    if len(means) >= 10:
        try:
            gamma = pooled_gamma(np.stack(means), np.stack(variances), layer=net.depth + 1).gamma
        except DegenerateVarianceError:
            gamma = None
    if spec.filter:
        selected = {r.value: groups[r] for r in spec.groups}
    else:
        selected = {"unfiltered": [s for r in Regime for s in groups[r]]}
        selected["unfiltered"].sort()
    return _Scan(selected, census, len(means), gamma)


def _median_tau(taus: list[Optional[int]]) -> Optional[float]:
    if not taus:
        return None
    median = float(np.median([np.inf if t is None else t for t in taus]))
    return None if np.isinf(median) else median


def _group_summary(trajectories: list[TrainTrajectory], level: float) -> dict[str, Any]:
    taus = [convergence_time(t, level) for t in trajectories]
    if not trajectories:
        return {"seeds": [], "tau": [], "median_tau": None, "unconverged": 0}
    initial = np.array([t.initial.train_class_accuracy for t in trajectories])
    return {
        "seeds": [t.seed for t in trajectories],
        "tau": taus,
        "median_tau": _median_tau(taus),
        "unconverged": sum(t is None for t in taus),
        "initial_class_accuracy": initial.tolist(),
        "initial_max_guess_fraction": [t.initial.max_guess_fraction for t in trajectories],
        "final_train_accuracy": [t.records[-1].train_accuracy for t in trajectories],
    }


def run_filtered_dynamics(config: ExperimentConfig, writer: ResultWriter) -> ExperimentOutput:
    cfg = config.train
    assert cfg is not None
    networks: dict[str, Any] = {}
    seeds: dict[str, Any] = {}
    for label, net in config.networks.items():
        data = build_dataset(config.data, input_dim=net.input_dim)
        test: Optional[Dataset] = None
        if config.data.test_fraction > 0:
            data, test = train_test_split(data, config.data.test_fraction, config.data.seed)

        with bound_contextvars(network=label), stage(f"scan:{label}"):
            scan = _scan_candidates(net, data, config)
        logger.info(
            "initializations selected",
            network=label,
            scanned=scan.scanned,
            groups={g: len(s) for g, s in scan.groups.items()},
        )
        for group, members in scan.groups.items():
            if config.dynamics.filter and len(members) < config.dynamics.runs_per_group:
                logger.warning("group not filled", network=label, group=group, found=len(members))

        groups: dict[str, Any] = {}
        for group, members in scan.groups.items():

            def run(seed: int) -> TrainTrajectory:
                with bound_contextvars(network=label, group=group, seed=seed):
                    run_cfg = cfg.model_copy(update={"seed": cfg.seed + seed})
                    return train(init_network(net, seed), data, run_cfg, test)

            with stage(f"train:{label}:{group}"):
                trajectories = map_ordered(run, members, config.threads)
            for t, seed in zip(trajectories, members):
                header, rows = trajectory_table(t)
                writer.csv(f"trajectories/{label}/{group}/seed_{seed}.csv", header, rows)
            if trajectories:
                summary = aggregate_trajectories(trajectories)
                names = list(summary.series)
                writer.csv(
                    f"dynamics_{label}_{group}.csv",
                    ["step"] + [f"{n}_{stat}" for n in names for stat in ("mean", "se")],
                    [
                        [step]
                        + [
                            v
                            for n in names
                            for v in (summary.series[n].mean[i], summary.series[n].se[i])
                        ]
                        for i, step in enumerate(summary.steps)
                    ],
                )
            groups[group] = _group_summary(trajectories, cfg.convergence_level)
            groups[group]["network_seeds"] = list(members)

        networks[label] = {
            "network": net.label(),
            "epsilon": net.epsilon,
            "census": scan.census,
            "scanned": scan.scanned,
            "output_gamma": scan.output_gamma,
            "theory": _prediction_payload(_prediction(net)),
            "groups": groups,
        }
        seeds[label] = {group: list(members) for group, members in scan.groups.items()}
    decisions = {
        **_common_decisions(config),
        "filter": config.dynamics.filter,
        "candidate_chunk": CANDIDATE_CHUNK,
        "training_seed": "train.seed + network seed",
        "epsilon": {label: net.epsilon for label, net in config.networks.items()},
        "running_stats": f"calibrated on the full training set, then momentum {cfg.bn_momentum}",
        "partial_batch": "the last partial mini-batch of every epoch is skipped",
        "tau_convention": f"first eval step with train accuracy >= {cfg.convergence_level}",
        "relabel_dominant": cfg.relabel_dominant,
        "eval_normalization": "eval mode over the full train and test sets",
    }
    return ExperimentOutput({"networks": networks}, seeds, decisions)


RUNNERS: dict[ExperimentKind, Callable[[ExperimentConfig, ResultWriter], ExperimentOutput]] = {
    ExperimentKind.STATIC_ENSEMBLE: run_static_ensemble,
    ExperimentKind.GAMMA_SCAN: run_gamma_scan,
    ExperimentKind.THEORY_TABLE: run_theory_table,
    ExperimentKind.FILTERED_DYNAMICS: run_filtered_dynamics,
    ExperimentKind.DISTRIBUTION_TEST: run_distribution_test,
}


def execute(config: ExperimentConfig) -> Path:
    """
    Run ``config`` and write results, CSVs and manifest into ``config.output_dir``.

    Returns the manifest path.
    """
    writer = ResultWriter(config.output_dir)
    timer = StageTimer()
    token = stage_timer_context_var.set(timer)
    try:
        with bound_contextvars(
            experiment=config.kind.value, label=config.name, seed=config.base_seed
        ):
            logger.info("experiment started", output_dir=str(config.output_dir))
            output = RUNNERS[config.kind](config, writer)
            with stage("write"):
                writer.json(
                    RESULTS_NAME,
                    {"kind": config.kind.value, "name": config.name, **output.results},
                )
            logger.info("experiment finished", timings=timer.format_summary())
    finally:
        stage_timer_context_var.reset(token)
    return writer.manifest(
        resolved_config=config.model_dump(mode="json"),
        seeds=output.seeds,
        decisions=output.decisions,
        timings=timer.as_dict(),
    )


__all__ = [
    "ExperimentOutput",
    "CANDIDATE_CHUNK",
    "run_static_ensemble",
    "run_gamma_scan",
    "run_theory_table",
    "run_distribution_test",
    "run_filtered_dynamics",
    "RUNNERS",
    "execute",
]
