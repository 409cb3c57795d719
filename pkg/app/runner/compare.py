# app/runner/compare.py
"""
Differences between two result directories of the same kind.

Every delta is ``a - b``. Networks are paired by label; when each side holds
a single network they are paired whatever their labels.
"""

import json
from pathlib import Path
from typing import Any, Optional, Union

from common.api_error import DataFormatError, IncompatibleResultsError
from common.logger import get_app_logger
from app.metrics import MIN_KS_SAMPLES, ks_distance
from app.schemas import ExperimentKind
from .results import RESULTS_NAME, ResultWriter

logger = get_app_logger("igb.runner.compare")

COMPARE_NAME = "compare.json"


def load_results(path: Union[str, Path]) -> dict[str, Any]:
    """
    ``results.json`` of a result directory (or the file itself).

    Raises:
        DataFormatError: missing or unreadable file
    """
    path = Path(path)
    if path.is_dir():
        path = path / RESULTS_NAME
    if not path.is_file():
        raise DataFormatError(f"no {RESULTS_NAME} found", path=str(path))
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataFormatError(f"invalid JSON: {e.msg}", path=str(path), line=e.lineno) from e
    if not isinstance(payload, dict) or "kind" not in payload:
        raise DataFormatError("results file lacks a 'kind' entry", path=str(path))
    return payload


def _delta(a: Optional[float], b: Optional[float]) -> Optional[float]:
    return None if a is None or b is None else a - b


def _pairs(a: dict[str, Any], b: dict[str, Any]) -> list[tuple[str, str]]:
    common = sorted(set(a) & set(b))
    if common:
        return [(label, label) for label in common]
    if len(a) == 1 and len(b) == 1:
        return [(next(iter(a)), next(iter(b)))]
    raise IncompatibleResultsError(
        "results share no network labels", kind_a=sorted(a), kind_b=sorted(b)
    )


def _gamma(entry: dict[str, Any]) -> Optional[float]:
    value = entry.get("output_gamma")
    if isinstance(value, dict):
        return value.get("gamma")
    if value is None and entry.get("theory"):
        return entry["theory"].get("gamma")
    return value


def _compare_networks(kind: str, a: dict[str, Any], b: dict[str, Any]) -> dict[str, Any]:
    gamma_a, gamma_b = _gamma(a), _gamma(b)
    diff: dict[str, Any] = {
        "gamma_a": gamma_a,
        "gamma_b": gamma_b,
        "gamma_delta": _delta(gamma_a, gamma_b),
    }

    if kind == ExperimentKind.STATIC_ENSEMBLE.value:
        samples_a, samples_b = a["samples"], b["samples"]
        enough = min(len(samples_a), len(samples_b)) >= MIN_KS_SAMPLES
        diff["ks_distance"] = ks_distance(samples_a, samples_b) if enough else None
        diff["g0_mean_delta"] = a["g0_mean"] - b["g0_mean"]
        diff["mass_045_055_delta"] = a["mass_045_055"] - b["mass_045_055"]

    elif kind == ExperimentKind.GAMMA_SCAN.value:
        by_layer_b = {e["layer"]: e["gamma"] for e in b["layers"]}
        diff["layer_gamma_delta"] = {
            str(e["layer"]): e["gamma"] - by_layer_b[e["layer"]]
            for e in a["layers"]
            if e["layer"] in by_layer_b
        }

    elif kind == ExperimentKind.FILTERED_DYNAMICS.value:
        groups = sorted(set(a["groups"]) & set(b["groups"]))
        tau_delta = {
            g: _delta(a["groups"][g]["median_tau"], b["groups"][g]["median_tau"]) for g in groups
        }
        diff["median_tau_delta"] = tau_delta
        if diff["gamma_delta"] is not None and any(v is not None for v in tau_delta.values()):
            # convergence delay against the gamma gap
            diff["tau_vs_gamma"] = [
                {"group": g, "gamma_delta": diff["gamma_delta"], "tau_delta": tau_delta[g]}
                for g in groups
                if tau_delta[g] is not None
            ]
    return diff


def _compare_rows(
    a: list[dict[str, Any]], b: list[dict[str, Any]], key: str, fields: list[str]
) -> list[dict[str, Any]]:
    rows_b = {row[key]: row for row in b}
    out = []
    for row in a:
        other = rows_b.get(row[key])
        if other is None:
            continue
        deltas = {f"{f}_delta": _delta(row.get(f), other.get(f)) for f in fields}
        out.append({key: row[key], **deltas})
    return out


def compare_results(a: dict[str, Any], b: dict[str, Any]) -> dict[str, Any]:
    """
    Raises:
        IncompatibleResultsError: different kinds, or nothing to pair
    """
    if a["kind"] != b["kind"]:
        raise IncompatibleResultsError(
            f"cannot compare {a['kind']} with {b['kind']}", kind_a=a["kind"], kind_b=b["kind"]
        )
    kind = a["kind"]
    report: dict[str, Any] = {
        "kind": kind,
        "a": a.get("name"),
        "b": b.get("name"),
        "delta": "a - b",
    }

    if kind == ExperimentKind.DISTRIBUTION_TEST.value:
        report["rows"] = _compare_rows(
            a["rows"],
            b["rows"],
            "batch_size",
            ["ks_distance", "var_empirical", "loo_sigma2_empirical"],
        )
        return report
    if kind == ExperimentKind.THEORY_TABLE.value:
        report["rows"] = _compare_rows(
            a["rows"], b["rows"], "batch_size", ["gamma", "activation_mean"]
        )

    nets_a, nets_b = a.get("networks", {}), b.get("networks", {})
    pairs = []
    if nets_a or nets_b:
        for label_a, label_b in _pairs(nets_a, nets_b):
            diff = _compare_networks(kind, nets_a[label_a], nets_b[label_b])
            pairs.append({"a": label_a, "b": label_b, **diff})
    report["networks"] = pairs
    return report


def execute_compare(path_a: Union[str, Path], path_b: Union[str, Path], out_dir: Path) -> Path:
    """Write ``compare.json`` and a manifest into ``out_dir``; returns the manifest path."""
    report = compare_results(load_results(path_a), load_results(path_b))
    logger.info("results compared", kind=report["kind"], pairs=len(report.get("networks", [])))
    writer = ResultWriter(out_dir)
    writer.json(COMPARE_NAME, report)
    return writer.manifest(
        resolved_config={"compare": [str(path_a), str(path_b)]},
        seeds={},
        decisions={"delta": "a - b", "pairing": "by label, or the single network of each side"},
    )


__all__ = ["COMPARE_NAME", "load_results", "compare_results", "execute_compare"]
