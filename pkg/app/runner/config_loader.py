# app/runner/config_loader.py
"""
Experiment file loading.

Precedence, lowest first: the file, ``IGB_`` environment overrides, CLI
flags. A ``manifest.json`` written by a previous run is accepted too: its
``resolved_config`` entry is the experiment, so any run can be replayed.
"""

import json
import tomllib
from pathlib import Path
from typing import Any, Optional, Union

from pydantic import ValidationError

from common.api_error import ConfigurationError
from common.config import RuntimeConfig, configuration_error_from
from app.schemas import ExperimentConfig, ExperimentKind


def read_config_file(path: Union[str, Path]) -> dict[str, Any]:
    """
    Parse a TOML or JSON experiment file into a plain dict.

    Raises:
        ConfigurationError: missing file or a syntax error
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(
            f"config file not found: {path}",
            violations=[f"--config: {path} does not exist"],
        )
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix == ".json":
            payload = json.loads(text)
        else:
            payload = tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigurationError(f"cannot parse {path}: {e}", violations=[f"--config: {e}"]) from e
    if not isinstance(payload, dict):
        raise ConfigurationError(
            f"{path} must hold a table at top level", violations=["<root>: not a table"]
        )
    if "resolved_config" in payload:
        payload = payload["resolved_config"]
    return payload


def resolve_experiment_config(
    payload: dict[str, Any],
    kind: Optional[ExperimentKind] = None,
    runtime: Optional[RuntimeConfig] = None,
    overrides: Optional[dict[str, Any]] = None,
) -> ExperimentConfig:
    """
    Validate ``payload`` after applying environment and CLI overrides.

    ``kind`` fills a missing ``kind`` key and must agree with a present one.

    Raises:
        ConfigurationError: every violated constraint, as ``field.path: message``
    """
    data = dict(payload)
    if kind is not None:
        declared = data.setdefault("kind", kind.value)
        if declared != kind.value:
            raise ConfigurationError(
                f"config declares kind {declared!r} but the command is {kind.value!r}",
                violations=[f"kind: expected {kind.value!r}, found {declared!r}"],
            )

    layers: list[dict[str, Any]] = []
    if runtime is not None:
        layers.append(
            {
                "output_dir": runtime.out_dir,
                "threads": runtime.threads,
                "base_seed": runtime.seed,
                "runs": runtime.runs,
            }
        )
    layers.append(overrides or {})
    for layer in layers:
        data.update({k: v for k, v in layer.items() if v is not None})

    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise configuration_error_from(e, "Experiment configuration invalid") from e
    return with_training_epsilon(config)


def with_training_epsilon(config: ExperimentConfig) -> ExperimentConfig:
    """Networks of a training experiment that leave epsilon unset get ``dynamics.epsilon``."""
    if config.kind != ExperimentKind.FILTERED_DYNAMICS:
        return config
    networks = {
        label: net
        if "epsilon" in net.model_fields_set
        else net.model_copy(update={"epsilon": config.dynamics.epsilon})
        for label, net in config.networks.items()
    }
    return config.model_copy(update={"networks": networks})


def load_experiment_config(
    path: Optional[Union[str, Path]],
    kind: Optional[ExperimentKind] = None,
    runtime: Optional[RuntimeConfig] = None,
    overrides: Optional[dict[str, Any]] = None,
) -> ExperimentConfig:
    """File (or an empty table when ``path`` is None) resolved against overrides."""
    payload = read_config_file(path) if path is not None else {}
    return resolve_experiment_config(payload, kind, runtime, overrides)


__all__ = [
    "read_config_file",
    "resolve_experiment_config",
    "with_training_epsilon",
    "load_experiment_config",
]
