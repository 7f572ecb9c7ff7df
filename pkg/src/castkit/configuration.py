"""Configuration management for castkit pipelines."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any

import yaml
from pydantic import ValidationError

from .exceptions import ConfigurationError
from .models import PipelineConfig

CONFIG_ENV_VAR = "CASTKIT_CONFIG"
CONFIG_VERSION = 1

# Resolver and re-ranking settings of the four submitted run shapes.
RUN_PRESETS: dict[str, dict[str, Any]] = {
    "quretecNoRerank": {
        "resolver": "heuristic",
        "rerank": False,
        "tag": "quretecNoRerank",
    },
    "quretecQR": {"resolver": "heuristic", "rerank": True, "tag": "quretecQR"},
    "baselineQR": {"resolver": "auto-rewrite", "rerank": True, "tag": "baselineQR"},
    "HumanQR": {"resolver": "manual-rewrite", "rerank": True, "tag": "HumanQR"},
}

_PATH_FIELDS = (
    "corpus_path",
    "index_path",
    "conversations_path",
    "rewrites_path",
    "rerank_scores_path",
    "rc_logits_path",
)


def _merge(base: dict[str, Any], updates: dict[str, Any]) -> dict[str, Any]:
    """Merge `updates` into `base`; nested mappings merge by key, None is skipped."""
    merged = dict(base)
    for key, value in updates.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


class Configuration:
    """Resolve the effective pipeline configuration.

    Sources, lowest priority first: the config file (explicit path, else the
    `CASTKIT_CONFIG` environment variable, else none), the run preset, then
    keyword overrides.
    """

    def __init__(
        self,
        path: str | Path | None = None,
        preset: str | None = None,
        **overrides: Any,
    ) -> None:
        """Initialize a new Configuration instance.

        Args:
            path: Optional YAML config file. If not provided, the file named by
                  `CASTKIT_CONFIG` is used when set.
            preset: Optional run preset name, see `RUN_PRESETS`.
            **overrides: PipelineConfig fields; None values are ignored so
                  unset command-line flags keep the file value.

        Raises:
            ConfigurationError: If the file, preset or resulting values are
                invalid.

        Example:
            ```python
            config = Configuration("experiment.yaml", preset="quretecQR", workers=4)
            config.pipeline.resolver
            # Returns: 'heuristic'
            ```

        """
        env_path = os.environ.get(CONFIG_ENV_VAR)
        source = path or env_path or None
        self.path = Path(source) if source else None
        self.preset = preset

        data = self._load(self.path) if self.path else {}
        if preset is not None:
            if preset not in RUN_PRESETS:
                raise ConfigurationError(
                    f"unknown preset {preset!r}; choose from {', '.join(RUN_PRESETS)}"
                )
            data = _merge(data, RUN_PRESETS[preset])
        data = _merge(data, overrides)

        try:
            self.pipeline = PipelineConfig.model_validate(data)
        except ValidationError as e:
            raise ConfigurationError(f"invalid configuration: {e}") from e

    def store(self, path: str | Path) -> None:
        """Write the effective configuration as YAML.

        Args:
            path: Destination file; parent directories are created. File paths
                are written absolute so the file can be moved.

        """
        config_file = Path(path)
        config_file.parent.mkdir(parents=True, exist_ok=True)
        fields = self.pipeline.model_dump(mode="json", exclude_none=True)
        for key in _PATH_FIELDS:
            if key in fields:
                fields[key] = str(Path(fields[key]).resolve())
        config_data = {"version": CONFIG_VERSION, **fields}
        with config_file.open("w", encoding="utf-8") as f:
            yaml.safe_dump(config_data, f, sort_keys=False)

    def _load(self, config_file: Path) -> dict[str, Any]:
        """Load a YAML config file.

        Relative paths in the file are taken relative to the file's directory.

        Returns:
            The PipelineConfig fields of the file.

        Raises:
            ConfigurationError: If the file cannot be read or has the wrong shape.

        """
        try:
            with config_file.open(encoding="utf-8") as f:
                data = yaml.safe_load(f)
        except OSError as e:
            raise ConfigurationError(f"cannot read config {config_file}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigurationError(f"invalid YAML in {config_file}: {e}") from e

        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ConfigurationError(f"config {config_file} must be a mapping")
        version = data.pop("version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ConfigurationError(
                f"unsupported config version {version} in {config_file}"
            )
        for key in _PATH_FIELDS:
            value = data.get(key)
            if isinstance(value, str) and not Path(value).is_absolute():
                data[key] = str(config_file.parent / value)
        return data
