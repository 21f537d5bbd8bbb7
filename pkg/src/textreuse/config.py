"""Serializable configuration for the pipeline and the parameter lab.

All defaults live in the dataclasses this module composes; a JSON config
file only states overrides. Unknown keys anywhere are rejected so typos
cannot silently fall back to defaults.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .alignment import AlignmentConfig, Method
from .errors import DataFormatError
from .retrieval import RetrievalConfig


@dataclass(frozen=True)
class PipelineConfig:
    resources: str = "persian"
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    alignment: AlignmentConfig = field(default_factory=AlignmentConfig)


def _build_section(cls, data: dict, where: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise DataFormatError(f"{where}: unknown keys {sorted(unknown)}")
    kwargs = dict(data)
    if cls is AlignmentConfig and "method" in kwargs:
        try:
            kwargs["method"] = Method(kwargs["method"])
        except ValueError as exc:
            raise DataFormatError(f"{where}: {exc}") from exc
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise DataFormatError(f"{where}: {exc}") from exc


def config_from_dict(data: dict) -> PipelineConfig:
    known = {"resources", "retrieval", "alignment"}
    unknown = set(data) - known
    if unknown:
        raise DataFormatError(f"config: unknown keys {sorted(unknown)}")
    resources = data.get("resources", PipelineConfig.resources)
    if not isinstance(resources, str):
        raise DataFormatError("config: resources must be a string")
    return PipelineConfig(
        resources=resources,
        retrieval=_build_section(
            RetrievalConfig, data.get("retrieval", {}), "config.retrieval"
        ),
        alignment=_build_section(
            AlignmentConfig, data.get("alignment", {}), "config.alignment"
        ),
    )


def load_config(path: str | Path | None) -> PipelineConfig:
    """Defaults when path is None, otherwise defaults overlaid with the
    JSON object in the file."""
    if path is None:
        return PipelineConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise DataFormatError(f"{path}: config root must be a JSON object")
    return config_from_dict(data)


def snapshot(cfg: PipelineConfig) -> dict:
    """JSON-ready dump of every effective config value."""
    out = asdict(cfg)
    out["alignment"]["method"] = Method(cfg.alignment.method).value
    return out
