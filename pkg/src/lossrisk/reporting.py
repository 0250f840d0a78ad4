"""Canonical JSON report documents.

Reports are the machine-readable boundary of the tool, so their bytes are
part of the contract: keys are sorted, numbers use Python's shortest
round-trip formatting, infinities are written as the string "inf", and the
same document always serializes to identical bytes. Nothing time- or
path-dependent is allowed into a document.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TOOL_NAME = "lossrisk"
TOOL_VERSION = "0.1.0"

__all__ = ["ReportDocument", "canonical_json", "emit_report", "file_digest"]


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _sanitize(obj):
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        if value == float("inf"):
            return "inf"
        if value == float("-inf"):
            return "-inf"
        return value
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj


@dataclass(frozen=True)
class ReportDocument:
    """Self-describing result envelope for one command invocation."""

    command: str
    result: dict
    config: dict
    config_digest: str
    data_digest: str | None
    seed: int

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "inputs": {
                "config_sha256": self.config_digest,
                "data_sha256": self.data_digest,
            },
            "result": self.result,
            "seed": self.seed,
            "tool": {"name": TOOL_NAME, "version": TOOL_VERSION},
        }


def canonical_json(doc: ReportDocument | dict) -> str:
    payload = doc.to_dict() if isinstance(doc, ReportDocument) else doc
    return (
        json.dumps(
            _sanitize(payload),
            sort_keys=True,
            ensure_ascii=False,
            allow_nan=False,
            indent=2,
        )
        + "\n"
    )


def emit_report(doc: ReportDocument, path) -> None:
    """Write the canonical encoding; identical documents yield identical bytes."""
    path = Path(path)
    try:
        path.write_text(canonical_json(doc), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"could not write report to {path}: {exc}") from exc
