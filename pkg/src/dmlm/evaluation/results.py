"""Evaluation result files: results.json and a plain-text summary.txt."""

# =============================================================================
# IMPORTS
# =============================================================================

# Future
from __future__ import annotations

# Standard Library
import json
import pathlib
from typing import Any, Dict, Mapping, Optional

# dmlm
from dmlm.evaluation.metrics import EvalResult
from dmlm.utils import atomic_write_text

# =============================================================================
# GLOBALS
# =============================================================================

RESULTS_FILE = "results.json"
SUMMARY_FILE = "summary.txt"


# =============================================================================
# FUNCTIONS
# =============================================================================


def format_summary(
    result: EvalResult, diagnostics: Optional[Mapping[str, Any]] = None
) -> str:
    """Format the metrics as a table for humans.

    :param result: The metrics.
    :param diagnostics: Optional named diagnostic records.
    :return: The summary text.

    """
    lines = [
        f"macro AUC  {result.auc:.4f}",
        f"macro F1   {result.f1:.4f}",
        f"accuracy   {result.acc:.4f}",
        "",
        f"{'class':<24} {'AUC':>8} {'F1':>8} {'n':>6}",
    ]

    for item in result.per_class:
        auc = "n/a" if item.auc is None else f"{item.auc:.4f}"
        lines.append(f"{item.name:<24} {auc:>8} {item.f1:>8.4f} {item.support:>6}")

    for name, values in (diagnostics or {}).items():
        lines.append("")
        lines.append(f"{name}:")
        lines.extend(f"  {key} = {value}" for key, value in values.items())

    for warning in result.warnings:
        lines.append(f"warning: {warning}")

    return "\n".join(lines) + "\n"


def write_results(
    directory: pathlib.Path,
    result: EvalResult,
    config_hash: str,
    diagnostics: Optional[Mapping[str, Any]] = None,
) -> Dict[str, Any]:
    """Write results.json and summary.txt.

    :param directory: The output directory.
    :param result: The metrics.
    :param config_hash: The hash of the run configuration.
    :param diagnostics: Optional named diagnostic records.
    :return: The record written to results.json.

    """
    record = {
        "config_hash": config_hash,
        "metrics": {"auc": result.auc, "f1": result.f1, "acc": result.acc},
        "per_class": [
            {
                "class_id": item.class_id,
                "name": item.name,
                "auc": item.auc,
                "f1": item.f1,
                "support": item.support,
            }
            for item in result.per_class
        ],
        "diagnostics": dict(diagnostics or {}),
        "warnings": list(result.warnings),
    }

    atomic_write_text(
        directory / RESULTS_FILE, json.dumps(record, indent=2, sort_keys=True) + "\n"
    )
    atomic_write_text(directory / SUMMARY_FILE, format_summary(result, diagnostics))

    return record
