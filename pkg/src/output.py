"""
Report emission: JSON reports with schema version, config echo and metrics,
plus console tables, CSV export and plain-text summaries.
"""
import json
import math
import os
import re
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from src.errors import MalformedInputError
from src.models import SCHEMA_VERSION, RunConfig


def to_plain(value: Any) -> Any:
    """Convert report values into JSON-ready Python objects."""
    if hasattr(value, "to_dict") and not isinstance(value, pd.DataFrame):
        return to_plain(value.to_dict())
    if isinstance(value, pd.DataFrame):
        return to_plain(value.to_dict(orient="records"))
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set)):
        items = sorted(value) if isinstance(value, set) else value
        return [to_plain(v) for v in items]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [to_plain(float(value.real)), to_plain(float(value.imag))]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


_REAL_MARK = "@real@"
_MARKED_REAL = re.compile('"' + re.escape(_REAL_MARK) + r'([^"]+)"')


def _mark_reals(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _mark_reals(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_mark_reals(v) for v in value]
    if isinstance(value, (float, np.floating)) and math.isfinite(value):
        text = format(float(value), ".17g")
        if not any(c in text for c in ".e"):
            text += ".0"
        return _REAL_MARK + text
    return value


def dumps_json(data: Any) -> str:
    """Pretty-printed JSON with every finite real written to 17 significant digits."""
    return _MARKED_REAL.sub(r"\1", json.dumps(_mark_reals(data), indent=2)) + "\n"


def build_report(report: Any, config: Optional[RunConfig] = None,
                 metrics: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "config": to_plain(config.to_dict()) if config is not None else {},
        "metrics": to_plain(metrics or {}),
        "report": to_plain(report) if report is not None else {},
    }


def emit_report(report: Any, path: Optional[str] = None, config: Optional[RunConfig] = None,
                metrics: Optional[Dict[str, Any]] = None) -> str:
    """
    Write a report as pretty-printed JSON.

    Reals are written with 17 significant digits, so they read back bit for bit.

    Args:
        report: a dict or any object with to_dict()
        path: target file; None only returns the text
        config: run configuration echoed into the report
        metrics: evaluation counts and, when requested, wall-clock times

    Returns:
        the JSON text
    """
    text = dumps_json(build_report(report, config, metrics))
    if path:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def load_report(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedInputError(f"{path}: cannot read report ({exc})")
    if not isinstance(data, dict) or data.get("schema_version") != SCHEMA_VERSION:
        raise MalformedInputError(f"{path}: not a schema {SCHEMA_VERSION} report")
    return data


class ReportOutput:
    """Console and file output for one CLI run."""

    def __init__(self, config: RunConfig, output_dir: str = "output"):
        """
        Initialize the output handler.

        Args:
            config: the run configuration
            output_dir: directory for CSV and text files
        """
        self.config = config
        self.output_dir = output_dir

    @staticmethod
    def print_header(title: str):
        print("\n" + "=" * 80)
        print(title)
        print("=" * 80)

    @staticmethod
    def print_values(values: Dict[str, Any]):
        width = max((len(k) for k in values), default=0)
        for key, value in values.items():
            if isinstance(value, float):
                value = f"{value:.12g}"
            print(f"  {key:<{width}} : {value}")

    def print_table(self, frame: pd.DataFrame, title: Optional[str] = None):
        if title:
            self.print_header(title)
        if frame.empty:
            print("[No rows]")
            return
        with pd.option_context("display.max_rows", None, "display.width", 120, "display.max_colwidth", 60):
            print(frame.to_string(index=False))

    @staticmethod
    def print_validation(is_valid: bool, errors: List[str]):
        if is_valid:
            print("[OK] All checks passed")
        else:
            print("[X] Checks failed:")
            for error in errors:
                print(f"  - {error}")

    def save_to_csv(self, frame: pd.DataFrame, name: str) -> str:
        os.makedirs(self.output_dir, exist_ok=True)
        path = os.path.join(self.output_dir, name)
        frame.to_csv(path, index=False)
        print(f"Table saved to: {path}")
        return path

    def save_report(self, title: str, sections: Dict[str, Dict[str, Any]], name: str = "report.txt") -> str:
        """Plain-text summary: one block per section."""
        os.makedirs(self.output_dir, exist_ok=True)
        path = os.path.join(self.output_dir, name)
        with open(path, "w", encoding="utf-8") as f:
            f.write("=" * 80 + "\n")
            f.write(title + "\n")
            f.write("=" * 80 + "\n\n")
            f.write("CONFIGURATION:\n")
            f.write("-" * 40 + "\n")
            for key, value in self.config.to_dict().items():
                f.write(f"  {key}: {value}\n")
            f.write("\n")
            for heading, values in sections.items():
                f.write(heading.upper() + ":\n")
                f.write("-" * 40 + "\n")
                for key, value in values.items():
                    f.write(f"  {key}: {value}\n")
                f.write("\n")
        print(f"Report saved to: {path}")
        return path
