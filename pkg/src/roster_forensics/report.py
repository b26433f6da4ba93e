"""Versioned JSON reports and the CSV series handed to external plotting."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

SCHEMA_VERSION = 1
TOOL = "roster-forensics"
TIMESTAMP_KEY = "generated_at"


def _version() -> str:
    from . import __version__
    return __version__


def clean(obj: Any) -> Any:
    """JSON-safe copy: non-finite floats become strings, numpy scalars plain numbers."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "+inf" if obj > 0 else "-inf"
    return obj


@dataclass
class Report:
    command: str
    config: dict
    results: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    provenance: list[str] = field(default_factory=list)
    # extra files written beside the report (re-enacted charts); not part of the JSON
    attachments: dict[str, str] = field(default_factory=dict)

    def warn(self, items: Iterable[str] | str) -> None:
        for w in ([items] if isinstance(items, str) else items):
            if w not in self.warnings:
                self.warnings.append(w)

    def add_series(self, name: str, columns: list[str], rows: Iterable[Iterable]) -> None:
        self.series[name] = {"columns": list(columns), "rows": [list(r) for r in rows]}

    def to_dict(self, timestamp: str | None = None) -> dict:
        stamp = timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        return clean({
            "schema_version": SCHEMA_VERSION,
            "tool": TOOL,
            "tool_version": _version(),
            TIMESTAMP_KEY: stamp,
            "command": self.command,
            "config": self.config,
            "results": self.results,
            "series": self.series,
            "warnings": self.warnings,
            "provenance": self.provenance,
        })


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def canonical(doc: dict | str) -> str:
    """Report text with the timestamp removed, for reproducibility comparisons."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    doc = {k: v for k, v in doc.items() if k != TIMESTAMP_KEY}
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False)


def lint(doc: Any, path: str = "$") -> list[str]:
    """Paths of p-values that lack an effect size and an explicit degenerate flag."""
    bad = []
    if isinstance(doc, dict):
        if "p_value" in doc:
            has_effect = any(doc.get(k) is not None
                             for k in ("effect_size", "effect_size_corrected"))
            flagged = doc.get("degenerate") is True or doc.get("effect_size_unavailable") is True
            if not (has_effect or flagged):
                bad.append(path)
        for k, v in doc.items():
            bad.extend(lint(v, f"{path}.{k}"))
    elif isinstance(doc, list):
        for i, v in enumerate(doc):
            bad.extend(lint(v, f"{path}[{i}]"))
    return bad


def write_atomic(path: str | Path, text: str, force: bool = False) -> None:
    path = Path(path)
    if path.exists() and not force:
        raise FileExistsError(str(path))
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


SERIES_FILES = {
    "null_pmf": "nullpmf.csv",
    "pvalue_histogram": "pvalues.csv",
    "deathtimes": "deathtimes.csv",
    "acuity": "acuity.csv",
    "extrapolation_band": "band.csv",
}


def emit_plot_series(doc: dict) -> dict[str, str]:
    """CSV text per figure-style series contained in a report document."""
    out = {}
    for name, s in (doc.get("series") or {}).items():
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(s["columns"])
        w.writerows(s["rows"])
        out[SERIES_FILES.get(name, f"{name}.csv")] = buf.getvalue()
    return out
