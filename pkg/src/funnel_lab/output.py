"""Deterministic result serialization for the command line tools.

Every run writes two files, a CSV table of records and a JSON document
bundling the run specification, the records, and provenance.  The CSV and
the "spec"/"records" parts of the JSON are byte-identical across reruns
with the same inputs; everything volatile (wall-clock time, host, versions)
is quarantined in the JSON "provenance" block and in the file names.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np


def _to_plain(value):
    """Coerce numpy scalars/arrays and paths into plain JSON-ready types."""
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_to_plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_to_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _to_plain(v) for k, v in value.items()}
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, float) and not np.isfinite(value):
        # JSON has no Infinity/NaN; keep the textual form round-trippable.
        return repr(value)
    return value


def canonical_json(obj) -> str:
    """Canonical serialization: sorted keys, fixed separators, plain types."""
    return json.dumps(_to_plain(obj), sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False)


def spec_hash(spec: dict) -> str:
    """First 8 hex digits of the SHA-256 of the canonical spec JSON."""
    return hashlib.sha256(canonical_json(spec).encode("utf-8")).hexdigest()[:8]


def utc_stamp(now: datetime | None = None) -> str:
    now = now or datetime.now(timezone.utc)
    return now.strftime("%Y%m%dT%H%M%SZ")


def _format_cell(value) -> str:
    """One CSV cell: shortest round-trip float form, empty for None."""
    if value is None:
        return ""
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        value = value.item()
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return ";".join(_format_cell(v) for v in value)
    return str(value)


def records_to_csv(records: list[dict], columns: list[str] | None = None) -> str:
    """Render records as CSV text: LF line endings, header always present.

    Column order is the first record's key order unless given explicitly;
    records missing a key emit an empty cell.
    """
    if columns is None:
        columns = []
        for rec in records:
            for key in rec:
                if key not in columns:
                    columns.append(key)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        writer.writerow([_format_cell(rec.get(col)) for col in columns])
    return buf.getvalue()


def provenance(resolved_config: dict | None = None) -> dict:
    """Volatile run metadata; the only place timestamps are allowed."""
    info = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "platform": platform.platform(),
        "argv": list(sys.argv),
    }
    if resolved_config is not None:
        info["config"] = _to_plain(resolved_config)
    return info


def resolve_out_dir(cli_out: str | None) -> Path:
    """Output directory: FUNNEL_LAB_OUT env var beats --out beats cwd."""
    env = os.environ.get("FUNNEL_LAB_OUT")
    if env:
        return Path(env)
    if cli_out:
        return Path(cli_out)
    return Path.cwd()


def write_run(subcommand: str, spec: dict, records: list[dict],
              out_dir: Path, columns: list[str] | None = None,
              resolved_config: dict | None = None) -> tuple[Path, Path]:
    """Write the CSV/JSON pair for one run and return their paths.

    File names carry the UTC stamp and the spec hash; their payloads do
    not repeat the stamp, so identical runs produce byte-identical bodies.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{subcommand}-{utc_stamp()}-{spec_hash(spec)}"
    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}.json"

    csv_path.write_text(records_to_csv(records, columns), encoding="utf-8",
                        newline="")
    doc = {
        "spec": _to_plain(spec),
        "records": _to_plain(records),
        "provenance": provenance(resolved_config),
    }
    json_path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n",
                         encoding="utf-8", newline="")
    return csv_path, json_path
