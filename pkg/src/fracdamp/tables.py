"""Result tables, config hashing, and deterministic CSV/JSON output.

CSV layout: RFC-4180 quoting, '.' decimal separator, column names on the
first line, units on the second, then data rows.  Every file embeds the
config hash (tables carry it as their final column, metadata as a key),
and identical config + seed reproduces byte-identical tables; wall-clock
information lives only in the metadata sidecar.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

__all__ = [
    "canonical_hash",
    "ResultTable",
    "SchemaError",
    "write_metadata",
    "read_metadata",
    "verify_output_dir",
    "CODE_VERSION",
]

CODE_VERSION = "0.1.0"


class SchemaError(ValueError):
    """A table file does not match the expected layout."""


def canonical_hash(obj) -> str:
    """Stable 16-hex digest of a JSON-serializable object."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".12g")
    return str(value)


@dataclass
class ResultTable:
    """Rectangular numeric records with mandatory per-column units."""

    name: str
    columns: list            # [(name, unit), ...]
    rows: list = field(default_factory=list)
    config_hash: str = ""

    def add_row(self, *values):
        if len(values) != len(self.columns):
            raise SchemaError(
                f"row of width {len(values)} against {len(self.columns)} columns"
            )
        self.rows.append(tuple(values))

    def column(self, name):
        idx = [c for c, _ in self.columns].index(name)
        return [row[idx] for row in self.rows]

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL)
        writer.writerow([c for c, _ in self.columns] + ["config_hash"])
        writer.writerow([u for _, u in self.columns] + ["-"])
        for row in self.rows:
            writer.writerow([_format(v) for v in row] + [self.config_hash])
        return buf.getvalue()

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv_text(), newline="")
        return path

    @classmethod
    def from_csv(cls, path) -> "ResultTable":
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            lines = list(reader)
        if len(lines) < 2:
            raise SchemaError(f"{path}: missing header or units row")
        header, units = lines[0], lines[1]
        if len(header) != len(units):
            raise SchemaError(f"{path}: header/units width mismatch")
        if header[-1] != "config_hash":
            raise SchemaError(f"{path}: missing config_hash column")
        width = len(header)
        rows = []
        config_hash = ""
        for i, raw in enumerate(lines[2:], start=3):
            if len(raw) != width:
                raise SchemaError(f"{path}: ragged row at line {i}")
            config_hash = raw[-1]
            parsed = []
            for cell in raw[:-1]:
                try:
                    parsed.append(float(cell))
                except ValueError:
                    parsed.append(cell)
            rows.append(tuple(parsed))
        return cls(
            name=path.stem,
            columns=list(zip(header[:-1], units[:-1])),
            rows=rows,
            config_hash=config_hash,
        )


def write_metadata(path, config: dict, config_hash: str, extra: dict | None = None) -> Path:
    """JSON sidecar with the resolved config, its hash, and a timestamp."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "config": config,
        "config_hash": config_hash,
        "code_version": CODE_VERSION,
        "written_at": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        payload.update(extra)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")
    return path


def read_metadata(path) -> dict:
    return json.loads(Path(path).read_text())


def verify_output_dir(out_dir) -> dict:
    """Re-check the config hashes embedded in an output directory.

    The metadata config must re-hash to its recorded value, and every
    table must carry that same hash.  Returns a report dict with an
    ``ok`` flag and per-file findings.
    """
    out_dir = Path(out_dir)
    findings = []
    ok = True
    meta_path = out_dir / "metadata.json"
    if not meta_path.exists():
        return {"ok": False, "findings": [f"{meta_path} missing"]}
    meta = read_metadata(meta_path)
    expected = meta.get("config_hash", "")
    recomputed = canonical_hash(meta.get("config", {}))
    if recomputed != expected:
        ok = False
        findings.append(
            f"metadata hash mismatch: recorded {expected}, recomputed {recomputed}"
        )
    for csv_path in sorted(out_dir.glob("*.csv")):
        try:
            table = ResultTable.from_csv(csv_path)
        except SchemaError as exc:
            ok = False
            findings.append(str(exc))
            continue
        if table.rows and table.config_hash != expected:
            ok = False
            findings.append(
                f"{csv_path.name}: embedded hash {table.config_hash} != {expected}"
            )
    return {"ok": ok, "findings": findings, "config_hash": expected}
