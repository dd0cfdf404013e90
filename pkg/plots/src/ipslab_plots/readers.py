"""Schema-checked readers for ipslab artifact files.

Figures are pure views: these readers parse the delimited/JSON formats
and refuse anything whose schema tag does not match, so a rendering can
never silently consume an incompatible artifact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

TRACE_SCHEMA = "ipslab.trace.v1"
SITE_TABLE_SCHEMA = "ipslab.site-tables.v1"
MASS_FLOOR_SCHEMA = "ipslab.mass-floor.v1"
SHELL_SCHEMA = "ipslab.shell-table.v1"


class SchemaMismatch(Exception):
    """The artifact does not carry the expected schema tag."""


def _read_tagged_csv(path, expected_schema: str):
    """Parse ``# schema=`` / ``# meta=`` comments, header, and float-ish rows."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# schema="):
        raise SchemaMismatch(f"{path}: missing schema line")
    schema = lines[0].split("=", 1)[1].strip()
    if schema != expected_schema:
        raise SchemaMismatch(f"{path}: schema {schema!r}, expected {expected_schema!r}")
    meta = {}
    idx = 1
    if idx < len(lines) and lines[idx].startswith("# meta="):
        meta = json.loads(lines[idx].split("=", 1)[1])
        idx += 1
    if idx >= len(lines):
        raise SchemaMismatch(f"{path}: missing header row")
    header = lines[idx].split(",")
    rows = [line.split(",") for line in lines[idx + 1:] if line.strip()]
    columns = {}
    for j, name in enumerate(header):
        values = [row[j] for row in rows]
        try:
            columns[name] = np.array([float(v) for v in values])
        except ValueError:
            columns[name] = np.array(values)
    return meta, columns


def read_trace(path):
    """Trace CSV -> (meta, columns); requires the full column set."""
    meta, cols = _read_tagged_csv(path, TRACE_SCHEMA)
    required = {"t", "h", "g_direct", "g_bulk", "g_boundary",
                "alpha_sum", "beta_sum", "gamma_beta_sum"}
    missing = required - set(cols)
    if missing:
        raise SchemaMismatch(f"{path}: missing columns {sorted(missing)}")
    return meta, cols


def read_mass_floor(path):
    meta, cols = _read_tagged_csv(path, MASS_FLOOR_SCHEMA)
    missing = {"t", "init_label", "floor", "std_err"} - set(cols)
    if missing:
        raise SchemaMismatch(f"{path}: missing columns {sorted(missing)}")
    return meta, cols


def read_shell_table(path):
    meta, cols = _read_tagged_csv(path, SHELL_SCHEMA)
    missing = {"k", "shell_size", "alpha"} - set(cols)
    if missing:
        raise SchemaMismatch(f"{path}: missing columns {sorted(missing)}")
    return meta, cols


def read_site_tables(path):
    blob = json.loads(Path(path).read_text())
    if blob.get("schema") != SITE_TABLE_SCHEMA:
        raise SchemaMismatch(
            f"{path}: schema {blob.get('schema')!r}, expected {SITE_TABLE_SCHEMA!r}"
        )
    tables = blob["tables"]
    for key in ("window", "coords", "gamma", "alpha_final", "beta_final"):
        if key not in tables:
            raise SchemaMismatch(f"{path}: site tables missing {key!r}")
    return blob.get("meta", {}), tables
