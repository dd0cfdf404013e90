"""Versioned file formats for run outputs, plus the run manifest.

Every delimited artifact starts with a ``# schema=...`` line (and, where
useful, a ``# meta=...`` JSON line) followed by a plain CSV header and
rows; JSON artifacts carry the schema under the ``"schema"`` key. The
schema tags are the compatibility contract for downstream consumers:
readers must refuse on mismatch rather than guess.

All writers are atomic: content goes to a temporary file in the target
directory and is renamed into place.
"""

from __future__ import annotations

import json
import os
import struct
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .lattice import Distribution, Volume, ENUMERATION_VERSION

TRACE_SCHEMA = "ipslab.trace.v1"
SITE_TABLE_SCHEMA = "ipslab.site-tables.v1"
VERIFY_SCHEMA = "ipslab.verify-report.v1"
AUDIT_SCHEMA = "ipslab.rate-audit.v1"
CYLINDER_SCHEMA = "ipslab.cylinder-estimates.v1"
MASS_FLOOR_SCHEMA = "ipslab.mass-floor.v1"
SHELL_SCHEMA = "ipslab.shell-table.v1"
SEQUENCE_SCHEMA = "ipslab.sequence-report.v1"
MANIFEST_SCHEMA = "ipslab.manifest.v1"
DIST_MAGIC = b"IPSDIST1"


def _atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_bytes(path, blob: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, schema: str, columns, rows, meta: dict | None = None) -> None:
    """Schema-tagged CSV: comment lines, then header, then data rows."""
    lines = [f"# schema={schema}"]
    if meta is not None:
        lines.append(f"# meta={json.dumps(meta, sort_keys=True)}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _jsonable(obj):
    """Fallback encoder for numpy scalars and arrays."""
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_json(path, schema: str, payload: dict) -> None:
    body = {"schema": schema}
    body.update(payload)
    _atomic_write_text(
        path, json.dumps(body, indent=2, sort_keys=True, default=_jsonable) + "\n"
    )


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


# -- specific artifact writers ---------------------------------------------------


def write_trace_csv(path, trace, meta: dict | None = None) -> None:
    from .entropy import TRACE_COLUMNS

    rows = [{c: getattr(r, c) for c in TRACE_COLUMNS} for r in trace.rows]
    write_csv(path, TRACE_SCHEMA, TRACE_COLUMNS, rows, meta=meta)


def write_site_tables(path, trace, meta: dict | None = None) -> None:
    payload = {"tables": trace.site_table.to_json()}
    if meta:
        payload["meta"] = meta
    write_json(path, SITE_TABLE_SCHEMA, payload)


def write_verify_report(path, results, profile: str, seed: int) -> None:
    write_json(
        path,
        VERIFY_SCHEMA,
        {
            "profile": profile,
            "seed": seed,
            "all_pass": all(r.passed for r in results),
            "results": [r.to_json() for r in results],
        },
    )


def write_audit_report(path, report, meta: dict | None = None) -> None:
    payload = report.to_json()
    if meta:
        payload["meta"] = meta
    write_json(path, AUDIT_SCHEMA, payload)


def write_cylinder_csv(path, table, meta: dict | None = None) -> None:
    base = {"window": list(table.window), "t": table.t, "n_traj": table.n_traj,
            "master_seed": table.master_seed}
    if meta:
        base.update(meta)
    write_csv(
        path,
        CYLINDER_SCHEMA,
        ("pattern", "count", "p_hat", "std_err"),
        table.rows(),
        meta=base,
    )


def write_mass_floor_csv(path, scan, meta: dict | None = None) -> None:
    base = {"window": list(scan.window), "tau": scan.tau,
            "empirical_floor": scan.empirical_floor}
    if meta:
        base.update(meta)
    rows = [
        {
            "t": r.t,
            "init_label": r.init_label,
            "floor": r.floor,
            "argmin_pattern": r.argmin_pattern,
            "std_err": r.std_err,
            "method": r.method,
        }
        for r in scan.rows
    ]
    write_csv(
        path,
        MASS_FLOOR_SCHEMA,
        ("t", "init_label", "floor", "argmin_pattern", "std_err", "method"),
        rows,
        meta=base,
    )


def write_shell_csv(path, table, meta: dict | None = None) -> None:
    base = {
        "d": table.d,
        "a": table.a,
        "n": table.n,
        "c_d": table.c_d,
        "interior_sum": table.interior_sum,
        "interior_bound": table.interior_bound,
        "boundary_sqrt_sum": table.boundary_sqrt_sum,
        "boundary_bound": table.boundary_bound,
    }
    if meta:
        base.update(meta)
    write_csv(path, SHELL_SCHEMA, ("k", "shell_size", "alpha"), table.rows(), meta=base)


# -- dense distribution import/export ---------------------------------------------


def write_distribution(path, dist: Distribution, volume: Volume) -> None:
    """Binary vector with a self-describing header."""
    header = {
        "d": volume.d,
        "side": volume.side,
        "q": volume.q,
        "boundary": volume.boundary,
        "enumeration": ENUMERATION_VERSION,
        "n": int(dist.weights.size),
    }
    blob = json.dumps(header, sort_keys=True).encode()
    out = DIST_MAGIC + struct.pack("<I", len(blob)) + blob + dist.weights.tobytes()
    _atomic_write_bytes(path, out)


def read_distribution(path) -> tuple[dict, Distribution]:
    raw = Path(path).read_bytes()
    if raw[: len(DIST_MAGIC)] != DIST_MAGIC:
        raise ValueError(f"{path}: not a distribution file")
    off = len(DIST_MAGIC)
    (hlen,) = struct.unpack_from("<I", raw, off)
    off += 4
    header = json.loads(raw[off: off + hlen].decode())
    off += hlen
    if header["enumeration"] != ENUMERATION_VERSION:
        raise ValueError(
            f"{path}: enumeration version {header['enumeration']} != {ENUMERATION_VERSION}"
        )
    weights = np.frombuffer(raw[off:], dtype=np.float64, count=header["n"])
    n_sites = header["side"] ** header["d"]
    return header, Distribution(header["q"], n_sites, weights)


def write_distribution_json(path, dist: Distribution, volume: Volume) -> None:
    write_json(
        path,
        "ipslab.distribution.v1",
        {
            "d": volume.d,
            "side": volume.side,
            "q": volume.q,
            "boundary": volume.boundary,
            "enumeration": ENUMERATION_VERSION,
            "weights": [float(w) for w in dist.weights],
        },
    )


# -- manifest ----------------------------------------------------------------------


def write_manifest(out_dir, command: str, config: dict, seeds: dict, extra: dict | None = None) -> None:
    """Everything needed to reproduce the run's outputs bit-for-bit."""
    import scipy

    from . import __version__

    payload = {
        "command": command,
        "config": config,
        "seeds": seeds,
        "versions": {
            "ipslab": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": sys.version.split()[0],
        },
        "enumeration": ENUMERATION_VERSION,
        "argv": sys.argv,
        "written_at": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        payload.update(extra)
    write_json(Path(out_dir) / "manifest.json", MANIFEST_SCHEMA, payload)
