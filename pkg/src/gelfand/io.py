"""Plain-text exports: CSV (``%.17g``), JSON and gnuplot-ready columns."""

from __future__ import annotations

import io
import json
import math

import numpy as np

__all__ = [
    "format_float",
    "write_table",
    "trajectory_table",
    "trajectory_metadata",
    "asymptotic_table",
    "orbit_table",
    "curve_table",
    "dump_json",
    "FORMATS",
]

FORMATS = ("csv", "json", "gnuplot")


def format_float(x) -> str:
    """Round-trip representation; identical inputs give identical bytes."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def write_table(header, columns, fmt="csv", stream=None, metadata=None) -> str:
    """Render equal-length columns; returns the text and writes it to ``stream``."""
    cols = [np.asarray(c, dtype=float) for c in columns]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("columns must have equal length")
    buf = io.StringIO()
    if fmt == "csv":
        buf.write(",".join(header) + "\n")
        for i in range(n):
            buf.write(",".join(format_float(c[i]) for c in cols) + "\n")
    elif fmt == "gnuplot":
        if metadata:
            for k, v in metadata.items():
                buf.write(f"# {k}: {json.dumps(v, sort_keys=True)}\n")
        buf.write("# " + " ".join(header) + "\n")
        for i in range(n):
            buf.write(" ".join(format_float(c[i]) for c in cols) + "\n")
    elif fmt == "json":
        doc = {"metadata": metadata or {}, "columns": list(header),
               "data": {h: [_json_float(v) for v in c] for h, c in zip(header, cols)}}
        buf.write(dump_json(doc))
    else:
        raise ValueError(f"unknown format {fmt!r}")
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def _json_float(x):
    x = float(x)
    if math.isfinite(x):
        return x
    return None


def dump_json(doc) -> str:
    # repr-based float output in json is already round-trip exact
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def trajectory_metadata(traj) -> dict:
    return {
        "params": traj.params.to_dict(),
        "nonlinearity": traj.nl.to_dict(),
        "rho": traj.rho if math.isfinite(traj.rho) else None,
        "tol": traj.tol,
        "lambda": traj.lam,
    }


def trajectory_table(traj, log_r=None):
    """(header, columns) with r, u, u' at the solver steps or at ``log_r``."""
    if log_r is None:
        r, u, up = traj.samples()
    else:
        log_r = np.asarray(log_r, dtype=float)
        r = np.exp(log_r)
        u = traj.u_at_log_r(log_r)
        up = traj.uprime_at_log_r(log_r)
    return ("r", "u", "uprime"), (r, u, up)


def asymptotic_table(r, Z, u_approx):
    return ("r", "Z", "u_approx"), (r, Z, u_approx)


def orbit_table(orbit):
    return ("t", "x", "y"), (orbit.t, orbit.x, orbit.y)


def curve_table(curve):
    return ("rho", "lambda"), (curve.rho, curve.lam)
