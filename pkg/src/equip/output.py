"""CSV / JSON writers for trajectories and study results.

Floats are written with 17 significant digits so files round-trip exactly.
A config echo goes in a leading ``#`` comment (CSV) or a ``config`` key
(JSON); nothing time-dependent is written, so identical runs give identical
bytes.
"""
from __future__ import annotations

import json
import math

import numpy as np


def fmt_float(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _json_value(x):
    """JSON text for nested lists of numbers with 17 significant digits."""
    if isinstance(x, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(v)}" for k, v in x.items()) + "}"
    if isinstance(x, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_value(v) for v in x) + "]"
    if isinstance(x, (bool, np.bool_)) or x is None or isinstance(x, str):
        return json.dumps(x if not isinstance(x, np.bool_) else bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    xf = float(x)
    if not math.isfinite(xf):
        return "null"
    return fmt_float(xf)


def dumps(obj):
    return _json_value(obj) + "\n"


def state_labels(m):
    return [f"q{i + 1}" for i in range(m)] + [f"p{i + 1}" for i in range(m)]


def trajectory_table(sys, traj):
    """Columns ``k,t,energy_err,alpha,<invariants...>,<state...>`` and the row data."""
    labels = sys.invariant_labels
    columns = ["k", "t", "energy_err", "alpha", *labels, *state_labels(sys.m)]
    rows = []
    for k in range(len(traj.t)):
        row = [k, traj.t[k], traj.energy_error[k], traj.alpha[k]]
        row += [traj.invariant_drift[lab][k] for lab in labels]
        row += list(traj.y[k])
        rows.append(row)
    return columns, rows


def _cell(v):
    return str(v) if isinstance(v, (int, np.integer)) else fmt_float(v)


def render_csv(config, columns, rows):
    lines = ["# config: " + json.dumps(config, sort_keys=True), ",".join(columns)]
    lines += [",".join(_cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def render_json(config, columns, rows):
    return dumps({"config": config, "columns": columns, "rows": rows})


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
