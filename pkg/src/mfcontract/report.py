"""CSV and text outputs.

Floats are written with ``repr``-exact 17 significant digits, so two runs
that produce the same numbers produce byte-identical files.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .evaluator import ICReport, MartingaleDiagnostic
from .hamiltonian import optimal_mitigation_shift
from .incentives import IncentivePolicy
from .model import MarketParams
from .moments import MomentFlow


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> dict[str, np.ndarray]:
    """Numeric CSV as a dict of float columns."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = [[float(v) for v in row] for row in r if row]
    arr = np.array(data, dtype=float).reshape(-1, len(header))
    return {name: arr[:, i] for i, name in enumerate(header)}


def write_coefficients(path, coeffs) -> Path:
    return write_csv(path, ["t", "h0", "h1", "h2", "h_rate"],
                     zip(coeffs.grid, coeffs.h0, coeffs.h1, coeffs.h2, coeffs.h_rate))


def write_policy(path, pol: IncentivePolicy, coeffs, p: MarketParams) -> Path:
    t = coeffs.grid
    z = np.asarray(pol.z_of_t(t), dtype=float)
    u = np.asarray(pol.u_of_t(t, -1.0), dtype=float)
    a1 = optimal_mitigation_shift(p) - u
    return write_csv(path, ["t", "z", "u_minus1", "alpha0", "alpha1", "h_rate"],
                     zip(t, z, u, z, a1, coeffs.h_rate))


def write_moments(path, flow: MomentFlow, coeffs) -> Path:
    intensity = coeffs.rate_at(flow.grid) * flow.v
    return write_csv(path, ["t", "m", "v", "q", "intensity"], zip(flow.grid, flow.m, flow.v, flow.q, intensity))


def write_moment_comparison(path, rows) -> Path:
    names = rows.dtype.names
    return write_csv(path, names, ([r[n] for n in names] for r in rows))


def write_ic_report(path, rep: ICReport) -> Path:
    rows = [("optimal", 0.0, 0.0, rep.optimal_value.mean, rep.optimal_value.std_error, 0.0, 0.0, True)]
    rows += [(d.label, d.eps0, d.eps1, d.value.mean, d.value.std_error, d.gap, d.gap_se, d.passed)
             for d in rep.deviations]
    return write_csv(path, ["policy", "eps0", "eps1", "value", "se", "gap", "gap_se", "passed"], rows)


def write_martingale(path, diag: MartingaleDiagnostic) -> Path:
    return write_csv(path, ["t", "increment", "se"], zip(diag.times, diag.increments, diag.std_errors))


def write_summary(path, items: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{k}={fmt(v)}\n" for k, v in items.items()))
    return path


def read_summary(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k] = v
    return out


def write_paths(path, ens) -> Path:
    """Per-path terminal values; large, so only written on request."""
    idx = np.arange(ens.n_paths)
    return write_csv(path, ["path", "x_terminal", "y_terminal", "jump_count"],
                     zip(idx, ens.x_terminal, ens.y_terminal, ens.jump_count))
