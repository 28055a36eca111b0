"""Desk-scale verification studies: convergence orders, invariant drift, alpha scaling."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EnergyRootNotFound, IntegrationError, InvalidArgumentError, StudyDegenerateError
from .hamiltonian import HamiltonianSystem, as_state, get_problem
from .integrator import Mode, SolverConfig, StepFlag, as_mode, integrate, step_equip, step_fixed_alpha
from .tableau import build_family, gauss_tableau

ROUNDOFF_FLOOR = 1e-13
DEFAULT_HALVINGS = 3


def _system(problem):
    return problem if isinstance(problem, HamiltonianSystem) else get_problem(problem)


def _method(s):
    return gauss_tableau(s) if s == 1 else build_family(s)


def _initial(sys, y0):
    if y0 is None:
        if sys.default_y0 is None:
            raise InvalidArgumentError(f"{sys.name} has no default initial state; pass y0")
        y0 = sys.default_y0
    return as_state(sys, y0)


def _check_halving_grid(hs, what="step sizes"):
    hs = [float(h) for h in hs]
    if len(hs) < 4:
        raise InvalidArgumentError(f"need at least 4 {what}, got {len(hs)}")
    for a, b in zip(hs, hs[1:]):
        if not math.isclose(a / b, 2.0, rel_tol=1e-9):
            raise InvalidArgumentError(f"{what} must halve successively, got {a} -> {b}")
    return hs


def _n_steps(T, h):
    n = round(T / h)
    if n < 1 or not math.isclose(n * h, T, rel_tol=1e-9):
        raise InvalidArgumentError(f"final time {T} is not a whole number of steps of size {h}")
    return n


def _fmt_table(header, rows):
    cells = [header] + [[c if isinstance(c, str) else f"{c:.6e}" if isinstance(c, float) else str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells) + "\n"


@dataclass
class ConvergenceStudy:
    problem: str
    mode: Mode
    s: int
    T: float
    y0: np.ndarray
    hs: list
    errors: list
    reference: str
    slope: float
    intercept: float
    excluded: list = field(default_factory=list)
    # exponent d of the Gauss energy error is problem dependent; kept as metadata only
    energy_error_order: Optional[int] = None

    @property
    def local_slopes(self):
        e = np.log(self.errors)
        return list(np.diff(e) / np.diff(np.log(self.hs)))

    def to_dict(self):
        return {
            "problem": self.problem,
            "mode": str(self.mode),
            "s": self.s,
            "T": self.T,
            "y0": self.y0.tolist(),
            "reference": self.reference,
            "h": list(self.hs),
            "error": list(self.errors),
            "excluded_h": list(self.excluded),
            "slope": self.slope,
        }

    def to_text(self):
        head = f"# {self.problem} mode={self.mode} s={self.s} T={self.T:g} reference={self.reference}\n"
        rows = [[h, e, "excluded" if h in self.excluded else ""] for h, e in zip(self.hs, self.errors)]
        return head + _fmt_table(["h", "error", "note"], rows) + f"# fitted slope {self.slope:.4f}\n"


def reference_solution(sys, y0, T, s, h_min):
    """Analytic flow when available, else Gauss with s+2 stages at ``h_min / 64``."""
    if sys.analytic_flow is not None:
        return np.asarray(sys.analytic_flow(y0, T), dtype=float), "analytic"
    s_ref = min(s + 2, 10)
    h_ref = h_min / 64
    traj = integrate(sys, gauss_tableau(s_ref), y0, h_ref, _n_steps(T, h_ref), "gauss")
    return traj.y[-1], f"gauss(s={s_ref}, h={h_ref:g})"


def run_convergence(problem, mode, s, hs, T, y0=None, cfg=None, jobs=1, max_halvings=DEFAULT_HALVINGS,
                    floor=ROUNDOFF_FLOOR):
    """Global error at time ``T`` over a halving grid of step sizes, with log-log slope.

    Points with error at or below ``floor`` are excluded from the
    least-squares fit (and listed in ``excluded``).  Independent step sizes
    are run on ``jobs`` worker threads.
    """
    sys = _system(problem)
    mode = as_mode(mode)
    hs = _check_halving_grid(hs)
    y0 = _initial(sys, y0)
    for h in hs:
        _n_steps(T, h)
    method = _method(s)
    y_ref, ref_name = reference_solution(sys, y0, T, s, hs[-1])

    def cell(h):
        traj = integrate(sys, method, y0, h, _n_steps(T, h), mode, cfg, max_halvings=max_halvings)
        return float(np.max(np.abs(traj.y[-1] - y_ref)))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            errors = list(pool.map(cell, hs))
    else:
        errors = [cell(h) for h in hs]

    keep = [i for i, e in enumerate(errors) if e > floor]
    excluded = [hs[i] for i in range(len(hs)) if i not in keep]
    if len(keep) < 2:
        raise StudyDegenerateError(
            f"only {len(keep)} error(s) above the roundoff floor {floor:g}; use larger step sizes"
        )
    slope, intercept = np.polyfit(np.log([hs[i] for i in keep]), np.log([errors[i] for i in keep]), 1)
    return ConvergenceStudy(
        problem=sys.name, mode=mode, s=s, T=float(T), y0=y0, hs=hs, errors=errors, reference=ref_name,
        slope=float(slope), intercept=float(intercept), excluded=excluded,
    )


@dataclass
class DriftReport:
    problem: str
    mode: Mode
    s: int
    h: float
    n_steps: int
    energy_drift: np.ndarray
    invariant_drift: dict
    alpha: np.ndarray
    flags: list
    complete: bool = True

    @property
    def max_energy_drift(self):
        return float(np.max(np.abs(self.energy_drift)))

    @property
    def max_invariant_drift(self):
        return {k: float(np.max(np.abs(v))) for k, v in self.invariant_drift.items()}

    def count(self, flag):
        return sum(1 for f in self.flags if f & flag)

    @classmethod
    def from_trajectory(cls, traj, n_steps, complete=True):
        return cls(
            problem=traj.problem, mode=traj.mode, s=traj.s, h=traj.h, n_steps=n_steps,
            energy_drift=traj.energy_error, invariant_drift=dict(traj.invariant_drift),
            alpha=traj.alpha, flags=list(traj.flags), complete=complete,
        )

    def to_dict(self):
        return {
            "problem": self.problem,
            "mode": str(self.mode),
            "s": self.s,
            "h": self.h,
            "n_steps": self.n_steps,
            "complete": self.complete,
            "max_energy_drift": self.max_energy_drift,
            "max_invariant_drift": self.max_invariant_drift,
            "energy_drift": self.energy_drift.tolist(),
            "invariant_drift": {k: v.tolist() for k, v in self.invariant_drift.items()},
            "alpha": [None if math.isnan(a) else a for a in self.alpha],
        }

    def to_text(self):
        rows = [["energy", self.max_energy_drift]] + [[k, v] for k, v in self.max_invariant_drift.items()]
        head = f"# {self.problem} mode={self.mode} s={self.s} h={self.h:g} steps={self.n_steps}\n"
        return head + _fmt_table(["quantity", "max |drift|"], rows)


def run_drift(problem, mode, s, h, n_steps, y0=None, cfg=None, max_halvings=DEFAULT_HALVINGS):
    """Energy and quadratic-invariant drift over ``n_steps`` steps.

    If the integration fails the :class:`IntegrationError` is re-raised with
    a partial report attached as ``exc.report``.
    """
    sys = _system(problem)
    y0 = _initial(sys, y0)
    try:
        traj = integrate(sys, _method(s), y0, h, n_steps, mode, cfg, max_halvings=max_halvings)
    except IntegrationError as exc:
        exc.report = DriftReport.from_trajectory(exc.trajectory, n_steps, complete=False)
        raise
    return DriftReport.from_trajectory(traj, n_steps)


@dataclass
class AlphaScalingTable:
    problem: str
    s: int
    y0: np.ndarray
    hs: list
    alphas: list
    gauss_residuals: list
    energy_tol: float

    @property
    def scaled(self):
        return [a / (h * h) for a, h in zip(self.alphas, self.hs)]

    @property
    def ratios(self):
        """``alpha0(h_i) / alpha0(h_{i+1})``; NaN where alpha0 vanishes."""
        out = []
        for a, b in zip(self.alphas, self.alphas[1:]):
            out.append(a / b if b != 0 else math.nan)
        return out

    @property
    def resolved(self):
        # relative accuracy of alpha0 is about energy_tol / |g(0, h)|; ask for 1%
        return [abs(g) >= 1e2 * self.energy_tol for g in self.gauss_residuals]

    def to_dict(self):
        return {
            "problem": self.problem,
            "s": self.s,
            "y0": self.y0.tolist(),
            "energy_tol": self.energy_tol,
            "h": list(self.hs),
            "alpha0": list(self.alphas),
            "alpha0_over_h2": self.scaled,
            "gauss_energy_residual": list(self.gauss_residuals),
            "resolved": self.resolved,
            "ratios": [None if math.isnan(r) else r for r in self.ratios],
        }

    def to_text(self):
        rows = [[h, a, a_s, g, "" if ok else "unresolved"]
                for h, a, a_s, g, ok in zip(self.hs, self.alphas, self.scaled, self.gauss_residuals, self.resolved)]
        head = f"# {self.problem} s={self.s} y0={self.y0.tolist()}\n"
        return head + _fmt_table(["h", "alpha0", "alpha0/h^2", "g(0,h)", "note"], rows)


def run_alpha_scaling(problem, s, hs, y0=None, cfg=None):
    """Energy-preserving alpha0(h) from one state over a halving grid.

    The default tolerance is ``energy_tol = 1e-15`` because alpha0 is only as
    accurate as ``energy_tol / |g(0, h)|``; rows where the Gauss energy
    residual is within two decades of the tolerance are marked unresolved.
    """
    sys = _system(problem)
    hs = _check_halving_grid(hs)
    y0 = _initial(sys, y0)
    cfg = cfg or SolverConfig(energy_tol=1e-15)
    family = build_family(s)
    alphas, g0s = [], []
    for h in hs:
        g0s.append(step_fixed_alpha(sys, family, y0, h, 0.0, cfg).g_residual)
        try:
            out = step_equip(sys, family, y0, h, cfg)
        except EnergyRootNotFound as exc:
            exc.h = h
            raise
        alphas.append(0.0 if out.flags & StepFlag.ENERGY_EXACTLY_FLAT else out.alpha_used)
    return AlphaScalingTable(problem=sys.name, s=s, y0=y0, hs=hs, alphas=alphas, gauss_residuals=g0s,
                             energy_tol=cfg.energy_tol)
