"""One-step maps of the alpha-family and the energy-preserving (EQUIP) controller.

``step_fixed_alpha`` advances with the tableau ``A(alpha)`` for a given alpha.
``step_equip`` additionally searches alpha so that the energy after the step
matches a reference value (by default the energy of the step's initial
state; :func:`integrate` anchors every step to the energy of the first state
of the trajectory).  The two unknown blocks of the coupled system, the stages
and alpha, are handled by nesting: a scalar bracketing root-finder over alpha
wraps a simplified-Newton stage solve.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import EnergyRootNotFound, IntegrationError, InvalidArgumentError, StageSolverFailure
from .hamiltonian import apply_j, as_state, energy, hessian, vector_field
from .tableau import ButcherTableau, TableauFamily, tableau_at

log = logging.getLogger(__name__)

JACOBIAN_MODES = ("exact-if-provided", "finite-difference")


@dataclass(frozen=True)
class SolverConfig:
    stage_tol: float = 1e-13
    stage_max_iter: int = 50
    energy_tol: float = 1e-12
    alpha_max: float = 0.5
    alpha_max_iter: int = 30
    jacobian_mode: str = "exact-if-provided"
    fd_epsilon: Optional[float] = None  # None: cbrt(machine eps) * max(1, |y|)

    def __post_init__(self):
        for name in ("stage_tol", "energy_tol", "alpha_max"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidArgumentError(f"{name} must be positive and finite, got {value}")
        for name in ("stage_max_iter", "alpha_max_iter"):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"{name} must be at least 1")
        if self.jacobian_mode not in JACOBIAN_MODES:
            raise InvalidArgumentError(f"jacobian_mode must be one of {JACOBIAN_MODES}, got {self.jacobian_mode!r}")
        if self.fd_epsilon is not None and not self.fd_epsilon > 0:
            raise InvalidArgumentError("fd_epsilon must be positive")


class StepFlag(enum.Flag):
    NONE = 0
    CONVERGED = enum.auto()
    ENERGY_EXACTLY_FLAT = enum.auto()
    ALPHA_CLIPPED = enum.auto()
    STEP_HALVED = enum.auto()


@dataclass(frozen=True)
class StageVector:
    """Internal stages ``Y`` (shape ``(s, 2m)``) with solver diagnostics."""

    Y: np.ndarray
    iterations: int = 0
    residual: float = 0.0
    F: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass(frozen=True)
class StepOutcome:
    y1: np.ndarray
    alpha_used: float
    g_residual: float
    stage_iterations: int
    alpha_iterations: int
    flags: StepFlag
    stages: Optional[StageVector] = field(default=None, repr=False)


@dataclass(frozen=True)
class Mode:
    kind: str
    alpha: float = 0.0

    KINDS = ("gauss", "fixed_alpha", "equip")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise InvalidArgumentError(f"mode must be one of {self.KINDS}, got {self.kind!r}")
        if not math.isfinite(self.alpha):
            raise InvalidArgumentError("alpha must be finite")

    @classmethod
    def gauss(cls):
        return cls("gauss")

    @classmethod
    def fixed_alpha(cls, alpha):
        return cls("fixed_alpha", float(alpha))

    @classmethod
    def equip(cls):
        return cls("equip")

    def __str__(self):
        return f"fixed_alpha({self.alpha:g})" if self.kind == "fixed_alpha" else self.kind


def as_mode(mode):
    if isinstance(mode, Mode):
        return mode
    if isinstance(mode, str):
        kind = mode.replace("-", "_")
        if kind == "fixed_alpha":
            raise InvalidArgumentError("fixed_alpha mode needs a value: use Mode.fixed_alpha(alpha)")
        return Mode(kind)
    if isinstance(mode, tuple) and len(mode) == 2:
        return Mode(mode[0].replace("-", "_"), float(mode[1]))
    raise InvalidArgumentError(f"cannot interpret mode {mode!r}")


def _structured_jacobian(sys, y, cfg):
    """``J * Hess H(y)`` as a dense ``2m x 2m`` matrix."""
    Hm = hessian(sys, y, cfg.jacobian_mode, cfg.fd_epsilon)
    return apply_j(Hm.T).T  # rows of J Hm: (Hm[m:], -Hm[:m])


def _newton_matrix(A, h, jacs):
    """``I - h (A x I) blockdiag(jacs)``; ``jacs`` is one matrix or one per stage."""
    s = A.shape[0]
    if isinstance(jacs, np.ndarray) and jacs.ndim == 2:
        return np.eye(s * jacs.shape[0]) - h * np.kron(A, jacs)
    n = jacs[0].shape[0]
    M = np.eye(s * n)
    for j in range(s):
        M[:, j * n:(j + 1) * n] -= h * np.kron(A[:, j:j + 1], jacs[j])
    return M


def solve_stages(sys, t, y0, h, cfg=None, guess=None, jacobian=None, lu=None):
    """Solve ``Y = e x y0 + h (A x I) F(Y)`` by simplified Newton.

    The iteration matrix ``I - h (A x J Hess H(y0))`` is factored once; if the
    residual stalls it is rebuilt once from the per-stage Jacobians.
    ``jacobian`` (``J Hess H(y0)``) and ``lu`` (a factorisation to reuse) may
    be supplied by callers that solve several nearby systems.

    Returns a :class:`StageVector`.  Raises :class:`StageSolverFailure` when
    the residual stays above ``stage_tol * max(1, |y0|_inf)``.
    """
    cfg = cfg or SolverConfig()
    h = float(h)
    if h == 0.0 or not math.isfinite(h):
        raise InvalidArgumentError(f"step size must be finite and non-zero, got {h}")
    y0 = np.asarray(y0, dtype=float)
    A = np.asarray(t.A)
    s, n = A.shape[0], y0.size
    tol = cfg.stage_tol * max(1.0, float(np.max(np.abs(y0))))

    if guess is not None:
        Z = np.array(guess.Y if isinstance(guess, StageVector) else guess, dtype=float).reshape(s, n) - y0
    else:
        Z = h * np.sum(A, axis=1)[:, None] * vector_field(sys, y0)[None, :]

    if lu is None:
        if jacobian is None:
            jacobian = _structured_jacobian(sys, y0, cfg)
        lu = lu_factor(_newton_matrix(A, h, jacobian))
    refreshed = False
    prev = math.inf
    first = None
    rnorm = math.inf
    for it in range(cfg.stage_max_iter + 1):
        F = vector_field(sys, y0 + Z)
        R = Z - h * (A @ F)
        rnorm = float(np.max(np.abs(R)))
        if rnorm <= tol:
            return StageVector(Y=y0 + Z, iterations=it, residual=rnorm, F=F)
        if first is None:
            first = rnorm
        if it == cfg.stage_max_iter or not rnorm < 1e6 * max(first, 1.0):
            break
        if rnorm > 0.5 * prev and not refreshed:
            jacs = [_structured_jacobian(sys, Yj, cfg) for Yj in y0 + Z]
            lu = lu_factor(_newton_matrix(A, h, jacs))
            refreshed = True
            log.debug("stage Newton stalled at residual %.3e; Jacobian refreshed", rnorm)
        prev = rnorm
        Z = Z - lu_solve(lu, R.ravel()).reshape(s, n)
    raise StageSolverFailure(
        f"stage Newton did not reach {tol:.3e} after {it} iterations (residual {rnorm:.3e})",
        residual=rnorm,
        iterations=it,
    )


def _update(t, y0, h, stages):
    return y0 + h * (t.b @ stages.F)


def _tableau_for(family, alpha):
    if isinstance(family, TableauFamily):
        return tableau_at(family, alpha)
    if isinstance(family, ButcherTableau):
        if alpha != 0.0:
            raise InvalidArgumentError("a plain tableau only supports alpha = 0; build a TableauFamily")
        return family
    raise InvalidArgumentError(f"expected a TableauFamily or ButcherTableau, got {type(family).__name__}")


def step_fixed_alpha(sys, family, y0, h, alpha, cfg=None, guess=None):
    """One step ``y1 = y0 + h sum_i b_i f(Y_i)`` with the tableau ``A(alpha)``."""
    cfg = cfg or SolverConfig()
    y0 = as_state(sys, y0)
    t = _tableau_for(family, alpha)
    stages = solve_stages(sys, t, y0, h, cfg, guess=guess)
    y1 = _update(t, y0, h, stages)
    return StepOutcome(
        y1=y1,
        alpha_used=float(alpha),
        g_residual=energy(sys, y1) - energy(sys, y0),
        stage_iterations=stages.iterations,
        alpha_iterations=0,
        flags=StepFlag.CONVERGED,
        stages=stages,
    )


def _bracket_near_zero(probes):
    """Tightest sign-change bracket adjacent to the probe closest to alpha = 0."""
    pts = sorted(probes)
    best = None
    for (a, ga), (b, gb) in zip(pts, pts[1:]):
        if ga * gb < 0:
            dist = min(abs(a), abs(b))
            if best is None or dist < best[0]:
                best = (dist, (a, ga), (b, gb))
    return None if best is None else best[1:]


def step_equip(sys, family, y0, h, cfg=None, anchor=None, alpha_scale=None, guess=None):
    """One energy-preserving step: find alpha with ``H(y1(alpha)) = anchor``.

    ``anchor`` defaults to ``H(y0)``.  ``alpha_scale`` is the constant ``c`` in
    the first probe ``alpha = c h**2``; passing the previous step's
    ``alpha_used / h**2`` makes that probe nearly exact.

    If ``|g(0)| <= energy_tol`` the Gauss step is accepted as is and flagged
    ``ENERGY_EXACTLY_FLAT`` (this always happens for quadratic H).  Otherwise
    the root is bracketed inside ``[-alpha_max, alpha_max]`` and refined by
    regula falsi with the Illinois modification.

    Raises
    ------
    EnergyRootNotFound
        No sign change of g in the trust region, or the refinement stalled
        above ``energy_tol``.  ``probes`` lists the evaluated ``(alpha, g)``.
    """
    cfg = cfg or SolverConfig()
    if not isinstance(family, TableauFamily):
        raise InvalidArgumentError("energy-preserving steps need a TableauFamily (s >= 2)")
    y0 = as_state(sys, y0)
    h = float(h)
    H0 = energy(sys, y0) if anchor is None else float(anchor)
    tol = cfg.energy_tol
    jac = _structured_jacobian(sys, y0, cfg)
    lu = lu_factor(_newton_matrix(family.A0, h, jac))

    cache = {}  # alpha -> (g, stages, y1)
    total_iters = 0

    def g(alpha, warm):
        nonlocal total_iters
        t = tableau_at(family, alpha)
        st = solve_stages(sys, t, y0, h, cfg, guess=warm, jacobian=jac, lu=lu)
        total_iters += st.iterations
        y1 = _update(t, y0, h, st)
        val = energy(sys, y1) - H0
        cache[alpha] = (val, st, y1)
        return val

    def nearest_stages(alpha):
        key = min(cache, key=lambda a: abs(a - alpha))
        return cache[key][1]

    def outcome(alpha, n_alpha, flags):
        val, st, y1 = cache[alpha]
        return StepOutcome(y1=y1, alpha_used=alpha, g_residual=val, stage_iterations=total_iters,
                           alpha_iterations=n_alpha, flags=flags | StepFlag.CONVERGED, stages=st)

    g0 = g(0.0, guess)
    if abs(g0) <= tol:
        return outcome(0.0, 0, StepFlag.ENERGY_EXACTLY_FLAT)

    amax = cfg.alpha_max
    clipped = StepFlag.NONE
    n_alpha = 0

    def clip(a):
        nonlocal clipped
        if abs(a) > amax:
            clipped = StepFlag.ALPHA_CLIPPED
            return math.copysign(amax, a)
        return a

    def probe(a):
        nonlocal n_alpha
        a = clip(a)
        if a in cache:
            return cache[a][0]
        n_alpha += 1
        return g(a, nearest_stages(a))

    c = alpha_scale if alpha_scale is not None and math.isfinite(alpha_scale) and alpha_scale != 0 else 1.0
    a1 = c * h * h
    if abs(a1) < 1e-300:
        a1 = math.copysign(1e-300, a1)

    # bracket search: scaled probe, secant-guided overshoot, then geometric expansion
    candidates = [a1]
    g1 = probe(a1)
    if abs(g1) <= tol:
        return outcome(clip(a1), n_alpha, clipped)
    if g1 * g0 > 0 and g1 != g0:
        est = -g0 * clip(a1) / (g1 - g0)
        if math.isfinite(est) and est != 0:
            candidates.append(1.25 * est)
    k = 0
    while len(candidates) < 200:
        candidates.append(-a1 * 2.0 ** k)
        candidates.append(a1 * 2.0 ** (k + 1))
        if abs(a1) * 2.0 ** k > amax:
            break
        k += 1

    bracket = None
    for a in candidates[1:]:
        bracket = _bracket_near_zero([(x, v[0]) for x, v in cache.items()])
        if bracket is not None:
            break
        if clip(a) in cache:
            continue
        ga = probe(a)
        if abs(ga) <= tol:
            return outcome(clip(a), n_alpha, clipped)
    if bracket is None:
        bracket = _bracket_near_zero([(x, v[0]) for x, v in cache.items()])
    if bracket is None:
        probes = sorted((x, v[0]) for x, v in cache.items())
        raise EnergyRootNotFound(
            f"no sign change of the energy residual for |alpha| <= {amax} (h = {h:g})", probes
        )

    (a, ga), (b, gb) = bracket
    side = 0
    for _ in range(cfg.alpha_max_iter):
        x = (a * gb - b * ga) / (gb - ga)
        if not (min(a, b) < x < max(a, b)):
            x = 0.5 * (a + b)
        if x in cache:
            break
        gx = probe(x)
        if abs(gx) <= tol:
            return outcome(x, n_alpha, clipped)
        if gx * gb > 0:
            b, gb = x, gx
            if side == -1:
                ga *= 0.5
            side = -1
        else:
            a, ga = x, gx
            if side == +1:
                gb *= 0.5
            side = +1
    probes = sorted((x, v[0]) for x, v in cache.items())
    raise EnergyRootNotFound(
        f"regula falsi stalled above energy_tol={tol:g} after {cfg.alpha_max_iter} iterations (h = {h:g})",
        probes,
    )


@dataclass
class Trajectory:
    """States and per-step diagnostics; entry 0 describes the initial state."""

    problem: str
    mode: Mode
    s: int
    h: float
    t: np.ndarray
    y: np.ndarray
    energy_error: np.ndarray
    invariant_drift: dict
    alpha: np.ndarray
    g_residual: np.ndarray
    stage_iterations: np.ndarray
    alpha_iterations: np.ndarray
    flags: list

    @property
    def n_steps(self):
        return len(self.t) - 1

    @property
    def max_energy_error(self):
        return float(np.max(np.abs(self.energy_error)))

    def max_invariant_drift(self, label):
        return float(np.max(np.abs(self.invariant_drift[label])))


class _Recorder:
    def __init__(self, sys, y0, h, n_steps, t0):
        self.sys, self.h, self.t0 = sys, h, t0
        self.H0 = energy(sys, y0)
        self.Q0 = {q.label: float(q(y0)) for q in sys.quadratic_invariants}
        self.ys = [y0]
        self.outcomes = [None]

    def push(self, y1, outcome):
        self.ys.append(y1)
        self.outcomes.append(outcome)

    def build(self, mode, s):
        y = np.array(self.ys)
        k = np.arange(len(self.ys))
        H = np.array([energy(self.sys, yk) for yk in y])
        drift = {q.label: q(y) - self.Q0[q.label] for q in self.sys.quadratic_invariants}
        oc = self.outcomes
        return Trajectory(
            problem=self.sys.name,
            mode=mode,
            s=s,
            h=self.h,
            t=self.t0 + k * self.h,
            y=y,
            energy_error=H - self.H0,
            invariant_drift=drift,
            alpha=np.array([np.nan] + [o.alpha_used for o in oc[1:]]),
            g_residual=np.array([0.0] + [o.g_residual for o in oc[1:]]),
            stage_iterations=np.array([0] + [o.stage_iterations for o in oc[1:]], dtype=int),
            alpha_iterations=np.array([0] + [o.alpha_iterations for o in oc[1:]], dtype=int),
            flags=[StepFlag.NONE] + [o.flags for o in oc[1:]],
        )


def integrate(sys, family, y0, h, n_steps, mode="gauss", cfg=None, t0=0.0, max_halvings=0):
    """Run ``n_steps`` steps of size ``h`` and collect diagnostics.

    ``mode`` is a :class:`Mode` (or ``"gauss"`` / ``"equip"``).  In equip mode
    every step targets the energy of ``y0`` itself, so per-step residuals do
    not accumulate.  ``max_halvings > 0`` lets an equip step whose root search
    fails be replaced by two half steps, recursively; the step grid and the
    recorded states are unchanged.

    On failure an :class:`IntegrationError` is raised carrying the trajectory
    accepted so far.
    """
    cfg = cfg or SolverConfig()
    mode = as_mode(mode)
    if n_steps < 1:
        raise InvalidArgumentError("n_steps must be at least 1")
    y = as_state(sys, y0).copy()
    rec = _Recorder(sys, y, float(h), n_steps, t0)
    s = family.s
    alpha_fixed = mode.alpha if mode.kind == "fixed_alpha" else 0.0
    prev_offsets = None
    alpha_scale = None

    def advance(y, hh, depth):
        nonlocal alpha_scale
        guess = None if prev_offsets is None or hh != h else y + prev_offsets
        if mode.kind != "equip":
            return step_fixed_alpha(sys, family, y, hh, alpha_fixed, cfg, guess=guess)
        try:
            out = step_equip(sys, family, y, hh, cfg, anchor=rec.H0, alpha_scale=alpha_scale, guess=guess)
        except EnergyRootNotFound:
            if depth >= max_halvings:
                raise
            log.info("equip root not bracketed at h=%g, halving", hh)
            first = advance(y, hh / 2, depth + 1)
            second = advance(first.y1, hh / 2, depth + 1)
            return replace(
                second,
                stage_iterations=first.stage_iterations + second.stage_iterations,
                alpha_iterations=first.alpha_iterations + second.alpha_iterations,
                flags=first.flags | second.flags | StepFlag.STEP_HALVED,
                stages=None,
            )
        if out.alpha_used != 0.0:
            alpha_scale = out.alpha_used / (hh * hh)
        return out

    for k in range(n_steps):
        try:
            out = advance(y, float(h), 0)
        except Exception as exc:
            if not isinstance(exc, (ArithmeticError, InvalidArgumentError)):
                raise
            traj = rec.build(mode, s)
            raise IntegrationError(f"step {k} (t = {t0 + k * h:g}) failed: {exc}", traj, exc) from exc
        if out.stages is not None:
            prev_offsets = out.stages.Y - y
        y = out.y1
        rec.push(y, out)
    return rec.build(mode, s)
