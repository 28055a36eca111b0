"""Canonical Hamiltonian systems ``y' = J grad H(y)`` and a catalog of test problems.

States are ordered ``(q_1..q_m, p_1..p_m)``.  Catalog evaluators are
vectorised over leading axes, so ``grad_h`` accepts an ``(s, 2m)`` stack of
stages as well as a single state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InvalidArgumentError, NotFoundError

_EPS = np.finfo(float).eps


def apply_j(v):
    """``J v`` for ``J = [[0, I], [-I, 0]]``, along the last axis."""
    m = v.shape[-1] // 2
    return np.concatenate([v[..., m:], -v[..., :m]], axis=-1)


@dataclass(frozen=True)
class QuadraticInvariant:
    label: str
    C: np.ndarray

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return np.einsum("...i,ij,...j->...", y, self.C, y)


@dataclass(frozen=True)
class HamiltonianSystem:
    """Evaluator bundle for a canonical Hamiltonian system of dimension 2m.

    ``H`` and ``grad_h`` (and ``hessian`` if given) must be pure.  When
    ``vectorized`` is False they are only ever called on single states.
    """

    name: str
    m: int
    H: Callable
    grad_h: Callable
    hessian: Optional[Callable] = None
    quadratic_invariants: tuple = ()
    analytic_flow: Optional[Callable] = None
    default_y0: Optional[tuple] = None
    sample_state: Optional[Callable] = None
    quadratic_hamiltonian: bool = False
    vectorized: bool = True
    description: str = ""

    @property
    def dim(self):
        return 2 * self.m

    @property
    def invariant_labels(self):
        return [q.label for q in self.quadratic_invariants]

    def invariant(self, label):
        for q in self.quadratic_invariants:
            if q.label == label:
                return q
        raise NotFoundError(f"system {self.name!r} has no quadratic invariant {label!r}; "
                            f"known: {self.invariant_labels}")

    def random_state(self, rng):
        if self.sample_state is not None:
            return np.asarray(self.sample_state(rng), dtype=float)
        return rng.standard_normal(self.dim)


def as_state(sys, y):
    y = np.asarray(y, dtype=float)
    if y.shape != (sys.dim,):
        raise InvalidArgumentError(f"{sys.name} expects a state of length {sys.dim}, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise DomainError("state has non-finite components", state=y)
    return y


def gradient(sys, y):
    """``grad H`` on a state or on a stack of states (shape ``(..., 2m)``)."""
    y = np.asarray(y, dtype=float)
    if sys.vectorized or y.ndim == 1:
        g = sys.grad_h(y)
    else:
        g = np.stack([sys.grad_h(row) for row in y.reshape(-1, sys.dim)]).reshape(y.shape)
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise DomainError(f"{sys.name}: gradient is not finite", state=y)
    return g


def vector_field(sys, y):
    """``f(y) = J grad H(y)``, with J applied by swapping and negating halves."""
    return apply_j(gradient(sys, y))


def energy(sys, y):
    return float(sys.H(np.asarray(y, dtype=float)))


def quadratic_invariant(sys, label, y):
    return float(sys.invariant(label)(y))


def fd_hessian(sys, y, eps=None):
    """Central-difference Hessian of H from ``grad_h``, symmetrised."""
    y = np.asarray(y, dtype=float)
    n = y.size
    if eps is None:
        eps = _EPS ** (1.0 / 3.0) * max(1.0, float(np.max(np.abs(y))))
    Hm = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = eps
        Hm[:, k] = (gradient(sys, y + e) - gradient(sys, y - e)) / (2 * eps)
    return 0.5 * (Hm + Hm.T)


def hessian(sys, y, mode="exact-if-provided", eps=None):
    if mode == "exact-if-provided" and sys.hessian is not None:
        return np.asarray(sys.hessian(np.asarray(y, dtype=float)), dtype=float)
    if mode not in ("exact-if-provided", "finite-difference"):
        raise InvalidArgumentError(f"unknown jacobian mode {mode!r}")
    return fd_hessian(sys, y, eps)


def check_consistency(sys, n_states=100, seed=0, grad_rtol=1e-6, invariant_rtol=1e-10):
    """Registration-time checks on hand-coded derivatives and declared invariants.

    Compares ``grad_h`` with central differences of ``H`` and verifies
    ``grad Q(y) . f(y) = 0`` for every quadratic invariant, at random states.
    Raises :class:`InvalidArgumentError` naming the first failing check.
    """
    rng = np.random.default_rng(seed)
    for _ in range(n_states):
        y = sys.random_state(rng)
        g = gradient(sys, y)
        eps = 1e-5 * max(1.0, float(np.max(np.abs(y))))
        fd = np.empty_like(y)
        for k in range(y.size):
            e = np.zeros_like(y)
            e[k] = eps
            fd[k] = (sys.H(y + e) - sys.H(y - e)) / (2 * eps)
        if np.max(np.abs(fd - g)) > grad_rtol * max(1.0, float(np.max(np.abs(g)))):
            raise InvalidArgumentError(f"{sys.name}: grad_h disagrees with finite differences of H at {y}")
        f = apply_j(g)
        for q in sys.quadratic_invariants:
            dq = 2.0 * (q.C @ y)
            scale = max(1.0, float(np.linalg.norm(dq) * np.linalg.norm(f)))
            if abs(float(dq @ f)) > invariant_rtol * scale:
                raise InvalidArgumentError(f"{sys.name}: {q.label!r} is not conserved by the flow at {y}")
    return True


# -- catalog -----------------------------------------------------------------

_CATALOG: dict = {}


def register_problem(sys, check=True, replace=False):
    if sys.name in _CATALOG and not replace:
        raise InvalidArgumentError(f"problem {sys.name!r} already registered")
    for q in sys.quadratic_invariants:
        if q.C.shape != (sys.dim, sys.dim) or not np.allclose(q.C, q.C.T, rtol=0, atol=0):
            raise InvalidArgumentError(f"{sys.name}: invariant {q.label!r} needs a symmetric {sys.dim}x{sys.dim} matrix")
    if check:
        check_consistency(sys)
    _CATALOG[sys.name] = sys
    return sys


def get_problem(name):
    try:
        return _CATALOG[name]
    except KeyError:
        raise NotFoundError(f"unknown problem {name!r}; available: {sorted(_CATALOG)}") from None


def list_problems():
    return sorted(_CATALOG)


def _harmonic_flow(y0, t):
    q, p = y0
    c, s = math.cos(t), math.sin(t)
    return np.array([c * q + s * p, -s * q + c * p])


def harmonic_oscillator():
    return HamiltonianSystem(
        name="harmonic_oscillator",
        m=1,
        H=lambda y: 0.5 * (y[..., 0] ** 2 + y[..., 1] ** 2),
        grad_h=lambda y: np.array(y, dtype=float, copy=True),
        hessian=lambda y: np.eye(2),
        analytic_flow=_harmonic_flow,
        default_y0=(1.0, 0.0),
        quadratic_hamiltonian=True,
        description="H = (q^2 + p^2)/2",
    )


def _pendulum_hessian(y):
    return np.array([[math.cos(y[0]), 0.0], [0.0, 1.0]])


def pendulum():
    return HamiltonianSystem(
        name="pendulum",
        m=1,
        H=lambda y: 0.5 * y[..., 1] ** 2 - np.cos(y[..., 0]),
        grad_h=lambda y: np.stack([np.sin(y[..., 0]), y[..., 1]], axis=-1),
        hessian=_pendulum_hessian,
        default_y0=(0.0, 1.0),
        sample_state=lambda rng: rng.uniform(-3.0, 3.0, size=2),
        description="H = p^2/2 - cos q",
    )


KEPLER_COLLISION_RADIUS = 1e-8


def _kepler_radius(y):
    r = np.sqrt(y[..., 0] ** 2 + y[..., 1] ** 2)
    if np.any(r < KEPLER_COLLISION_RADIUS):
        raise DomainError("kepler: |q| below the collision guard", state=np.array(y))
    return r


def _kepler_h(y):
    r = _kepler_radius(y)
    return 0.5 * (y[..., 2] ** 2 + y[..., 3] ** 2) - 1.0 / r


def _kepler_grad(y):
    r3 = _kepler_radius(y) ** 3
    return np.stack([y[..., 0] / r3, y[..., 1] / r3, y[..., 2], y[..., 3]], axis=-1)


def _kepler_hessian(y):
    q = y[:2]
    r = float(_kepler_radius(y))
    Hm = np.zeros((4, 4))
    Hm[:2, :2] = np.eye(2) / r**3 - 3.0 * np.outer(q, q) / r**5
    Hm[2:, 2:] = np.eye(2)
    return Hm


def kepler_initial_state(e):
    """Pericentre state of a unit-semi-major-axis orbit with eccentricity ``e``."""
    if not 0.0 <= e < 1.0:
        raise InvalidArgumentError(f"eccentricity must lie in [0, 1), got {e}")
    return np.array([1.0 - e, 0.0, 0.0, math.sqrt((1.0 + e) / (1.0 - e))])


def kepler_flow(y0, t, tol=1e-15):
    """Exact Kepler motion (mu = 1) for bound orbits via the eccentric-anomaly increment.

    Uses Lagrange f and g coefficients; Kepler's equation for the increment
    of eccentric anomaly is solved by Newton's method.
    """
    y0 = np.asarray(y0, dtype=float)
    q0, p0 = y0[:2], y0[2:]
    r0 = math.hypot(*q0)
    energy0 = 0.5 * float(p0 @ p0) - 1.0 / r0
    if energy0 >= 0.0:
        raise DomainError("kepler_flow only handles bound (elliptic) orbits", state=y0)
    a = -0.5 / energy0
    n = a ** -1.5
    sig = float(q0 @ p0) / math.sqrt(a)  # r0 r0' / sqrt(a)
    k = 1.0 - r0 / a
    mean = n * t
    dE = mean
    for _ in range(100):
        F = dE - k * math.sin(dE) + sig * (1.0 - math.cos(dE)) - mean
        dF = 1.0 - k * math.cos(dE) + sig * math.sin(dE)
        step = F / dF
        dE -= step
        if abs(step) <= tol * max(1.0, abs(dE)):
            break
    r = a * (1.0 - k * math.cos(dE) + sig * math.sin(dE))
    f = 1.0 - a / r0 * (1.0 - math.cos(dE))
    g = t - (dE - math.sin(dE)) / n
    fdot = -math.sqrt(a) * math.sin(dE) / (r * r0)
    gdot = 1.0 - a / r * (1.0 - math.cos(dE))
    return np.concatenate([f * q0 + g * p0, fdot * q0 + gdot * p0])


def _kepler_sample(rng):
    radius = rng.uniform(0.5, 2.0)
    angle = rng.uniform(0.0, 2 * math.pi)
    return np.array([radius * math.cos(angle), radius * math.sin(angle), *rng.standard_normal(2)])


ANGULAR_MOMENTUM = np.array(
    [
        [0.0, 0.0, 0.0, 0.5],
        [0.0, 0.0, -0.5, 0.0],
        [0.0, -0.5, 0.0, 0.0],
        [0.5, 0.0, 0.0, 0.0],
    ]
)


def kepler():
    return HamiltonianSystem(
        name="kepler",
        m=2,
        H=_kepler_h,
        grad_h=_kepler_grad,
        hessian=_kepler_hessian,
        quadratic_invariants=(QuadraticInvariant("angular_momentum", ANGULAR_MOMENTUM),),
        analytic_flow=kepler_flow,
        default_y0=tuple(kepler_initial_state(0.3)),
        sample_state=_kepler_sample,
        description="H = |p|^2/2 - 1/|q|",
    )


def _hh_h(y):
    q1, q2, p1, p2 = y[..., 0], y[..., 1], y[..., 2], y[..., 3]
    return 0.5 * (p1**2 + p2**2) + 0.5 * (q1**2 + q2**2) + q1**2 * q2 - q2**3 / 3.0


def _hh_grad(y):
    q1, q2, p1, p2 = y[..., 0], y[..., 1], y[..., 2], y[..., 3]
    return np.stack([q1 + 2 * q1 * q2, q2 + q1**2 - q2**2, p1, p2], axis=-1)


def _hh_hessian(y):
    q1, q2 = y[0], y[1]
    Hm = np.eye(4)
    Hm[0, 0] = 1 + 2 * q2
    Hm[0, 1] = Hm[1, 0] = 2 * q1
    Hm[1, 1] = 1 - 2 * q2
    return Hm


def henon_heiles():
    return HamiltonianSystem(
        name="henon_heiles",
        m=2,
        H=_hh_h,
        grad_h=_hh_grad,
        hessian=_hh_hessian,
        default_y0=(0.1, 0.1, 0.0, 0.0),
        sample_state=lambda rng: rng.uniform(-0.5, 0.5, size=4),
        description="H = |p|^2/2 + |q|^2/2 + q1^2 q2 - q2^3/3",
    )


for _factory in (harmonic_oscillator, pendulum, kepler, henon_heiles):
    register_problem(_factory())
del _factory
