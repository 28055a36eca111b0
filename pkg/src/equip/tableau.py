"""The alpha-parametric family of symplectic Runge-Kutta tableaux of Gauss type.

The Gauss coefficient matrix is built through its W-transformation
``A = P X P^{-1}``, where ``P[i, j] = P_{j+1}(c_i)`` collects the orthonormal
Legendre polynomials at the nodes and ``X`` is tridiagonal.  Perturbing the
last off-diagonal pair of ``X`` by ``alpha`` gives

    A(alpha) = P (X + alpha W) P^{-1} = A + alpha * P W P^{-1},

with ``W = e_s e_{s-1}^T - e_{s-1} e_s^T``.  Every member keeps the
symplecticity identity ``B A + A^T B = b b^T``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import InvalidArgumentError, UnsupportedStageCountError
from .legendre import MAX_STAGES, QuadratureRule, _frozen, eval_basis, gauss_legendre_rule, legendre_basis


@dataclass(frozen=True)
class ButcherTableau:
    s: int
    c: np.ndarray
    b: np.ndarray
    A: np.ndarray
    alpha: float = 0.0


@dataclass(frozen=True)
class TableauFamily:
    """Precomputed pieces of the map ``alpha -> A(alpha)`` for a fixed stage count."""

    s: int
    rule: QuadratureRule
    P: np.ndarray
    X: np.ndarray
    W: np.ndarray
    A0: np.ndarray
    dA: np.ndarray
    xi: np.ndarray

    @property
    def c(self):
        return self.rule.c

    @property
    def b(self):
        return self.rule.b

    def __call__(self, alpha):
        return tableau_at(self, alpha)


def xi_coefficients(s):
    j = np.arange(1, s)
    return 1.0 / (2.0 * np.sqrt(4.0 * j * j - 1.0))


def tridiagonal_x(s):
    """The tridiagonal matrix X_s: ``X[0, 0] = 1/2``, skew off-diagonals ``+-xi_j``."""
    xi = xi_coefficients(s)
    X = np.zeros((s, s))
    X[0, 0] = 0.5
    idx = np.arange(1, s)
    X[idx, idx - 1] = xi
    X[idx - 1, idx] = -xi
    return X


def perturbation_w(s):
    W = np.zeros((s, s))
    if s >= 2:
        W[s - 1, s - 2] = 1.0
        W[s - 2, s - 1] = -1.0
    return W


def _similarity(P_lu, P, M):
    """``P M P^{-1}`` via an LU solve against P^T (no explicit inverse)."""
    # Z = P M P^{-1}  <=>  P^T Z^T = (P M)^T
    return lu_solve(P_lu, (P @ M).T, trans=1).T


def gauss_tableau(s, max_stages=MAX_STAGES):
    """Plain s-stage Gauss collocation tableau, valid for every ``s >= 1``."""
    rule = gauss_legendre_rule(s, max_stages)
    P = eval_basis(legendre_basis(s, max_stages), rule.c)
    A = _similarity(lu_factor(P), P, tridiagonal_x(rule.s))
    return ButcherTableau(s=rule.s, c=rule.c, b=rule.b, A=_frozen(A), alpha=0.0)


def build_family(s, max_stages=MAX_STAGES):
    """Build the parametric family ``A(alpha)`` for ``2 <= s <= max_stages``.

    Raises
    ------
    UnsupportedStageCountError
        For ``s == 1``: the perturbation W vanishes identically, so there is
        no family to speak of (use :func:`gauss_tableau` for the midpoint rule).
    InvalidArgumentError
        For any other ``s`` outside ``[2, max_stages]``.
    """
    if isinstance(s, (int, np.integer)) and not isinstance(s, bool) and s == 1:
        raise UnsupportedStageCountError(
            "the alpha-family needs s >= 2: W_s is identically zero for s = 1"
        )
    rule = gauss_legendre_rule(s, max_stages)
    s = rule.s
    P = eval_basis(legendre_basis(s, max_stages), rule.c)
    P_lu = lu_factor(P)
    X = tridiagonal_x(s)
    W = perturbation_w(s)
    return TableauFamily(
        s=s,
        rule=rule,
        P=_frozen(P),
        X=_frozen(X),
        W=_frozen(W),
        A0=_frozen(_similarity(P_lu, P, X)),
        dA=_frozen(_similarity(P_lu, P, W)),
        xi=_frozen(xi_coefficients(s)),
    )


def tableau_at(family, alpha):
    alpha = float(alpha)
    if not math.isfinite(alpha):
        raise InvalidArgumentError(f"alpha must be finite, got {alpha}")
    A = family.A0 + alpha * family.dA if alpha != 0.0 else family.A0
    return ButcherTableau(s=family.s, c=family.rule.c, b=family.rule.b, A=_frozen(A), alpha=alpha)


def symplecticity_residual(t):
    """Max-norm of ``diag(b) A + A^T diag(b) - b b^T``."""
    BA = t.b[:, None] * t.A
    return float(np.max(np.abs(BA + BA.T - np.outer(t.b, t.b))))


def symmetry_residual(t):
    """Max-norm of ``A + S A S - 1 b^T`` with S the index-reversal permutation.

    Zero for a Runge-Kutta method whose nodes and weights are symmetric and
    whose adjoint coincides with itself.
    """
    SAS = t.A[::-1, ::-1]
    return float(np.max(np.abs(t.A + SAS - np.outer(np.ones(t.s), t.b))))


def collocation_matrix(c):
    """Independent reference: ``a_ij = int_0^{c_i} l_j(tau) dtau`` with Lagrange ``l_j``."""
    c = np.asarray(c, dtype=float)
    s = len(c)
    A = np.empty((s, s))
    for j in range(s):
        others = np.delete(c, j)
        lj = np.polynomial.Polynomial.fromroots(others) if s > 1 else np.polynomial.Polynomial([1.0])
        lj = lj / np.prod(c[j] - others)
        Lj = lj.integ()
        A[:, j] = Lj(c) - Lj(0.0)
    return A


def to_dict(t):
    return {
        "s": t.s,
        "alpha": t.alpha,
        "c": t.c.tolist(),
        "b": t.b.tolist(),
        "A": t.A.tolist(),
    }
