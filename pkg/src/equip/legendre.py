"""Gauss-Legendre rules on [0, 1] and the orthonormal shifted Legendre basis.

The basis polynomials are indexed from 1 as in the usual W-transformation
setting: ``P_j`` has degree ``j - 1`` and ``int_0^1 P_i P_j = delta_ij``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidArgumentError

MAX_STAGES = 10


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def _check_stages(s, max_stages):
    if isinstance(s, bool) or not isinstance(s, (int, np.integer)):
        raise InvalidArgumentError(f"stage count must be an integer in [1, {max_stages}], got {s!r}")
    if not 1 <= s <= max_stages:
        raise InvalidArgumentError(f"stage count must lie in [1, {max_stages}], got {s}")
    return int(s)


@dataclass(frozen=True)
class QuadratureRule:
    """s-point Gauss-Legendre rule on [0, 1]: nodes ``c`` (increasing) and weights ``b``."""

    s: int
    c: np.ndarray
    b: np.ndarray

    def integrate(self, f):
        """Apply the rule to a callable vectorised over its argument."""
        return float(np.dot(self.b, f(self.c)))


@dataclass(frozen=True)
class LegendreBasis:
    """Orthonormal shifted Legendre polynomials P_1..P_s on [0, 1].

    ``coefficients[j, k]`` is the coefficient of ``tau**k`` in ``P_{j+1}``.
    Each row factors as ``sqrt(2j+1) * integer_coefficients[j]``, where the
    integer rows are exact, which lets tests integrate products exactly.
    """

    s: int
    integer_coefficients: tuple
    coefficients: np.ndarray

    def scale(self, j):
        """Normalisation factor sqrt(2j - 1) of ``P_j`` (1-based)."""
        return math.sqrt(2 * j - 1)

    def __call__(self, tau):
        return eval_basis(self, tau)


def _legendre_pair(n, x):
    """Return (L_n(x), L_{n-1}(x)) for the classical Legendre polynomials on [-1, 1]."""
    prev = np.ones_like(x)
    if n == 0:
        return prev, np.zeros_like(x)
    cur = x.copy()
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1) * x * cur - k * prev) / (k + 1)
    return cur, prev


def shifted_legendre(n, tau):
    """Classical (non-normalised) shifted Legendre polynomial of degree n at tau."""
    x = 2.0 * np.asarray(tau, dtype=float) - 1.0
    return _legendre_pair(n, np.atleast_1d(x))[0].reshape(np.shape(x))


def gauss_legendre_rule(s, max_stages=MAX_STAGES):
    """Gauss-Legendre abscissae and weights on [0, 1].

    Roots of the degree-``s`` Legendre polynomial are found by Newton's method
    from Chebyshev-type seeds on [-1, 1] and mirrored so the rule is
    symmetric about 1/2 by construction.

    Raises
    ------
    InvalidArgumentError
        If ``s`` is not in ``[1, max_stages]``.
    """
    s = _check_stages(s, max_stages)
    half = (s + 1) // 2
    i = np.arange(1, half + 1)
    x = np.cos(np.pi * (4 * i - 1) / (4 * s + 2))
    for _ in range(100):
        ls, lsm1 = _legendre_pair(s, x)
        dls = s * (x * ls - lsm1) / (x * x - 1.0)
        dx = ls / dls
        x = x - dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    # one more polish after |dx| hits the ulp floor
    ls, lsm1 = _legendre_pair(s, x)
    x = x - ls / (s * (x * ls - lsm1) / (x * x - 1.0))
    if s % 2 == 1:
        x[-1] = 0.0
    _, lsm1 = _legendre_pair(s, x)
    w = (1.0 - x * x) / (s * s * lsm1 * lsm1)  # weights on [0,1] (half of the [-1,1] weights)

    # x is descending on (0, 1]; nodes on [0, 1] in increasing order
    c_low = (1.0 - x) / 2.0
    n_mirror = s // 2
    c = np.concatenate([c_low, 1.0 - c_low[:n_mirror][::-1]])
    b = np.concatenate([w, w[:n_mirror][::-1]])
    return QuadratureRule(s=s, c=_frozen(c), b=_frozen(b))


def legendre_basis(s, max_stages=MAX_STAGES):
    """Orthonormal shifted Legendre basis P_1..P_s with exact coefficient table."""
    s = _check_stages(s, max_stages)
    rows = []
    for j in range(s):
        # shifted Legendre of degree j: sum_k (-1)^(j+k) C(j,k) C(j+k,k) tau^k
        rows.append(tuple((-1) ** (j + k) * math.comb(j, k) * math.comb(j + k, k) for k in range(j + 1)))
    coeffs = np.zeros((s, s))
    for j, row in enumerate(rows):
        coeffs[j, : j + 1] = math.sqrt(2 * j + 1) * np.array(row, dtype=float)
    return LegendreBasis(s=s, integer_coefficients=tuple(rows), coefficients=_frozen(coeffs))


def eval_basis(basis, tau):
    """Values ``[P_1(tau), ..., P_s(tau)]``.

    Evaluated by the three-term recurrence, which is better conditioned than
    the monomial table.  ``tau`` may be an array; the basis index is the last
    axis of the result.
    """
    tau = np.asarray(tau, dtype=float)
    x = 2.0 * tau - 1.0
    out = np.empty(tau.shape + (basis.s,))
    prev = np.ones_like(x)
    out[..., 0] = prev
    if basis.s > 1:
        cur = x
        out[..., 1] = cur
        for k in range(1, basis.s - 1):
            prev, cur = cur, ((2 * k + 1) * x * cur - k * prev) / (k + 1)
            out[..., k + 1] = cur
    return out * np.sqrt(2.0 * np.arange(basis.s) + 1.0)


def exact_inner_product(basis, i, j):
    """``int_0^1 P_i P_j`` (1-based), integrating the integer rows in rationals.

    Only the final sqrt((2i-1)(2j-1)) scaling is done in floating point.
    """
    a = basis.integer_coefficients[i - 1]
    b = basis.integer_coefficients[j - 1]
    total = Fraction(0)
    for p, ap in enumerate(a):
        for q, bq in enumerate(b):
            total += Fraction(ap * bq, p + q + 1)
    return float(total) * math.sqrt((2 * i - 1) * (2 * j - 1))
