"""Scaled Hermite functions and Gauss-Hermite quadrature.

The basis functions are

    psi_n(x) = beta^{1/4} h_n(sqrt(beta) x),

where h_n is the standard unit-L2-norm Hermite function, so that
(psi_n) is orthonormal on L2(R) and solves the harmonic-oscillator
eigenproblem  -psi_n'' + beta^2 x^2 psi_n = beta (2n+1) psi_n.  The two
ladder identities

    psi_n' + beta x psi_n =  sqrt(2 beta n)     psi_{n-1}
    psi_n' - beta x psi_n = -sqrt(2 beta (n+1)) psi_{n+1}

(with psi_n = 0 for n < 0) drive every coefficient-space operator in the
package.

Quadrature: for each weight scale s in {1/2, 1, 3/2} the context holds nodes
and weights exact for integrals of exp(-s*beta*x^2) times polynomials.  The
"total" weights additionally absorb the Gaussian, so that sums of pointwise
psi-values integrate products of one (s=1/2), two (s=1) or three (s=3/2)
Hermite functions exactly to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_hermite

from .errors import ConfigurationError

WEIGHT_SCALES = (0.5, 1.0, 1.5)


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights for the weight exp(-scale*beta*x^2) on R.

    ``weights`` integrate polynomials against the weight; ``total_weights``
    include exp(+scale*beta*x^2) so that plain pointwise function values can
    be summed directly.
    """

    scale: float
    nodes: np.ndarray
    weights: np.ndarray
    total_weights: np.ndarray


def gauss_hermite_scaled(beta: float, scale: float, count: int) -> QuadratureRule:
    """Gauss-Hermite rule for integral of exp(-scale*beta*x^2) * p(x) dx.

    Exact for polynomials p of degree <= 2*count - 1.  Nodes and weights come
    from the symmetric-tridiagonal (Golub-Welsch) eigenvalue route of
    scipy.special.roots_hermite, rescaled by y = sqrt(scale*beta) x.
    """
    y, v = roots_hermite(count)
    a = math.sqrt(scale * beta)
    nodes = y / a
    weights = v / a
    # v_i ~ exp(-y_i^2); combine in log space so neither factor over/underflows
    total = np.exp(np.log(v) + y * y) / a
    return QuadratureRule(scale, nodes, weights, total)


class HermiteContext:
    """Immutable evaluation context: beta, truncation and quadrature rules.

    All evaluation tables are precomputed at construction; instances are safe
    to share across threads.
    """

    def __init__(self, beta: float, n_max: int, node_count: int | None = None):
        if not (beta > 0):
            raise ValueError(f"beta must be positive, got {beta}")
        if n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {n_max}")
        self.beta = float(beta)
        self.n_max = int(n_max)
        self.node_count = int(node_count) if node_count else 2 * self.n_max + 4
        if self.node_count < 2 * self.n_max + 4:
            raise ValueError("node count must be at least 2*n_max + 4")
        self.quad = {s: gauss_hermite_scaled(self.beta, s, self.node_count)
                     for s in WEIGHT_SCALES}
        self._psi_tables: dict[tuple[float, bool], np.ndarray] = {}

    @property
    def weight_scales(self):
        return WEIGHT_SCALES

    def rule(self, scale: float) -> QuadratureRule:
        try:
            return self.quad[scale]
        except KeyError:
            raise ConfigurationError(
                f"weight scale {scale} not precomputed (have {WEIGHT_SCALES})")

    def psi_table(self, scale: float, deriv: bool = False) -> np.ndarray:
        """(n_max+1, node_count) table of psi_n (or psi_n') at the nodes."""
        key = (scale, deriv)
        if key not in self._psi_tables:
            x = self.rule(scale).nodes
            if deriv:
                self._psi_tables[key] = eval_dpsi_block(self, self.n_max, x)
            else:
                self._psi_tables[key] = eval_psi_block(self, self.n_max, x)
        return self._psi_tables[key]


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("evaluation points must be finite")
    return x


def eval_psi_block(ctx: HermiteContext, n_top: int, x) -> np.ndarray:
    """All psi_n(x) for 0 <= n <= n_top; shape (n_top+1,) + shape(x).

    Upward three-term recurrence on the unit-norm functions
    h_{m+1} = sqrt(2/(m+1)) y h_m - sqrt(m/(m+1)) h_{m-1}; values that
    underflow the Gaussian flush to zero, never NaN.
    """
    if n_top > ctx.n_max:
        raise IndexError(f"n={n_top} exceeds context n_max={ctx.n_max}")
    x = _check_x(x)
    y = math.sqrt(ctx.beta) * x
    out = np.zeros((n_top + 1,) + y.shape)
    with np.errstate(under="ignore"):
        h0 = math.pi ** -0.25 * np.exp(-0.5 * y * y)
        out[0] = h0
        if n_top >= 1:
            out[1] = math.sqrt(2.0) * y * h0
        for m in range(1, n_top):
            out[m + 1] = (math.sqrt(2.0 / (m + 1)) * y * out[m]
                          - math.sqrt(m / (m + 1.0)) * out[m - 1])
    return ctx.beta ** 0.25 * out


def eval_psi(ctx: HermiteContext, n: int, x):
    """psi_n(x) under the unit-norm convention."""
    if n < 0:
        return np.zeros_like(np.asarray(x, dtype=float))
    if n > ctx.n_max:
        raise IndexError(f"n={n} exceeds context n_max={ctx.n_max}")
    return eval_psi_block(ctx, n, x)[n]


def eval_dpsi_block(ctx: HermiteContext, n_top: int, x) -> np.ndarray:
    """psi_n'(x) for 0 <= n <= n_top via the half-sum of the two ladder
    identities: psi_n' = (sqrt(2 beta n) psi_{n-1} - sqrt(2 beta (n+1)) psi_{n+1})/2."""
    if n_top > ctx.n_max:
        raise IndexError(f"n={n_top} exceeds context n_max={ctx.n_max}")
    x = _check_x(x)
    # needs psi up to n_top+1; recurrence is stable, extend locally
    y = math.sqrt(ctx.beta) * x
    psi = np.zeros((n_top + 2,) + y.shape)
    with np.errstate(under="ignore"):
        h0 = math.pi ** -0.25 * np.exp(-0.5 * y * y)
        psi[0] = h0
        if n_top + 1 >= 1:
            psi[1] = math.sqrt(2.0) * y * h0
        for m in range(1, n_top + 1):
            psi[m + 1] = (math.sqrt(2.0 / (m + 1)) * y * psi[m]
                          - math.sqrt(m / (m + 1.0)) * psi[m - 1])
    psi *= ctx.beta ** 0.25
    out = np.zeros((n_top + 1,) + y.shape)
    b = ctx.beta
    for n in range(n_top + 1):
        lo = math.sqrt(2 * b * n) * psi[n - 1] if n >= 1 else 0.0
        hi = math.sqrt(2 * b * (n + 1)) * psi[n + 1]
        out[n] = 0.5 * (lo - hi)
    return out


def eval_dpsi(ctx: HermiteContext, n: int, x):
    """psi_n'(x)."""
    if n < 0:
        return np.zeros_like(np.asarray(x, dtype=float))
    if n > ctx.n_max:
        raise IndexError(f"n={n} exceeds context n_max={ctx.n_max}")
    return eval_dpsi_block(ctx, n, x)[n]


def x_coupling(ctx: HermiteContext, n: int) -> tuple[float, float]:
    """Coefficients (c_n, c_{n+1}) in beta*x*psi_n = c_n psi_{n-1} + c_{n+1} psi_{n+1},
    with c_m = sqrt(beta*m/2)."""
    if n > ctx.n_max:
        raise IndexError(f"n={n} exceeds context n_max={ctx.n_max}")
    b = ctx.beta
    return math.sqrt(b * n / 2.0), math.sqrt(b * (n + 1) / 2.0)


def ladder_coeff(beta: float, n) -> np.ndarray:
    """c_n = sqrt(beta*n/2) for scalar or array n (c_0 = 0)."""
    return np.sqrt(beta * np.maximum(np.asarray(n, dtype=float), 0.0) / 2.0)


def triple_product(ctx: HermiteContext, a: int, b: int, c: int) -> float:
    """integral of psi_a psi_b psi_c over R, exact to rounding.

    The integrand is exp(-3 beta x^2 / 2) times a polynomial of degree
    a+b+c, so the scale-3/2 rule with >= 2 n_max + 4 nodes is exact.
    Arguments are sorted first, making permutation symmetry bitwise exact.
    """
    for n in (a, b, c):
        if n > ctx.n_max:
            raise IndexError(f"index {n} exceeds context n_max={ctx.n_max}")
        if n < 0:
            return 0.0
    a, b, c = sorted((a, b, c))
    rule = ctx.rule(1.5)
    tab = ctx.psi_table(1.5)
    return float(np.dot(rule.total_weights, tab[a] * tab[b] * tab[c]))


def pair_product(ctx: HermiteContext, a: int, b: int) -> float:
    """integral of psi_a psi_b over R (orthonormality check path)."""
    rule = ctx.rule(1.0)
    tab = ctx.psi_table(1.0)
    return float(np.dot(rule.total_weights, tab[a] * tab[b]))
