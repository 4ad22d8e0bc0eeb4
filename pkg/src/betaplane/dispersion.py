"""Dispersion relation of the betaplane rotation operator.

Eigenfrequencies tau(n, k, j) are the three real roots of

    tau^3 - (k^2 + beta*(2n+1)) tau + beta*k = 0.

For n >= 1 the roots are distinct and labelled in increasing order by
j in {-1, 0, +1}.  For n = 0 the roots have closed forms and the j labels
follow them instead (the Kelvin root tau = k sits in the j = 0 slot whether
or not it is the middle root):

    tau(0, k, 0)  = k
    tau(0, k, +-1) = -k/2 +- sqrt(k^2 + 4 beta)/2.

At beta = 2 k^2 the n = 0 roots degenerate to k (double) and -2k; roots()
still succeeds there, eigenvector construction refuses it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

_POLISH_REL = 1e-13
_POLISH_ITER = 5


class WaveClass(enum.Enum):
    POINCARE = "poincare"
    ROSSBY = "rossby"
    MIXED = "mixed"
    KELVIN = "kelvin"
    GEOSTROPHIC = "geostrophic"


@dataclass(frozen=True)
class ModeIndex:
    n: int
    k: int
    j: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"n must be >= 0, got {self.n}")
        if self.j not in (-1, 0, 1):
            raise ValueError(f"j must be in {{-1,0,1}}, got {self.j}")

    def astuple(self):
        return (self.n, self.k, self.j)


@dataclass(frozen=True)
class RootTriple:
    beta: float
    n: int
    k: int
    taus: tuple  # indexed by j+1

    def tau(self, j: int) -> float:
        return self.taus[j + 1]


def cubic_residual(beta: float, n: int, k: int, tau: float) -> float:
    return tau ** 3 - (k * k + beta * (2 * n + 1)) * tau + beta * k


def solve_depressed_cubic(p: float, q: float) -> tuple[float, float, float]:
    """Three real roots of t^3 + p t + q = 0 (requires p < 0 and a
    non-positive discriminant), by the trigonometric method, ascending."""
    if p >= 0:
        raise ValueError("trigonometric method needs p < 0 (three real roots)")
    m = 2.0 * math.sqrt(-p / 3.0)
    arg = 3.0 * q / (p * m)
    arg = min(1.0, max(-1.0, arg))  # clamp rounding at the double-root boundary
    theta = math.acos(arg) / 3.0
    r = [m * math.cos(theta - 2.0 * math.pi * i / 3.0) for i in range(3)]
    r.sort()
    return tuple(r)


def _polish(beta: float, n: int, k: int, tau: float) -> float:
    a = k * k + beta * (2 * n + 1)
    for _ in range(_POLISH_ITER):
        res = tau ** 3 - a * tau + beta * k
        if abs(res) <= _POLISH_REL * (1.0 + abs(tau) ** 3):
            break
        dp = 3.0 * tau * tau - a
        if dp == 0.0:
            break
        tau -= res / dp
    return tau


def roots(beta: float, n: int, k: int) -> RootTriple:
    """Eigenfrequency triple for the mode family (n, k).

    k = 0 (any n): exact (-s, 0, s) with s = sqrt(beta*(2n+1)).
    n = 0: closed forms above.  Otherwise trigonometric solve of the
    depressed cubic followed by a short Newton polish, labelled ascending.
    """
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if k == 0:
        s = math.sqrt(beta * (2 * n + 1))
        return RootTriple(beta, n, k, (-s, 0.0, s))
    if n == 0:
        d = math.sqrt(k * k + 4.0 * beta)
        return RootTriple(beta, 0, k, (-k / 2.0 - d / 2.0, float(k), -k / 2.0 + d / 2.0))
    p = -(k * k + beta * (2 * n + 1))
    q = beta * k
    raw = solve_depressed_cubic(p, q)
    polished = sorted(_polish(beta, n, k, t) for t in raw)
    return RootTriple(beta, n, k, tuple(polished))


def tau(beta: float, n: int, k: int, j: int) -> float:
    """Single eigenfrequency tau(n, k, j)."""
    return roots(beta, n, k).tau(j)


def taus_grid(beta: float, n_max: int, k_max: int) -> np.ndarray:
    """Array of tau over (n, k, j); shape (n_max+1, 2*k_max+1, 3).

    Axis 1 runs k = -k_max..k_max, axis 2 runs j = -1, 0, 1.
    """
    out = np.empty((n_max + 1, 2 * k_max + 1, 3))
    for n in range(n_max + 1):
        for k in range(-k_max, k_max + 1):
            out[n, k + k_max, :] = roots(beta, n, k).taus
    return out


def classify(n: int, k: int, j: int) -> WaveClass:
    """Wave class of the mode (n, k, j): partition of all indices.

    Poincare: n>=1 with j=+-1; n=0, k!=0 with j=-sign(k); n=0, k=0, j=+-1.
    Rossby: n>=1, k!=0, j=0.  Kelvin: n=0, k!=0, j=0 (tau=k).
    Mixed: n=0, k!=0, j=sign(k).  Geostrophic: k=0, j=0 (tau=0).
    """
    if n < 0 or j not in (-1, 0, 1):
        raise ValueError(f"invalid mode index ({n},{k},{j})")
    if j == 0:
        if k == 0:
            return WaveClass.GEOSTROPHIC
        return WaveClass.ROSSBY if n >= 1 else WaveClass.KELVIN
    if n >= 1 or k == 0:
        return WaveClass.POINCARE
    return WaveClass.MIXED if j == (1 if k > 0 else -1) else WaveClass.POINCARE


def classify_grid(n_max: int, k_max: int) -> np.ndarray:
    """Object array of WaveClass matching the taus_grid layout."""
    out = np.empty((n_max + 1, 2 * k_max + 1, 3), dtype=object)
    for n in range(n_max + 1):
        for k in range(-k_max, k_max + 1):
            for j in (-1, 0, 1):
                out[n, k + k_max, j + 1] = classify(n, k, j)
    return out


def asymptote_large_beta(n: int, k: int, j: int, beta: float) -> float:
    """Large-beta expansion of tau(n,k,j):

    j = +-1:  j*sqrt((2n+1) beta) - k/(2(2n+1))
    j = 0:    k/(2n+1) - 4 n (n+1) k^3 / ((2n+1)^4 beta)
    """
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    m = 2 * n + 1
    if j == 0:
        return k / m - 4.0 * n * (n + 1) * k ** 3 / (m ** 4 * beta)
    return j * math.sqrt(m * beta) - k / (2.0 * m)


def asymptote_small_beta(n: int, k: int, beta: float) -> float:
    """Small-beta Rossby frequency beta/k (n >= 1, k != 0)."""
    if n < 1:
        raise ValueError("small-beta Rossby law needs n >= 1")
    if k == 0:
        raise ValueError("small-beta Rossby law needs k != 0")
    return beta / k
