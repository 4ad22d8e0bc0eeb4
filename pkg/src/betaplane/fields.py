"""Spectral containers and basic transforms for three-component states.

Two coordinate systems are used throughout:

- ``SpectralField``: Hermite-Fourier coefficients fhat(c, n, k) of the state
  (eta, u1, u2) in the orthonormal basis psi_n(x1) (2 pi)^{-1/2} e^{i k x2};
  dense complex array of shape (3, n_max+1, 2*k_max+1), k axis running
  -k_max..k_max.
- ``ModeCoefficients``: coefficients phi(n, k, j) over the eigenbasis of the
  rotation operator, shape (n_max+1, 2*k_max+1, 3) with j axis -1, 0, +1.
  Instances carry a reference to the ``ModeBasis`` that defines the modes.

Both are value types; all transforms here are pure.  Real-valued states
satisfy fhat(c, n, -k) = conj fhat(c, n, k) and phi(n, -k, -j) = conj
phi(n, k, j); the ``real`` flag marks fields for which that symmetry is
enforced on construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import dispersion
from .errors import ResolutionError, TruncationError

FIELD_FORMAT = "betaplane-field-v1"

_CLASS_CODES = {
    dispersion.WaveClass.POINCARE: 0,
    dispersion.WaveClass.ROSSBY: 1,
    dispersion.WaveClass.MIXED: 2,
    dispersion.WaveClass.KELVIN: 3,
    dispersion.WaveClass.GEOSTROPHIC: 4,
}


def class_code(wave_class: dispersion.WaveClass) -> int:
    return _CLASS_CODES[wave_class]


@dataclass
class SpectralField:
    """Hermite-Fourier coefficients of a three-component state."""

    beta: float
    n_max: int
    k_max: int
    coeffs: np.ndarray  # (3, n_max+1, 2*k_max+1) complex
    real: bool = False

    def __post_init__(self):
        expected = (3, self.n_max + 1, 2 * self.k_max + 1)
        if self.coeffs.shape != expected:
            raise ValueError(f"coeffs shape {self.coeffs.shape} != {expected}")
        if self.real:
            self.coeffs = 0.5 * (self.coeffs + np.conj(self.coeffs[:, :, ::-1]))

    @classmethod
    def zeros(cls, beta, n_max, k_max, real=False):
        return cls(beta, n_max, k_max,
                   np.zeros((3, n_max + 1, 2 * k_max + 1), dtype=complex), real)

    def copy(self):
        return replace(self, coeffs=self.coeffs.copy())

    def norm(self) -> float:
        """L2(R x T) norm (Parseval for the orthonormal basis)."""
        return float(np.linalg.norm(self.coeffs))

    def k_values(self) -> np.ndarray:
        return np.arange(-self.k_max, self.k_max + 1)

    def with_truncation(self, n_max, k_max):
        """Pad with zeros / crop to a new truncation."""
        out = np.zeros((3, n_max + 1, 2 * k_max + 1), dtype=complex)
        nn = min(n_max, self.n_max)
        kk = min(k_max, self.k_max)
        out[:, :nn + 1, k_max - kk:k_max + kk + 1] = \
            self.coeffs[:, :nn + 1, self.k_max - kk:self.k_max + kk + 1]
        return SpectralField(self.beta, n_max, k_max, out, self.real)


@dataclass
class ModeCoefficients:
    """State expressed over the eigenbasis; ``basis`` is a ModeBasis."""

    basis: object
    phi: np.ndarray  # (n_max+1, 2*k_max+1, 3) complex
    real: bool = False

    def __post_init__(self):
        if self.phi.shape != self.basis.shape:
            raise ValueError(f"phi shape {self.phi.shape} != {self.basis.shape}")
        if self.real:
            self.phi = conjugate_symmetrize(self.phi)

    @classmethod
    def zeros(cls, basis, real=False):
        return cls(basis, np.zeros(basis.shape, dtype=complex), real)

    @property
    def beta(self) -> float:
        return self.basis.beta

    @property
    def n_max(self) -> int:
        return self.basis.n_max

    @property
    def k_max(self) -> int:
        return self.basis.k_max

    def copy(self):
        return ModeCoefficients(self.basis, self.phi.copy(), self.real)

    def norm(self) -> float:
        return float(np.linalg.norm(self.phi))


def conjugate_symmetrize(phi: np.ndarray) -> np.ndarray:
    """Project onto phi(n,-k,-j) = conj phi(n,k,j) (real-valued states)."""
    return 0.5 * (phi + np.conj(phi[:, ::-1, ::-1]))


def mode_dot(mc: ModeCoefficients, mc2: ModeCoefficients) -> complex:
    """L2 inner product (mc | mc2), antilinear in the first slot."""
    return complex(np.vdot(mc.phi, mc2.phi))


def sobolev_weights(n_max: int, k_max: int, s: float) -> np.ndarray:
    """(1 + n + k^2)^s over the (n, k, j) grid."""
    n = np.arange(n_max + 1)[:, None, None]
    k = np.arange(-k_max, k_max + 1)[None, :, None]
    return np.broadcast_to((1.0 + n + k * k) ** s,
                           (n_max + 1, 2 * k_max + 1, 3)).copy()


def hl_norm(mc: ModeCoefficients, s: float) -> float:
    """Weighted Sobolev norm (sum (1+n+k^2)^s |phi|^2)^{1/2}; s=0 is L2."""
    if s < 0:
        raise ValueError("s must be >= 0")
    w = sobolev_weights(mc.n_max, mc.k_max, s)
    return float(np.sqrt(np.sum(w * np.abs(mc.phi) ** 2)))


def tau_weighted_norm(mc: ModeCoefficients, s: float) -> float:
    """(sum (1 + tau^2)^s |phi|^2)^{1/2} over the eigenfrequencies."""
    if s < 0:
        raise ValueError("s must be >= 0")
    w = (1.0 + mc.basis.taus ** 2) ** s
    return float(np.sqrt(np.sum(w * np.abs(mc.phi) ** 2)))


def project(mc: ModeCoefficients, wave_class: dispersion.WaveClass) -> ModeCoefficients:
    """Orthogonal projection onto one wave class (idempotent; the five
    class projections sum to the identity coefficientwise)."""
    keep = mc.basis.class_codes == class_code(wave_class)
    return ModeCoefficients(mc.basis, np.where(keep, mc.phi, 0.0), mc.real)


def project_ageostrophic(mc: ModeCoefficients) -> ModeCoefficients:
    keep = mc.basis.class_codes != class_code(dispersion.WaveClass.GEOSTROPHIC)
    return ModeCoefficients(mc.basis, np.where(keep, mc.phi, 0.0), mc.real)


def filter_modes(mc: ModeCoefficients, t: float) -> ModeCoefficients:
    """Filtering semigroup: phi -> exp(-i t tau) phi.

    Unitary, hence an isometry in every hl_norm; filter(filter(mc,t),-t)
    round-trips exactly up to rounding.
    """
    return ModeCoefficients(mc.basis, np.exp(-1j * t * mc.basis.taus) * mc.phi)


def truncation_mask(n_max: int, k_max: int, radius: float,
                    kind: str = "ball") -> np.ndarray:
    """Spectral truncation mask on the (n, k, j) rectangle.

    kind='ball': (n + k^2)^{1/2} <= radius; kind='rect': n <= radius and
    |k| <= radius.
    """
    n = np.arange(n_max + 1)[:, None, None]
    k = np.arange(-k_max, k_max + 1)[None, :, None]
    if kind == "ball":
        keep = n + k * k <= radius * radius
    elif kind == "rect":
        keep = (n <= radius) & (np.abs(k) <= radius)
    else:
        raise ValueError(f"unknown mask kind {kind!r}")
    return np.broadcast_to(keep, (n_max + 1, 2 * k_max + 1, 3)).copy()


# ---------------------------------------------------------------------------
# coefficient-space derivative / multiplier operators
# ---------------------------------------------------------------------------

def d2_coeffs(a: np.ndarray, k_max: int) -> np.ndarray:
    """Zonal derivative: multiply by i*k along the Fourier axis (last)."""
    k = np.arange(-k_max, k_max + 1)
    return a * (1j * k)


def _col(v: np.ndarray, ndim: int) -> np.ndarray:
    """Reshape a 1-d coefficient vector for broadcasting over axis 0."""
    return v.reshape((-1,) + (1,) * (ndim - 1))


def _ladder(a: np.ndarray, beta: float, sign: int, grow: bool, clamp: bool) -> np.ndarray:
    """out[n] = c_{n+1} a[n+1] + sign * c_n a[n-1], acting on axis 0."""
    a = np.asarray(a)
    n_size = a.shape[0]
    c = np.sqrt(beta * np.arange(n_size + 1) / 2.0)
    out_rows = n_size + 1 if grow else n_size
    out = np.zeros((out_rows,) + a.shape[1:], dtype=complex)
    # contribution of a[n+1] to out[n]
    out[:n_size - 1] += _col(c[1:n_size], a.ndim) * a[1:]
    # contribution of a[n-1] to out[n]
    top = out_rows
    out[1:top] += sign * _col(c[1:top], a.ndim) * a[:top - 1]
    if not grow and not clamp and np.any(a[n_size - 1] != 0):
        raise TruncationError(
            "ladder operation would shift nonzero top coefficients beyond n_max")
    return out


def d1_coeffs(a: np.ndarray, beta: float, grow: bool = True,
              clamp: bool = False) -> np.ndarray:
    """Meridional derivative via the ladder identities:
    (d1 a)[n] = c_{n+1} a[n+1] - c_n a[n-1], c_m = sqrt(beta m/2).

    grow=False raises on nonzero top coefficients unless clamp=True.
    """
    return _ladder(a, beta, -1, grow, clamp)


def bx_coeffs(a: np.ndarray, beta: float, grow: bool = True,
              clamp: bool = False) -> np.ndarray:
    """Multiplication by beta*x1: (bx a)[n] = c_{n+1} a[n+1] + c_n a[n-1]."""
    return _ladder(a, beta, +1, grow, clamp)


def d11_coeffs(a: np.ndarray, beta: float, grow: bool = True,
               clamp: bool = False) -> np.ndarray:
    """Second meridional derivative, exact pentadiagonal rule:
    (d11 a)[n] = (beta/2) [ sqrt((n+1)(n+2)) a[n+2] - (2n+1) a[n]
                            + sqrt(n(n-1)) a[n-2] ]."""
    a = np.asarray(a)
    n_size = a.shape[0]
    out_rows = n_size + 2 if grow else n_size
    out = np.zeros((out_rows,) + a.shape[1:], dtype=complex)
    n = np.arange(out_rows)
    half_beta = 0.5 * beta
    # a[n+2] term
    m = np.arange(n_size - 2)
    if m.size:
        out[:n_size - 2] += half_beta * _col(np.sqrt((m + 1.0) * (m + 2)), a.ndim) * a[2:]
    # diagonal
    out[:n_size] -= half_beta * _col(2.0 * np.arange(n_size) + 1, a.ndim) * a
    # a[n-2] term
    nn = n[2:]
    nn = nn[nn - 2 < n_size]
    out[nn] += half_beta * _col(np.sqrt(nn * (nn - 1.0)), a.ndim) * a[nn - 2]
    if not grow and not clamp and np.any(a[max(0, n_size - 2):] != 0):
        raise TruncationError(
            "d11 would shift nonzero top coefficients beyond n_max")
    return out


# ---------------------------------------------------------------------------
# physical grid synthesis / analysis
# ---------------------------------------------------------------------------

def physical_grid(ctx, k_max: int, x2_count: int | None = None):
    """Tensor grid: scale-1 Gauss-Hermite nodes in x1, uniform 2 pi grid in x2."""
    if x2_count is None:
        x2_count = 2 * k_max + 1
    x1 = ctx.rule(1.0).nodes
    x2 = 2.0 * np.pi * np.arange(x2_count) / x2_count
    return x1, x2


def synthesize_scalar(coeffs: np.ndarray, ctx, x1=None,
                      x2_count: int | None = None) -> np.ndarray:
    """Pointwise values of one scalar component from its coefficient array
    (n_max+1, 2*k_max+1): f(x1,x2) = (2 pi)^{-1/2} sum fhat psi_n e^{i k x2}."""
    from .hermite import eval_psi_block

    n_max = coeffs.shape[0] - 1
    k_max = (coeffs.shape[1] - 1) // 2
    if ctx.n_max < n_max:
        raise ResolutionError(
            f"context n_max={ctx.n_max} below field n_max={n_max}")
    if x2_count is None:
        x2_count = 2 * k_max + 1
    if x2_count < 2 * k_max + 1:
        raise ResolutionError(
            f"x2 grid of {x2_count} points aliases |k| <= {k_max}")
    if x1 is None:
        x1 = ctx.rule(1.0).nodes
    psi = eval_psi_block(ctx, n_max, np.asarray(x1, dtype=float))
    x2 = 2.0 * np.pi * np.arange(x2_count) / x2_count
    k = np.arange(-k_max, k_max + 1)
    e = np.exp(1j * np.outer(k, x2))
    vals = np.einsum("nk,nx->xk", coeffs, psi)
    return np.einsum("xk,kj->xj", vals, e) / np.sqrt(2.0 * np.pi)


def synthesize(fld: SpectralField, ctx, x1=None, x2_count: int | None = None) -> np.ndarray:
    """Pointwise values (3, len(x1), x2_count) of the three components."""
    return np.stack([synthesize_scalar(fld.coeffs[c], ctx, x1, x2_count)
                     for c in range(3)])


def analyze_scalar(values: np.ndarray, ctx, n_max: int, k_max: int) -> np.ndarray:
    """Coefficients of one scalar component sampled on the ``physical_grid``
    (exact quadrature/DFT for band-limited data)."""
    from .hermite import eval_psi_block

    if n_max > ctx.n_max:
        raise ResolutionError(f"requested n_max={n_max} beyond context {ctx.n_max}")
    m, x2_count = values.shape
    rule = ctx.rule(1.0)
    if m != rule.nodes.size:
        raise ResolutionError("values are not sampled at the context x1 nodes")
    if x2_count < 2 * k_max + 1:
        raise ResolutionError(
            f"x2 grid of {x2_count} points aliases |k| <= {k_max}")
    psi = eval_psi_block(ctx, n_max, rule.nodes)
    x2 = 2.0 * np.pi * np.arange(x2_count) / x2_count
    k = np.arange(-k_max, k_max + 1)
    e = np.exp(-1j * np.outer(k, x2)) * (2.0 * np.pi / x2_count)
    fk = np.einsum("xj,kj->xk", values.astype(complex), e)
    return np.einsum("nx,x,xk->nk", psi, rule.total_weights, fk) / np.sqrt(2.0 * np.pi)


def analyze(values: np.ndarray, ctx, beta: float, n_max: int, k_max: int,
            real: bool = False) -> SpectralField:
    """Inverse of ``synthesize``: quadrature in x1, DFT in x2."""
    coeffs = np.stack([analyze_scalar(values[c], ctx, n_max, k_max)
                       for c in range(3)])
    return SpectralField(beta, n_max, k_max, coeffs, real)


# ---------------------------------------------------------------------------
# random data and snapshot file format
# ---------------------------------------------------------------------------

def random_modes(basis, seed: int, damping: float = 2.0, amplitude: float = 1.0,
                 real: bool = True, ageostrophic_only: bool = False) -> ModeCoefficients:
    """Seeded random state: i.i.d. complex Gaussians damped by
    (1+n+k^2)^{-damping}, conjugate-symmetrized when real."""
    rng = np.random.default_rng(seed)
    shape = basis.shape
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    phi = amplitude * g * sobolev_weights(basis.n_max, basis.k_max, -damping)
    mc = ModeCoefficients(basis, phi, real)
    if ageostrophic_only:
        mc = project_ageostrophic(mc)
    return mc


def save_field(path, fld: SpectralField, time: float = 0.0):
    """Snapshot file: one JSON header line, then CSV rows
    component,n,k,re,im (zero coefficients omitted)."""
    header = {"format": FIELD_FORMAT, "beta": fld.beta, "n_max": fld.n_max,
              "k_max": fld.k_max, "real": bool(fld.real), "time": float(time)}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        fh.write("component,n,k,re,im\n")
        for c in range(3):
            for n in range(fld.n_max + 1):
                for ik, k in enumerate(range(-fld.k_max, fld.k_max + 1)):
                    z = fld.coeffs[c, n, ik]
                    if z != 0:
                        fh.write(f"{c},{n},{k},{z.real!r},{z.imag!r}\n")


def load_field(path):
    """Read a snapshot written by ``save_field``; returns (field, time)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != FIELD_FORMAT:
            raise ValueError(f"not a {FIELD_FORMAT} file: {path}")
        fld = SpectralField.zeros(header["beta"], header["n_max"], header["k_max"])
        fh.readline()  # column header
        for line in fh:
            c, n, k, re, im = line.strip().split(",")
            fld.coeffs[int(c), int(n), int(k) + fld.k_max] = float(re) + 1j * float(im)
    fld.real = header["real"]
    return fld, header["time"]
