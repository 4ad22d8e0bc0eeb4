"""Orthonormal eigenvectors of the rotation operator and exact coefficient
computations with them.

Modes live in the orthonormal Hermite-Fourier convention: a mode (n, k, j)
is stored as complex coefficients over the basis psi_m(x1) (2 pi)^{-1/2}
e^{i k x2}, supported on Hermite indices m in {n-1, n, n+1}.

Frequency convention.  The dispersion cubic of :mod:`betaplane.dispersion`
enumerates the frequency triples in the mirrored zonal bookkeeping: the
actual eigenfrequency of the operator L at wavenumber k is

    nu(n, k, j) = tau(n, -k, j)          (oscillating families)
    nu(0, k, 0) = k                      (Kelvin; u1 = 0, outside the cubic)
    nu(n, 0, 0) = 0                      (kernel)

so that L Psi = i nu Psi holds exactly for the literal operator
L(eta,u) = (div u, beta x1 u2 + d1 eta, -beta x1 u1 + d2 eta).  Both
conventions agree on the Kelvin, kernel and k = 0 branches, and the
frequency SETS at each (n, |k|) coincide; only the (k, j) labelling of the
oscillating roots is mirrored.

Eigenvector shapes, with r- = sqrt(beta n/2)/(nu+k) and
r+ = sqrt(beta (n+1)/2)/(nu-k), up to the unit-norm factor
(1 + 2 r-^2 + 2 r+^2)^{-1/2}:

- oscillating:  eta = -i r- psi_{n-1} + i r+ psi_{n+1},   u1 = psi_n,
                u2  = +i r- psi_{n-1} + i r+ psi_{n+1};
- geostrophic (k = 0, j = 0, n >= 1), g = (2n+1)^{-1/2}:
      eta = g (-sqrt((n+1)/2) psi_{n-1} - sqrt(n/2) psi_{n+1}),  u1 = 0,
      u2  = g (+sqrt((n+1)/2) psi_{n-1} - sqrt(n/2) psi_{n+1});
- Kelvin family (n = 0, j = 0) and the n = 0 kernel mode:
      eta = u2 = psi_0 / sqrt(2),  u1 = 0.

At beta = 2 k^2 the n = 0 dispersion root is double; construction refuses
such beta (eigenvalue grouping would mix Kelvin with an oscillating mode).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dispersion, fields
from .dispersion import ModeIndex, WaveClass
from .errors import DegenerateSpectrumError

_DEGENERACY_TOL = 1e-8
_GROUP_TOL = 1e-9


def is_degenerate(beta: float, k: int) -> bool:
    """True when beta coincides with 2 k^2 up to the acceptance tolerance."""
    return abs(beta - 2.0 * k * k) <= _DEGENERACY_TOL * max(1.0, beta)


@dataclass(frozen=True)
class EigenMode:
    """One eigenvector: index, frequency and sparse Hermite coefficients."""

    index: ModeIndex
    tau: float
    wave_class: WaveClass
    eta_coeffs: dict
    u1_coeffs: dict
    u2_coeffs: dict

    @property
    def k(self) -> int:
        return self.index.k

    def component_coeffs(self) -> tuple[dict, dict, dict]:
        return (self.eta_coeffs, self.u1_coeffs, self.u2_coeffs)


def build_mode(beta: float, index) -> EigenMode:
    """Construct the orthonormal eigenvector for one mode index."""
    if not isinstance(index, ModeIndex):
        index = ModeIndex(*index)
    n, k, j = index.astuple()
    wave_class = dispersion.classify(n, k, j)
    if n == 0 and j != 0 and is_degenerate(beta, k):
        raise DegenerateSpectrumError(
            f"beta={beta} equals 2k^2 for k={k}: double root, eigenvector "
            "formula singular")
    if wave_class is WaveClass.GEOSTROPHIC and n == 0:
        amp = 1.0 / np.sqrt(2.0)
        return EigenMode(index, 0.0, wave_class, {0: amp}, {}, {0: amp})
    if wave_class is WaveClass.KELVIN:
        amp = 1.0 / np.sqrt(2.0)
        return EigenMode(index, float(k), wave_class, {0: amp}, {}, {0: amp})
    if wave_class is WaveClass.GEOSTROPHIC:
        g = (2.0 * n + 1.0) ** -0.5
        lo = np.sqrt((n + 1) / 2.0) * g
        hi = np.sqrt(n / 2.0) * g
        return EigenMode(index, 0.0, wave_class,
                         {n - 1: -lo, n + 1: -hi}, {}, {n - 1: lo, n + 1: -hi})
    nu = dispersion.tau(beta, n, -k, j)
    r_plus = np.sqrt(beta * (n + 1) / 2.0) / (nu - k)
    r_minus = np.sqrt(beta * n / 2.0) / (nu + k) if n >= 1 else 0.0
    norm = (1.0 + 2.0 * r_minus ** 2 + 2.0 * r_plus ** 2) ** -0.5
    eta = {n + 1: 1j * r_plus * norm}
    u2 = {n + 1: 1j * r_plus * norm}
    if n >= 1:
        eta[n - 1] = -1j * r_minus * norm
        u2[n - 1] = 1j * r_minus * norm
    return EigenMode(index, nu, wave_class, eta, {n: norm}, u2)


class ModeBasis:
    """All eigenvectors for a rectangular truncation n <= n_max, |k| <= k_max.

    Immutable after construction; shared read-only by every consumer.  The
    coefficient table ``coef`` has shape (n_max+1, 2k_max+1, 3, 3, 3):
    (n, k index, j index, component, offset) with offset o covering Hermite
    index n - 1 + o.
    """

    def __init__(self, beta: float, n_max: int, k_max: int):
        if n_max < 1 or k_max < 0:
            raise ValueError("need n_max >= 1 and k_max >= 0")
        for k in range(1, k_max + 1):
            if is_degenerate(beta, k):
                raise DegenerateSpectrumError(
                    f"beta={beta} equals 2k^2 at k={k}; choose a generic beta")
        self.beta = float(beta)
        self.n_max = int(n_max)
        self.k_max = int(k_max)
        self.shape = (n_max + 1, 2 * k_max + 1, 3)
        self.taus = dispersion.taus_grid(beta, n_max, k_max)
        self.class_codes = np.empty(self.shape, dtype=np.int8)
        self.coef = np.zeros(self.shape + (3, 3), dtype=complex)
        for n in range(n_max + 1):
            for k in range(-k_max, k_max + 1):
                for j in (-1, 0, 1):
                    mode = build_mode(beta, (n, k, j))
                    sl = self.indices(n, k, j)
                    self.taus[sl] = mode.tau
                    self.class_codes[sl] = fields.class_code(mode.wave_class)
                    for c, coeffs in enumerate(mode.component_coeffs()):
                        for m, val in coeffs.items():
                            self.coef[sl + (c, m - n + 1)] = val
        self.taus_flat = self.taus.ravel()
        self.codes_flat = self.class_codes.ravel()

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def indices(self, n: int, k: int, j: int) -> tuple[int, int, int]:
        return (n, k + self.k_max, j + 1)

    def flat_index(self, n: int, k: int, j: int) -> int:
        return int(np.ravel_multi_index(self.indices(n, k, j), self.shape))

    def mode(self, n: int, k: int, j: int) -> EigenMode:
        return build_mode(self.beta, (n, k, j))

    def tau(self, n: int, k: int, j: int) -> float:
        return float(self.taus[self.indices(n, k, j)])

    def kernel_flat_indices(self) -> np.ndarray:
        """Flat indices of the kernel (geostrophic) modes, ordered by n."""
        geo = fields.class_code(WaveClass.GEOSTROPHIC)
        return np.flatnonzero(self.codes_flat == geo)

    # -- transforms ---------------------------------------------------------

    def decompose(self, fld: fields.SpectralField) -> fields.ModeCoefficients:
        """Inner-product decomposition phi = (Psi_{n,k,j} | field).

        Exact (round-trip to rounding) whenever n_max >= field.n_max + 1.
        """
        self._check_field(fld, need_cover=False)
        npts = self.n_max + 1
        hmax = fld.n_max
        phi = np.zeros(self.shape, dtype=complex)
        for off in range(3):
            lo = max(0, 1 - off)
            hi = min(self.n_max, hmax + 1 - off)
            if hi < lo:
                continue
            rows = slice(lo + off - 1, hi + off)
            for c in range(3):
                phi[lo:hi + 1] += (np.conj(self.coef[lo:hi + 1, :, :, c, off])
                                   * fld.coeffs[c, rows, :, None])
        return fields.ModeCoefficients(self, phi, fld.real)

    def synthesize_modes(self, mc: fields.ModeCoefficients) -> fields.SpectralField:
        """Exact Hermite-Fourier coefficients of sum phi * Psi; the field
        truncation grows to n_max + 1."""
        out = fields.SpectralField.zeros(self.beta, self.n_max + 1, self.k_max,
                                         real=mc.real)
        for off in range(3):
            lo = max(0, 1 - off)
            rows = slice(lo + off - 1, self.n_max + off)
            for c in range(3):
                out.coeffs[c, rows, :] += np.sum(
                    self.coef[lo:, :, :, c, off] * mc.phi[lo:], axis=-1)
        if mc.real:
            out.coeffs = 0.5 * (out.coeffs + np.conj(out.coeffs[:, :, ::-1]))
        return out

    def mode_field(self, n: int, k: int, j: int) -> fields.SpectralField:
        mc = fields.ModeCoefficients.zeros(self)
        mc.phi[self.indices(n, k, j)] = 1.0
        return self.synthesize_modes(mc)

    def mode_coefficients(self, n: int, k: int, j: int,
                          amplitude: complex = 1.0) -> fields.ModeCoefficients:
        mc = fields.ModeCoefficients.zeros(self)
        mc.phi[self.indices(n, k, j)] = amplitude
        return mc

    def _check_field(self, fld: fields.SpectralField, need_cover: bool):
        if fld.k_max != self.k_max:
            raise ValueError(
                f"field k_max={fld.k_max} differs from basis k_max={self.k_max}")
        if abs(fld.beta - self.beta) > 1e-12 * max(1.0, self.beta):
            raise ValueError("field beta differs from basis beta")
        if need_cover and fld.n_max < self.n_max + 1:
            raise ValueError("field truncation does not cover the mode span")


def apply_L(fld: fields.SpectralField, grow: bool = True) -> fields.SpectralField:
    """Exact coefficient-space application of
    L(eta,u) = (div u, beta x1 u2 + d1 eta, -beta x1 u1 + d2 eta)."""
    beta, k_max = fld.beta, fld.k_max
    eta, u1, u2 = fld.coeffs
    d2u2 = fields.d2_coeffs(u2, k_max)
    d2eta = fields.d2_coeffs(eta, k_max)
    out0 = fields.d1_coeffs(u1, beta, grow)
    out1 = fields.bx_coeffs(u2, beta, grow) + fields.d1_coeffs(eta, beta, grow)
    out2 = -fields.bx_coeffs(u1, beta, grow)
    if grow:
        pad = np.zeros((1, 2 * k_max + 1), dtype=complex)
        d2u2 = np.concatenate([d2u2, pad])
        d2eta = np.concatenate([d2eta, pad])
    out0 = out0 + d2u2
    out2 = out2 + d2eta
    coeffs = np.stack([out0, out1, out2])
    return fields.SpectralField(beta, fld.n_max + (1 if grow else 0), k_max, coeffs)


def eigen_residual(basis: ModeBasis, n: int, k: int, j: int) -> float:
    """|| L Psi - i tau Psi ||_{L2}; machine-small by construction."""
    f = basis.mode_field(n, k, j)
    lf = apply_L(f, grow=True)
    lf.coeffs[:, :f.coeffs.shape[1]] -= 1j * basis.tau(n, k, j) * f.coeffs
    return lf.norm()


def decomposition_matrix(basis: ModeBasis, n: int, k: int) -> np.ndarray:
    """3x3 matrix sending (phi_{n,k,-1}, phi_{n,k,0}, phi_{n,k,1}) to the
    Hermite-Fourier data slots owned by the (n, k) block:

    n >= 1: [ (eta - u2)/2 at n-1, u1 at n, (eta + u2)/2 at n+1 ]
    n == 0: [ (eta + u2)/2 at 0,   u1 at 0, (eta + u2)/2 at 1 ]
    """
    m = np.zeros((3, 3), dtype=complex)
    for col, j in enumerate((-1, 0, 1)):
        sl = basis.indices(n, k, j)
        eta = basis.coef[sl + (0,)]
        u1 = basis.coef[sl + (1,)]
        u2 = basis.coef[sl + (2,)]
        if n >= 1:
            m[0, col] = 0.5 * (eta[0] - u2[0])
            m[1, col] = u1[1]
            m[2, col] = 0.5 * (eta[2] + u2[2])
        else:
            m[0, col] = 0.5 * (eta[1] + u2[1])
            m[1, col] = u1[1]
            m[2, col] = 0.5 * (eta[2] + u2[2])
    return m


def decompose_via_matrices(basis: ModeBasis,
                           fld: fields.SpectralField) -> fields.ModeCoefficients:
    """Validation path for ``ModeBasis.decompose`` through the 3x3 block
    matrices; agrees with the inner-product route to rounding."""
    basis._check_field(fld, need_cover=False)
    phi = np.zeros(basis.shape, dtype=complex)
    f = fld.coeffs

    def fhat(c, m, ik):
        if 0 <= m <= fld.n_max:
            return f[c, m, ik]
        return 0.0

    for n in range(basis.n_max + 1):
        for ik in range(2 * basis.k_max + 1):
            k = ik - basis.k_max
            if n >= 1:
                data = np.array([
                    0.5 * (fhat(0, n - 1, ik) - fhat(2, n - 1, ik)),
                    fhat(1, n, ik),
                    0.5 * (fhat(0, n + 1, ik) + fhat(2, n + 1, ik))])
            else:
                data = np.array([
                    0.5 * (fhat(0, 0, ik) + fhat(2, 0, ik)),
                    fhat(1, 0, ik),
                    0.5 * (fhat(0, 1, ik) + fhat(2, 1, ik))])
            phi[n, ik, :] = np.linalg.solve(decomposition_matrix(basis, n, k), data)
    return fields.ModeCoefficients(basis, phi, fld.real)


def group_eigenvalues(taus: np.ndarray, tol: float = _GROUP_TOL) -> np.ndarray:
    """Group ids such that |tau - tau'| <= tol*max(1,|tau|) within a group.

    At generic beta the only multi-mode group is the kernel (tau = 0).
    """
    flat = np.asarray(taus).ravel()
    order = np.argsort(flat)
    gids = np.empty(flat.size, dtype=np.int64)
    gid = 0
    prev = None
    for pos in order:
        t = flat[pos]
        if prev is not None and abs(t - prev) > tol * max(1.0, abs(t)):
            gid += 1
        gids[pos] = gid
        prev = t
    return gids
