"""Quadratic interaction form, partial diffusion, and their resonance-
filtered limits, all in eigenmode coordinates.

The symmetric bilinear form is the polarization of
Q(F, G) = (div(F0 G') , (F' . grad) G') :

    Q(F, G) := 1/2 [ Qdir(F, G) + Qdir(G, F) ],

assembled once as the sparse interaction tensor T[a, b, c] = (Psi_a | Q(Psi_b,
Psi_c)) over mode triples with k_a = k_b + k_c.  Hermite integrals use the
scale-3/2 Gauss-Hermite rule (exact: every integrand is exp(-3 beta x^2/2)
times a polynomial), zonal convolution is exact by construction, so tensor
entries are exact to rounding.

The resonance-filtered form keeps only entries whose frequency gap
tau_a - tau_b - tau_c vanishes (relative tolerance of the ResonantSet); the
filtered diffusion keeps the entries of (Psi_a | D' Psi_m) within an
eigenvalue group.  The geostrophic block of the filtered diffusion is the
banded kernel diffusion matrix, whose interior entries have closed forms.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import fields
from .dispersion import WaveClass
from .eigenbasis import ModeBasis, build_mode, group_eigenvalues
from .errors import ConfigurationError, UndefinedRatioError
from .hermite import HermiteContext, eval_dpsi_block, eval_psi_block
from .resonance import ResonantSet

TENSOR_VERSION = "1"
GROUP_TOL = 1e-9


def default_context(basis: ModeBasis) -> HermiteContext:
    """Quadrature context covering the basis mode span (Hermite <= n_max+1)."""
    return HermiteContext(basis.beta, basis.n_max + 2)


# ---------------------------------------------------------------------------
# partial diffusion D'
# ---------------------------------------------------------------------------

def delta_prime_field(fld: fields.SpectralField, grow: bool = True) -> fields.SpectralField:
    """D'(eta, u) = (0, Laplacian u): -k^2 zonally, exact pentadiagonal
    second-derivative rule meridionally."""
    beta, k_max = fld.beta, fld.k_max
    k2 = np.arange(-k_max, k_max + 1) ** 2
    rows = fld.n_max + (3 if grow else 1)
    out = np.zeros((3, rows, 2 * k_max + 1), dtype=complex)
    for c in (1, 2):
        lap = fields.d11_coeffs(fld.coeffs[c], beta, grow)
        lap[:fld.n_max + 1] -= k2 * fld.coeffs[c]
        out[c] = lap
    return fields.SpectralField(beta, rows - 1, k_max, out)


def _pentadiagonal(beta: float, size: int) -> np.ndarray:
    """Matrix of the second meridional derivative on Hermite coefficients."""
    p = np.zeros((size, size))
    n = np.arange(size)
    p[n, n] = -0.5 * beta * (2 * n + 1)
    m = np.arange(size - 2)
    p[m, m + 2] = 0.5 * beta * np.sqrt((m + 1.0) * (m + 2.0))
    p[m + 2, m] = p[m, m + 2]
    return p


def _mode_matrix(basis: ModeBasis, k: int, hermite_size: int) -> np.ndarray:
    """Columns = mode coefficient vectors at wavenumber k, stacked over
    components; shape (3*hermite_size, 3*(n_max+1)), mode order (n, j)."""
    nj = 3 * (basis.n_max + 1)
    out = np.zeros((3 * hermite_size, nj), dtype=complex)
    kidx = k + basis.k_max
    for n in range(basis.n_max + 1):
        for jj in range(3):
            col = 3 * n + jj
            for c in range(3):
                for off in range(3):
                    m = n - 1 + off
                    val = basis.coef[n, kidx, jj, c, off]
                    if 0 <= m < hermite_size and val != 0:
                        out[c * hermite_size + m, col] = val
    return out


def flat_block(basis: ModeBasis, k: int) -> np.ndarray:
    """Flat mode indices of the (n, j) modes at wavenumber k, (n, j) order."""
    n = np.arange(basis.n_max + 1)[:, None]
    j = np.arange(3)[None, :]
    stride = 3 * (2 * basis.k_max + 1)
    return (n * stride + (k + basis.k_max) * 3 + j).ravel()


def delta_prime_matrix(basis: ModeBasis) -> sp.csr_matrix:
    """Exact mode-space matrix D[a, m] = (Psi_a | D' Psi_m); block diagonal
    in k, banded (|n_a - n_m| <= 4) in the Hermite direction."""
    hsize = basis.n_max + 4
    pent = _pentadiagonal(basis.beta, hsize)
    rows, cols, vals = [], [], []
    for k in range(-basis.k_max, basis.k_max + 1):
        a = _mode_matrix(basis, k, hsize)
        lap = pent - (k * k) * np.eye(hsize)
        big = np.zeros((3 * hsize, 3 * hsize))
        big[hsize:2 * hsize, hsize:2 * hsize] = lap
        big[2 * hsize:, 2 * hsize:] = lap
        block = a.conj().T @ big @ a
        idx = flat_block(basis, k)
        r, c = np.nonzero(np.abs(block) > 1e-15 * max(1.0, np.abs(block).max()))
        rows.append(idx[r])
        cols.append(idx[c])
        vals.append(block[r, c])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return sp.csr_matrix((vals, (rows, cols)), shape=(basis.size, basis.size))


def eigenvalue_groups(basis: ModeBasis, tol: float = GROUP_TOL) -> np.ndarray:
    """Group ids of the mode frequencies (kernel is the only multi-mode
    group at generic beta)."""
    return group_eigenvalues(basis.taus_flat, tol)


def delta_prime_l_matrix(basis: ModeBasis, dmat: sp.csr_matrix | None = None,
                         group_tol: float = GROUP_TOL) -> sp.csr_matrix:
    """Filtered diffusion: D' restricted to each eigenvalue group
    (mode-diagonal at generic beta except within the kernel)."""
    if dmat is None:
        dmat = delta_prime_matrix(basis)
    gid = eigenvalue_groups(basis, group_tol)
    coo = dmat.tocoo()
    keep = gid[coo.row] == gid[coo.col]
    return sp.csr_matrix((coo.data[keep], (coo.row[keep], coo.col[keep])),
                         shape=dmat.shape)


# ---------------------------------------------------------------------------
# geostrophic (kernel) diffusion
# ---------------------------------------------------------------------------

def diffusion_band(beta: float, n: int, offset: int) -> float:
    """Closed-form kernel-diffusion coupling of kernel mode n to mode
    n + offset, valid when both indices are >= 1 (the n = 0 kernel mode has
    a different shape and is handled by direct integration)."""
    if offset not in (-4, -2, 0, 2, 4):
        raise ValueError("band offset must be in {-4,-2,0,2,4}")
    if n < 1 or n + offset < 1:
        raise ValueError("closed forms need both kernel indices >= 1")
    q = 0.25 * beta
    if offset == 0:
        return -q * (6.0 * n * n + 6 * n - 1) / (2.0 * n + 1)
    if offset == 2:
        return q * (4.0 * n + 6) * np.sqrt(n * (n + 3.0) / ((2.0 * n + 1) * (2 * n + 5)))
    if offset == -2:
        return q * (4.0 * n - 2) * np.sqrt((n - 2.0) * (n + 1) / ((2.0 * n + 1) * (2 * n - 3)))
    if offset == 4:
        return -q * np.sqrt(n * (n + 2.0) * (n + 3) * (n + 5) / ((2.0 * n + 1) * (2 * n + 9)))
    return -q * np.sqrt((n - 4.0) * (n - 2) * (n - 1) * (n + 1) / ((2.0 * n + 1) * (2 * n - 7)))


@dataclass
class GeostrophicDiffusion:
    """Symmetric negative-semidefinite band matrix of the kernel diffusion."""

    beta: float
    n_kernel_max: int
    matrix: np.ndarray

    def apply(self, phi_kernel: np.ndarray) -> np.ndarray:
        return self.matrix @ phi_kernel


def _kernel_mode_vectors(beta: float, n_kernel_max: int) -> np.ndarray:
    """Kernel eigenvectors as stacked coefficient columns (components eta,
    u1, u2 over Hermite <= n_kernel_max + 1)."""
    hsize = n_kernel_max + 2
    cols = np.zeros((3 * hsize, n_kernel_max + 1))
    for n in range(n_kernel_max + 1):
        mode = build_mode(beta, (n, 0, 0))
        for c, coeffs in enumerate(mode.component_coeffs()):
            for m, val in coeffs.items():
                cols[c * hsize + m, n] = val.real
    return cols


def geostrophic_diffusion(beta: float, n_kernel_max: int) -> GeostrophicDiffusion:
    """Kernel diffusion matrix G[m, n] = (kernel mode m | D' kernel mode n).

    Interior entries (both indices >= 1, all referenced Hermite indices in
    range) come from the closed band forms; rows and columns touching the
    n = 0 kernel mode or out-of-range indices come from direct integration
    (exact coefficient-space inner products).  The two routes agree to
    rounding on the overlap.
    """
    if n_kernel_max < 5:
        raise ValueError("n_kernel_max must be >= 5")
    hsize = n_kernel_max + 2
    cols = _kernel_mode_vectors(beta, n_kernel_max)
    pent = _pentadiagonal(beta, hsize)
    big = np.zeros((3 * hsize, 3 * hsize))
    big[hsize:2 * hsize, hsize:2 * hsize] = pent
    big[2 * hsize:, 2 * hsize:] = pent
    g = cols.T @ big @ cols
    # overwrite with closed forms wherever they are defined
    for n in range(1, n_kernel_max + 1):
        for off in (-4, -2, 0, 2, 4):
            m = n + off
            if 1 <= m <= n_kernel_max:
                g[m, n] = diffusion_band(beta, n, off)
    g = 0.5 * (g + g.T)
    return GeostrophicDiffusion(beta, n_kernel_max, g)


def ns_commutator_ratio(gd: GeostrophicDiffusion, s: float,
                        phi_kernel: np.ndarray) -> float:
    """|| [N_s, G] phi || / || N_s phi || with N_s = diag((1+n)^s) on kernel
    coefficients; 0  for s = 0, bounded uniformly in the truncation."""
    phi = np.asarray(phi_kernel, dtype=complex)
    if phi.shape != (gd.n_kernel_max + 1,):
        raise ValueError("kernel coefficient vector has wrong length")
    ns = (1.0 + np.arange(gd.n_kernel_max + 1)) ** s
    nphi = ns * phi
    denom = np.linalg.norm(nphi)
    if denom == 0:
        raise UndefinedRatioError("commutator ratio of zero input")
    comm = ns * (gd.matrix @ phi) - gd.matrix @ nphi
    return float(np.linalg.norm(comm) / denom)


# ---------------------------------------------------------------------------
# interaction tensor
# ---------------------------------------------------------------------------

@dataclass
class InteractionTensor:
    """Sparse symmetric interaction tensor over flat mode indices.

    values[e] = (Psi_a | Q(Psi_b, Psi_c)) with k_a = k_b + k_c, symmetric in
    (b, c); both (b, c) orderings are stored.
    """

    beta: float
    n_max: int
    k_max: int
    a_idx: np.ndarray
    b_idx: np.ndarray
    c_idx: np.ndarray
    values: np.ndarray
    version: str = TENSOR_VERSION
    _apply_cache: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return (self.n_max + 1) * (2 * self.k_max + 1) * 3

    def nnz(self) -> int:
        return self.values.size

    def check_basis(self, basis: ModeBasis) -> None:
        if (abs(self.beta - basis.beta) > 1e-12 * max(1.0, self.beta)
                or self.n_max != basis.n_max or self.k_max != basis.k_max):
            raise ConfigurationError(
                f"tensor built for (beta={self.beta}, n_max={self.n_max}, "
                f"k_max={self.k_max}); basis has (beta={basis.beta}, "
                f"n_max={basis.n_max}, k_max={basis.k_max})")

    def gaps(self, basis: ModeBasis) -> np.ndarray:
        """Frequency gaps tau_a - tau_b - tau_c per entry."""
        t = basis.taus_flat
        return t[self.a_idx] - t[self.b_idx] - t[self.c_idx]

    def resonant_mask(self, basis: ModeBasis, rset: ResonantSet) -> np.ndarray:
        rset.matches(self.beta, self.n_max, self.k_max)
        t = basis.taus_flat
        return rset.mask(t[self.a_idx], t[self.b_idx], t[self.c_idx])

    def _pair_machinery(self, key, value_mask=None):
        """CSR matvec representation out = M @ (phi[pb] * phi2[pc])."""
        if key in self._apply_cache:
            return self._apply_cache[key]
        pk = self.b_idx.astype(np.int64) * self.size + self.c_idx
        uniq, pos = np.unique(pk, return_inverse=True)
        pb = (uniq // self.size).astype(np.int64)
        pc = (uniq % self.size).astype(np.int64)
        vals = self.values if value_mask is None else self.values * value_mask
        m = sp.csr_matrix((vals, (self.a_idx, pos)),
                          shape=(self.size, uniq.size))
        self._apply_cache[key] = (m, pb, pc)
        return self._apply_cache[key]


def mode_values_at_k(basis: ModeBasis, ctx: HermiteContext, k: int,
                     psi: np.ndarray, dpsi: np.ndarray):
    """Pointwise mode component values (and x1-derivatives) at the scale-3/2
    nodes; arrays shaped (3 comps, nodes, modes at k in (n, j) order)."""
    m = psi.shape[1]
    nj = 3 * (basis.n_max + 1)
    vals = np.zeros((3, m, nj), dtype=complex)
    dvals = np.zeros((3, m, nj), dtype=complex)
    kidx = k + basis.k_max
    for off in range(3):
        rows = np.arange(basis.n_max + 1) - 1 + off
        ok = rows >= 0
        cols = (np.nonzero(ok)[0][:, None] * 3 + np.arange(3)[None, :]).ravel()
        coefs = basis.coef[:, kidx, :, :, off]  # (n, j, comp)
        for c in range(3):
            w = coefs[ok, :, c]  # (n_ok, j)
            vals[c][:, cols] += (psi[rows[ok]].T[:, :, None] * w[None, :, :]).reshape(m, -1)
            dvals[c][:, cols] += (dpsi[rows[ok]].T[:, :, None] * w[None, :, :]).reshape(m, -1)
    return vals, dvals


def build_interaction_tensor(basis: ModeBasis,
                             ctx: HermiteContext | None = None,
                             prune_tol: float = 1e-14) -> InteractionTensor:
    """Assemble the symmetric interaction tensor by exact quadrature."""
    if ctx is None:
        ctx = default_context(basis)
    if ctx.n_max < basis.n_max + 1:
        raise ConfigurationError("context must cover Hermite index n_max + 1")
    rule = ctx.rule(1.5)
    psi = eval_psi_block(ctx, basis.n_max + 1, rule.nodes)
    dpsi = eval_dpsi_block(ctx, basis.n_max + 1, rule.nodes)
    w = rule.total_weights

    cache = {}

    def at(k):
        if k not in cache:
            cache[k] = mode_values_at_k(basis, ctx, k, psi, dpsi)
        return cache[k]

    a_out, b_out, c_out, v_out = [], [], [], []
    # each of the three factors carries (2 pi)^{-1/2}; the x2 integral of the
    # matched zonal phases contributes 2 pi
    zonal = (2.0 * np.pi) ** -0.5

    def directional(kb, kc):
        """T~[a, b, c] for Qdir(Psi_b at kb, Psi_c at kc)."""
        ka = kb + kc
        va, _ = at(ka)
        vb, dvb = at(kb)
        vc, dvc = at(kc)
        aw = [np.conj(va[c]) * w[:, None] for c in range(3)]
        comp0 = (np.einsum("xb,xc->xbc", dvb[0], vc[1])
                 + np.einsum("xb,xc->xbc", vb[0], dvc[1])
                 + 1j * ka * np.einsum("xb,xc->xbc", vb[0], vc[2]))
        comp1 = (np.einsum("xb,xc->xbc", vb[1], dvc[1])
                 + 1j * kc * np.einsum("xb,xc->xbc", vb[2], vc[1]))
        comp2 = (np.einsum("xb,xc->xbc", vb[1], dvc[2])
                 + 1j * kc * np.einsum("xb,xc->xbc", vb[2], vc[2]))
        t = (np.einsum("xa,xbc->abc", aw[0], comp0)
             + np.einsum("xa,xbc->abc", aw[1], comp1)
             + np.einsum("xa,xbc->abc", aw[2], comp2))
        return zonal * t

    for kb in range(-basis.k_max, basis.k_max + 1):
        for kc in range(kb, basis.k_max + 1):
            if abs(kb + kc) > basis.k_max:
                continue
            t1 = directional(kb, kc)
            t2 = directional(kc, kb)
            tsym = 0.5 * (t1 + t2.transpose(0, 2, 1))
            fa = flat_block(basis, kb + kc)
            fb = flat_block(basis, kb)
            fc = flat_block(basis, kc)
            scale = max(1.0, np.abs(tsym).max())
            ia, ib, ic = np.nonzero(np.abs(tsym) > prune_tol * scale)
            a_out.append(fa[ia]); b_out.append(fb[ib]); c_out.append(fc[ic])
            v_out.append(tsym[ia, ib, ic])
            if kb != kc:
                a_out.append(fa[ia]); b_out.append(fc[ic]); c_out.append(fb[ib])
                v_out.append(tsym[ia, ib, ic])

    return InteractionTensor(
        basis.beta, basis.n_max, basis.k_max,
        np.concatenate(a_out).astype(np.int64),
        np.concatenate(b_out).astype(np.int64),
        np.concatenate(c_out).astype(np.int64),
        np.concatenate(v_out))


# ---------------------------------------------------------------------------
# tensor application
# ---------------------------------------------------------------------------

def q_apply(tensor: InteractionTensor, mc: fields.ModeCoefficients,
            mc2: fields.ModeCoefficients | None = None) -> fields.ModeCoefficients:
    """Full (unfiltered) symmetric bilinear form in eigen coordinates."""
    basis = mc.basis
    tensor.check_basis(basis)
    if mc2 is None:
        mc2 = mc
    m, pb, pc = tensor._pair_machinery("full")
    z = mc.phi.ravel()[pb] * mc2.phi.ravel()[pc]
    out = (m @ z).reshape(basis.shape)
    return fields.ModeCoefficients(basis, out, mc.real and mc2.real)


def q_l_apply(tensor: InteractionTensor, rset: ResonantSet,
              mc: fields.ModeCoefficients,
              mc2: fields.ModeCoefficients | None = None) -> fields.ModeCoefficients:
    """Resonance-filtered bilinear form: tensor restricted to resonant
    triads.  Its geostrophic output channel vanishes identically."""
    basis = mc.basis
    tensor.check_basis(basis)
    if mc2 is None:
        mc2 = mc
    key = ("resonant", rset.tol)
    if key not in tensor._apply_cache:
        mask = tensor.resonant_mask(basis, rset)
        tensor._pair_machinery(key, value_mask=mask)
    m, pb, pc = tensor._apply_cache[key]
    z = mc.phi.ravel()[pb] * mc2.phi.ravel()[pc]
    out = (m @ z).reshape(basis.shape)
    return fields.ModeCoefficients(basis, out, mc.real and mc2.real)


def corrector(tensor: InteractionTensor, rset: ResonantSet,
              mc_n: fields.ModeCoefficients, eps: float, t: float, nu: float,
              dmat: sp.csr_matrix | None = None,
              input_mask: np.ndarray | None = None,
              group_tol: float = GROUP_TOL) -> fields.ModeCoefficients:
    """First-order oscillatory corrector:

        - sum over nonresonant triads of exp(i (t/eps) gap) / (i gap)
          T[a,b,c] phi_b phi_c
        + nu * sum over off-group diffusion entries of
          exp(i (t/eps) (tau_a - tau_m)) / (i (tau_a - tau_m)) D[a,m] phi_m.

    Inputs must already be truncated to the solver mask (checked when
    ``input_mask`` is given); outputs range over the ambient truncation.
    """
    basis = mc_n.basis
    tensor.check_basis(basis)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if input_mask is not None and np.any(mc_n.phi[~input_mask] != 0):
        raise ValueError("corrector input has coefficients outside the mask")
    phi = mc_n.phi.ravel()
    taus = basis.taus_flat
    theta = t / eps

    mask = tensor.resonant_mask(basis, rset)
    nonres = ~mask
    g = tensor.gaps(basis)[nonres]
    scale = np.maximum(1.0, np.abs(taus[tensor.a_idx[nonres]])
                       + np.abs(taus[tensor.b_idx[nonres]])
                       + np.abs(taus[tensor.c_idx[nonres]]))
    if np.any(np.abs(g) <= rset.tol * scale):
        raise ConfigurationError(
            "phase gap below resonance tolerance in the nonresonant sum")
    wq = -np.exp(1j * theta * g) / (1j * g) * tensor.values[nonres]
    zq = wq * phi[tensor.b_idx[nonres]] * phi[tensor.c_idx[nonres]]
    out = np.zeros(basis.size, dtype=complex)
    np.add.at(out, tensor.a_idx[nonres], zq)

    if nu != 0:
        if dmat is None:
            dmat = delta_prime_matrix(basis)
        gid = eigenvalue_groups(basis, group_tol)
        coo = dmat.tocoo()
        off = gid[coo.row] != gid[coo.col]
        gd = taus[coo.row[off]] - taus[coo.col[off]]
        wd = nu * np.exp(1j * theta * gd) / (1j * gd) * coo.data[off]
        np.add.at(out, coo.row[off], wd * phi[coo.col[off]])

    return fields.ModeCoefficients(basis, out.reshape(basis.shape))


# ---------------------------------------------------------------------------
# brute-force quadrature route (oracle for q_apply)
# ---------------------------------------------------------------------------

def q_apply_quadrature(basis: ModeBasis, mc: fields.ModeCoefficients,
                       mc2: fields.ModeCoefficients | None = None) -> fields.ModeCoefficients:
    """Independent pointwise-grid evaluation of the symmetric form: synthesize
    both states, multiply on a physical grid, analyze back, differentiate in
    coefficient space, and project on the eigenbasis."""
    if mc2 is None:
        mc2 = mc
    beta = basis.beta
    n_field = basis.n_max + 1
    n_prod = 2 * n_field + 2
    k_prod = 2 * basis.k_max
    ctx = HermiteContext(beta, n_prod + 2)
    x2_count = 4 * basis.k_max + 5

    f_fld = basis.synthesize_modes(mc).with_truncation(n_prod, k_prod)
    g_fld = basis.synthesize_modes(mc2).with_truncation(n_prod, k_prod)

    def q_directional(f, g):
        fv = fields.synthesize(f, ctx, x2_count=x2_count)
        gv = fields.synthesize(g, ctx, x2_count=x2_count)
        # grad of g' in coefficient space, then pointwise
        d1gv = [fields.synthesize_scalar(
            fields.d1_coeffs(g.coeffs[c], beta, grow=False), ctx,
            x2_count=x2_count) for c in (1, 2)]
        d2gv = [fields.synthesize_scalar(
            fields.d2_coeffs(g.coeffs[c], k_prod), ctx,
            x2_count=x2_count) for c in (1, 2)]
        # component 0: div(f0 g') assembled after analysis
        p01 = fields.analyze_scalar(fv[0] * gv[1], ctx, n_prod, k_prod)
        p02 = fields.analyze_scalar(fv[0] * gv[2], ctx, n_prod, k_prod)
        comp0 = (fields.d1_coeffs(p01, beta, grow=False, clamp=True)
                 + fields.d2_coeffs(p02, k_prod))
        # components 1, 2: (f' . grad) g'
        comp1 = fields.analyze_scalar(fv[1] * d1gv[0] + fv[2] * d2gv[0],
                                      ctx, n_prod, k_prod)
        comp2 = fields.analyze_scalar(fv[1] * d1gv[1] + fv[2] * d2gv[1],
                                      ctx, n_prod, k_prod)
        return np.stack([comp0, comp1, comp2])

    total = 0.5 * (q_directional(f_fld, g_fld) + q_directional(g_fld, f_fld))
    out_fld = fields.SpectralField(beta, n_prod, k_prod, total)
    return basis.decompose(out_fld.with_truncation(n_field, basis.k_max))


def hl_inner(mc: fields.ModeCoefficients, mc2: fields.ModeCoefficients,
             s: float) -> complex:
    """Weighted inner product (mc | mc2) with weights (1+n+k^2)^s."""
    w = fields.sobolev_weights(mc.n_max, mc.k_max, s)
    return complex(np.sum(w * np.conj(mc.phi) * mc2.phi))


# ---------------------------------------------------------------------------
# tensor cache
# ---------------------------------------------------------------------------

def cache_dir() -> str:
    """Tensor cache directory: $BETAPLANE_CACHE_DIR or ~/.cache/betaplane."""
    return os.environ.get(
        "BETAPLANE_CACHE_DIR",
        os.path.join(os.path.expanduser("~"), ".cache", "betaplane"))


def save_tensor(path: str, tensor: InteractionTensor) -> None:
    """Cache file: JSON header plus the sparse entry list, each entry an
    (a, b, c) triple of (n, k, j) indices and the complex value."""
    shape = (tensor.n_max + 1, 2 * tensor.k_max + 1, 3)

    def triples(idx):
        n, kk, jj = np.unravel_index(idx, shape)
        return np.stack([n, kk - tensor.k_max, jj - 1], axis=1).astype(np.int32)

    header = {"format": "betaplane-tensor", "version": tensor.version,
              "beta": tensor.beta, "n_max": tensor.n_max, "k_max": tensor.k_max,
              "entries": int(tensor.nnz())}
    np.savez_compressed(
        path, header=json.dumps(header),
        a=triples(tensor.a_idx), b=triples(tensor.b_idx), c=triples(tensor.c_idx),
        re=tensor.values.real, im=tensor.values.imag)


def load_tensor(path: str) -> InteractionTensor:
    with np.load(path) as data:
        header = json.loads(str(data["header"]))
        if header.get("format") != "betaplane-tensor":
            raise ConfigurationError(f"not a tensor cache file: {path}")
        if header.get("version") != TENSOR_VERSION:
            raise ConfigurationError("tensor cache version mismatch")
        n_max, k_max = header["n_max"], header["k_max"]
        shape = (n_max + 1, 2 * k_max + 1, 3)

        def flat(tr):
            return np.ravel_multi_index(
                (tr[:, 0], tr[:, 1] + k_max, tr[:, 2] + 1), shape).astype(np.int64)

        return InteractionTensor(
            header["beta"], n_max, k_max,
            flat(data["a"]), flat(data["b"]), flat(data["c"]),
            data["re"] + 1j * data["im"], header["version"])


def cached_interaction_tensor(basis: ModeBasis,
                              ctx: HermiteContext | None = None,
                              directory: str | None = None) -> InteractionTensor:
    """Load the tensor for this basis from the cache, building (and saving)
    it on miss or on a stale header."""
    directory = directory or cache_dir()
    os.makedirs(directory, exist_ok=True)
    name = (f"tensor_v{TENSOR_VERSION}_beta{basis.beta:.12g}"
            f"_n{basis.n_max}_k{basis.k_max}.npz")
    path = os.path.join(directory, name)
    if os.path.exists(path):
        try:
            tensor = load_tensor(path)
            tensor.check_basis(basis)
            return tensor
        except (ConfigurationError, KeyError, ValueError):
            pass
    tensor = build_interaction_tensor(basis, ctx)
    save_tensor(path, tensor)
    return tensor
