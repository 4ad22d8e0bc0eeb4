"""Executable invariant suites.

Each suite checks the structural properties its module promises (orthonormality,
recurrences, residuals, cancellations, stability of empirical constants, ...)
and returns a one-line verdict.  The CLI ``selftest`` command runs every suite;
the pytest suite reuses them alongside finer-grained oracle tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from . import dispersion, eigenbasis, fields, hermite, operators, resonance, solver
from .dispersion import WaveClass


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: {self.detail}"


class _Check:
    def __init__(self):
        self.worst: dict = {}
        self.failures: list = []

    def le(self, label, value, bound):
        self.worst[label] = max(self.worst.get(label, 0.0), value)
        if not (value <= bound):
            self.failures.append(f"{label}={value:.3e} > {bound:.3e}")

    def ok(self, label, cond, detail=""):
        if not cond:
            self.failures.append(f"{label} {detail}")

    def result(self, name) -> SuiteResult:
        if self.failures:
            return SuiteResult(name, False, "; ".join(self.failures[:4]))
        detail = ", ".join(f"{k}={v:.2e}" for k, v in
                           itertools.islice(self.worst.items(), 4))
        return SuiteResult(name, True, detail or "ok")


# ---------------------------------------------------------------------------

def suite_hermite(fast: bool = False) -> SuiteResult:
    c = _Check()
    n_top = 24 if fast else 40
    betas = (1.0,) if fast else (0.5, 1.0, 2.0)
    for beta in betas:
        ctx = hermite.HermiteContext(beta, n_top)
        rule = ctx.rule(1.0)
        tab = ctx.psi_table(1.0)
        gram = (tab * rule.total_weights) @ tab.T
        c.le(f"orthonormality(beta={beta})",
             float(np.abs(gram - np.eye(n_top + 1)).max()), 1e-10)
        # ladder recurrence residual at 100 sample points
        x = np.linspace(-8 / np.sqrt(beta), 8 / np.sqrt(beta), 100)
        psi = hermite.eval_psi_block(ctx, n_top, x)
        dpsi = hermite.eval_dpsi_block(ctx, n_top, x)
        for n in range(1, n_top + 1):
            res = np.abs(dpsi[n] + beta * x * psi[n]
                         - np.sqrt(2 * beta * n) * psi[n - 1]).max()
            c.le("recurrence", res / (1 + np.sqrt(n)), 1e-9)
        # uniform bound with the unit-norm beta^(1/4) scaling
        xs = np.linspace(-25 / np.sqrt(beta), 25 / np.sqrt(beta), 4001)
        vals = hermite.eval_psi_block(ctx, n_top, xs)
        c.le(f"sup|psi|(beta={beta})", float(np.abs(vals).max()),
             1.09 * beta ** 0.25)
        # parity is exact in the recurrence arithmetic
        signs = (-1.0) ** np.arange(n_top + 1)
        vals_neg = hermite.eval_psi_block(ctx, n_top, -xs)
        c.le("parity", float(np.abs(vals - signs[:, None] * vals_neg).max()), 0.0)
    # oscillator ODE residual via second central differences: O(h^2)
    ctx = hermite.HermiteContext(1.0, 12)
    x = np.linspace(-3.0, 3.0, 41)
    errs = []
    for h in (1e-2, 5e-3, 2.5e-3):
        psi_m = hermite.eval_psi_block(ctx, 9, x - h)
        psi_0 = hermite.eval_psi_block(ctx, 9, x)
        psi_p = hermite.eval_psi_block(ctx, 9, x + h)
        lap = (psi_p - 2 * psi_0 + psi_m) / h ** 2
        n = np.arange(10)[:, None]
        errs.append(np.abs(-lap + x ** 2 * psi_0 - (2 * n + 1) * psi_0).max())
    c.ok("ode-residual-h2", errs[0] / errs[2] > 10,
         f"ratios {errs[0]/errs[1]:.2f}, {errs[1]/errs[2]:.2f}")
    # triple-product symmetry and selection rules, exhaustive to 12
    ctx = hermite.HermiteContext(1.0, 12)
    top = 8 if fast else 12
    for a in range(top + 1):
        for b in range(a, top + 1):
            for cc in range(b, top + 1):
                v = hermite.triple_product(ctx, a, b, cc)
                perms = {hermite.triple_product(ctx, *p)
                         for p in itertools.permutations((a, b, cc))}
                c.le("triple-permutation", max(abs(v - p) for p in perms), 0.0)
                if (a + b + cc) % 2 == 1 or cc > a + b:
                    c.le("triple-selection", abs(v), 1e-14)
    return c.result("hermite invariants")


def suite_dispersion(fast: bool = False) -> SuiteResult:
    c = _Check()
    n_top, k_top = (24, 24) if fast else (64, 64)
    betas = (1.0, 10.0) if fast else (0.3, 1.0, float(np.e), 10.0)
    for beta in betas:
        for n in range(n_top + 1):
            for k in range(-k_top, k_top + 1, 1 if not fast else 2):
                tr = dispersion.roots(beta, n, k)
                t = np.array(tr.taus)
                a = k * k + beta * (2 * n + 1)
                res = np.abs(t ** 3 - a * t + beta * k)
                c.le("root-residual", float((res / (1 + np.abs(t) ** 3)).max()), 1e-10)
                scale = max(1.0, a)
                c.le("sym-sum", abs(t.sum()) / scale, 1e-9)
                c.le("sym-pair", abs(t[0] * t[1] + t[0] * t[2] + t[1] * t[2] + a) / scale, 1e-9)
                c.le("sym-prod", abs(np.prod(t) + beta * k) / max(1.0, abs(beta * k)), 1e-9)
                if n >= 1 and k != 0:
                    # no root can sit at +-k: |P(+-k)| >= beta*min(2n,2n+2)|k|/2,
                    # so every root keeps distance |P(+-k)| / sup|P'|
                    margin = beta * min(2 * n, 2 * n + 2) * abs(k) / 2.0
                    for sgn in (1, -1):
                        pk = abs((sgn * k) ** 3 - a * (sgn * k) + beta * k)
                        c.ok("cubic-at-pm-k-margin", pk >= margin * 0.99,
                             f"|P({sgn}k)|={pk:.2e} < {margin:.2e}")
                        dpmax = 3.0 * max(np.abs(t).max(), abs(k)) ** 2 + a
                        c.ok("no-root-at-pm-k",
                             np.abs(t - sgn * k).min() >= 0.9 * pk / dpmax,
                             f"(n,k)=({n},{k})")
                if n >= 1 and n + abs(k) >= 50:
                    s = np.sqrt(k * k + beta * (2 * n + 1))
                    c.le("poincare-asym", abs(t[2] - s) / s, 0.05)
                    c.le("poincare-asym", abs(t[0] + s) / s, 0.05)
                    if k != 0:
                        r = t[1] * (k * k + beta * (2 * n + 1)) / (beta * k)
                        c.ok("rossby-asym", 0.9 <= r <= 1.1, f"ratio {r:.3f}")
        # uniqueness of nonzero frequencies across n at fixed k
        for k in (1, 3):
            taus = np.concatenate([dispersion.roots(beta, n, k).taus
                                   for n in range(25)])
            taus = np.sort(taus[np.abs(taus) > 1e-12])
            c.ok("tau-uniqueness", np.min(np.diff(taus)) > 1e-9,
                 f"duplicate tau at beta={beta}, k={k}")
    return c.result("dispersion invariants")


def suite_eigenbasis(fast: bool = False) -> SuiteResult:
    c = _Check()
    top = 6 if fast else 12
    basis = eigenbasis.ModeBasis(1.0, top, top)
    hsize = top + 2
    worst_gram = 0.0
    for k in range(-top, top + 1):
        a = operators._mode_matrix(basis, k, hsize)
        gram = a.conj().T @ a
        worst_gram = max(worst_gram, float(np.abs(gram - np.eye(gram.shape[0])).max()))
    c.le("gram-deviation", worst_gram, 1e-8)
    worst_res = 0.0
    ratios = []
    comp_ratio = 0.0
    for n in range(top + 1):
        for k in range(-top, top + 1):
            for j in (-1, 0, 1):
                worst_res = max(worst_res, eigenbasis.eigen_residual(basis, n, k, j))
                f = basis.mode_field(n, k, j)
                d1 = np.stack([fields.d1_coeffs(f.coeffs[cc], 1.0) for cc in range(3)])
                d2 = np.stack([fields.d2_coeffs(f.coeffs[cc], top) for cc in range(3)])
                h1 = np.sqrt(f.norm() ** 2 + np.linalg.norm(d1) ** 2
                             + np.linalg.norm(d2) ** 2)
                ratios.append(h1 / np.sqrt(1.0 + n + k * k))
                if basis.class_codes[basis.indices(n, k, j)] != fields.class_code(
                        WaveClass.GEOSTROPHIC):
                    eta = np.linalg.norm(f.coeffs[0])
                    vel = np.linalg.norm(f.coeffs[1:])
                    comp_ratio = max(comp_ratio, eta / vel)
    c.le("eigen-residual", worst_res, 1e-9)
    c.le("component-ratio-Cprime", comp_ratio, 10.0)
    ratios = np.array(ratios)
    c.ok("sobolev-growth", 0.2 <= ratios.min() and ratios.max() <= 5.0,
         f"H1 ratio range [{ratios.min():.2f}, {ratios.max():.2f}]")
    return c.result("eigenbasis invariants")


def suite_fields(fast: bool = False) -> SuiteResult:
    c = _Check()
    beta = 1.0
    basis = eigenbasis.ModeBasis(beta, 6, 6)
    mc = fields.random_modes(basis, seed=5, real=True)
    total = np.zeros(basis.shape, dtype=complex)
    for wc in WaveClass:
        total += fields.project(mc, wc).phi
    c.le("projections-sum-to-identity", float(np.abs(total - mc.phi).max()), 0.0)
    pk = fields.project(mc, WaveClass.KELVIN)
    c.le("projection-idempotent",
         float(np.abs(fields.project(pk, WaveClass.KELVIN).phi - pk.phi).max()), 0.0)
    for s in (0.0, 1.0, 2.0):
        before = fields.hl_norm(mc, s)
        after = fields.hl_norm(fields.filter_modes(mc, 0.73), s)
        c.le(f"filter-isometry(s={s})", abs(after - before) / before, 1e-12)
    rt = fields.filter_modes(fields.filter_modes(mc, 0.4), -0.4)
    c.le("filter-group-property", float(np.abs(rt.phi - mc.phi).max()), 1e-12)
    # hl_norm vs harmonic-oscillator norm equivalence
    count = 20 if fast else 100
    n = np.arange(basis.n_max + 1)[:, None]
    k = np.arange(-basis.k_max, basis.k_max + 1)[None, :]
    osc = 1.0 + k * k + beta * (2 * n + 1)
    for s in (0, 1, 2):
        lo, hi = min(1.0, beta) ** s, (2.0 * max(1.0, beta)) ** s
        for seed in range(count):
            mcs = fields.random_modes(basis, seed=seed)
            f = basis.synthesize_modes(mcs)
            w = osc[: f.n_max + 1] if f.n_max + 1 <= osc.shape[0] else None
            nn = np.arange(f.n_max + 1)[:, None]
            wfull = (1.0 + k * k + beta * (2 * nn + 1)) ** (s / 2.0)
            hnorm = float(np.linalg.norm(wfull * f.coeffs))
            ratio = hnorm / fields.hl_norm(mcs, s)
            c.ok(f"hl-equivalence(s={s})", 0.99 * lo <= ratio <= 1.01 * hi,
                 f"ratio {ratio:.3f} outside [{lo:.2f},{hi:.2f}]")
        # Kelvin + Poincare states: tau-weighted vs hl norms comparable
        for seed in range(0, count, 5):
            mcs = fields.random_modes(basis, seed=seed)
            kp = fields.ModeCoefficients(
                basis, fields.project(mcs, WaveClass.KELVIN).phi
                + fields.project(mcs, WaveClass.POINCARE).phi)
            if kp.norm() == 0:
                continue
            r = fields.tau_weighted_norm(kp, s) / fields.hl_norm(kp, s)
            c.ok(f"tau-vs-hl(s={s})", 0.3 ** s <= r <= 3.2 ** s or s == 0,
                 f"ratio {r:.3f}")
    # synthesis round trip on a band-limited field
    ctx = hermite.HermiteContext(beta, basis.n_max + 2)
    f = basis.synthesize_modes(mc)
    vals = fields.synthesize(f, ctx)
    back = fields.analyze(vals, ctx, beta, f.n_max, f.k_max)
    c.le("analyze-synthesize-roundtrip",
         float(np.abs(back.coeffs - f.coeffs).max()) / f.norm(), 1e-9)
    c.le("real-field-imag-part", float(np.abs(vals.imag).max()), 1e-10)
    return c.result("fields invariants")


def suite_resonance(fast: bool = False) -> SuiteResult:
    c = _Check()
    beta = float(np.e)
    scan = resonance.scan_triads(beta, 4, 4, tol=1e-9)
    c.ok("generic-beta-no-accidental", scan.accidental_count == 0,
         f"{scan.accidental_count} accidental triads")
    c.ok("classification-totality",
         all(r.classification in (resonance.ZERO_MODE, resonance.ALL_KELVIN,
                                  resonance.ACCIDENTAL) for r in scan.records))
    c.ok("min-nonexempt-defect", scan.min_nonexempt_defect >= 1e-6,
         f"{scan.min_nonexempt_defect:.2e}")
    kelvin = [r for r in scan.records if r.classification == resonance.ALL_KELVIN]
    c.ok("kelvin-exactness", kelvin and max(abs(r.defect) for r in kelvin) < 1e-14)
    # beta^6 growth trend of |P| for a two-zero-index pattern
    betas = np.array([1e2, 1e4, 1e6])
    vals = np.array([abs(resonance.p_polynomial(bb, 1, 1, 0, 1, 1)) for bb in betas])
    slope = np.polyfit(np.log(betas), np.log(vals), 1)[0]
    c.ok("p-beta6-trend", slope >= 5.5 and vals[0] < vals[1] < vals[2],
         f"slope {slope:.2f}")
    # fast-branch leading coefficient at beta = 1e8
    bige = 1e8
    for (n, k, j), (ns, ks, js), (m, l) in [((1, 1, 1), (2, 1, 1), (1, 1)),
                                            ((0, 2, -1), (1, -1, 1), (3, -1)),
                                            ((2, 0, 1), (2, 2, -1), (0, 1))]:
        d = resonance.triad_defect(bige, (n, k, j), (ns, ks, js), (m, k + ks, l))
        lead = (j * np.sqrt(2 * n + 1) + js * np.sqrt(2 * ns + 1)
                - l * np.sqrt(2 * m + 1))
        c.le("fast-branch-coefficient",
             abs(d / np.sqrt(bige) - lead) / max(abs(lead), 1e-3), 1e-3)
    return c.result("resonance invariants")


def suite_operators(fast: bool = False) -> SuiteResult:
    c = _Check()
    beta = float(np.e)
    basis = eigenbasis.ModeBasis(beta, 6, 6)
    tensor = operators.build_interaction_tensor(basis)
    rset = resonance.resonant_set(beta, 6, 6)
    # geostrophic invariance of Q_L
    count = 10 if fast else 50
    for seed in range(count):
        mc = fields.random_modes(basis, seed=seed)
        out = operators.q_l_apply(tensor, rset, mc)
        c.le("geostrophic-invariance",
             fields.project(out, WaveClass.GEOSTROPHIC).norm(), 1e-10)
    # tensor vs pointwise-quadrature oracle
    for seed in range(3 if fast else 8):
        mc = fields.random_modes(basis, seed=100 + seed)
        a = operators.q_apply(tensor, mc)
        b = operators.q_apply_quadrature(basis, mc)
        c.le("tensor-vs-quadrature",
             float(np.linalg.norm(a.phi - b.phi) / max(np.linalg.norm(a.phi), 1e-30)),
             1e-8)
    # parabolicity constant stability under truncation doubling
    consts = []
    for size in ((8, 8), (16, 16)):
        bb = eigenbasis.ModeBasis(beta, *size)
        dl = operators.delta_prime_l_matrix(bb)
        cmax = 0.0
        for seed in range(20 if fast else 100):
            mc = fields.random_modes(bb, seed=seed, ageostrophic_only=True)
            y = mc.phi.ravel()
            num = fields.hl_norm(mc, 1.0) ** 2
            den = float(np.real(np.vdot(y, -(dl @ y))))
            cmax = max(cmax, num / den)
        consts.append(cmax)
    change = abs(consts[1] - consts[0]) / consts[0]
    c.ok("parabolicity-stability", change < 0.25,
         f"C0 {consts[0]:.2f} -> {consts[1]:.2f} ({100*change:.0f}%)")
    # (phi | -D'_L phi) >= 0 and geostrophic diffusion agreement
    dmat = operators.delta_prime_matrix(basis)
    dlmat = operators.delta_prime_l_matrix(basis, dmat)
    for seed in range(20):
        y = fields.random_modes(basis, seed=seed).phi.ravel()
        c.ok("dissipativity", np.real(np.vdot(y, -(dlmat @ y))) >= -1e-12)
    gd = operators.geostrophic_diffusion(beta, 12)
    kf = basis.kernel_flat_indices()
    sub = dlmat[np.ix_(kf, kf)].toarray().real
    c.le("kernel-block-vs-band-matrix",
         float(np.abs(sub - gd.matrix[:kf.size, :kf.size]).max()), 1e-10)
    return c.result("operators invariants")


def suite_solver(fast: bool = False) -> SuiteResult:
    c = _Check()
    beta = float(np.e)
    cfg = solver.SolverConfig(beta=beta, n_max=4, k_max=4, n_ball=4, dt=1e-3,
                              t_final=0.2 if fast else 0.5, nu=0.1,
                              mask_kind="ball", amplitude=0.4, seed=3)
    ops = solver.prepare_operators(cfg)
    mc0 = solver.initial_data(cfg, ops)
    traj = solver.integrate_limit(cfg, mc0, ops)
    d = traj.diagnostics
    modulated = d.l2 ** 2 + 2 * cfg.nu * d.dissipation
    c.le("energy-inequality", float((modulated - d.l2[0] ** 2).max()) / d.l2[0] ** 2,
         1e-6)
    c.ok("truncation-consistency",
         all(np.all(s[~ops.mask] == 0) for s in traj.states))
    # nu = 0 drift
    cfg0 = replace(cfg, nu=0.0)
    traj0 = solver.integrate_limit(cfg0, mc0, ops)
    c.le("nu0-drift", float(np.abs(traj0.diagnostics.l2 ** 2
                                   - traj0.diagnostics.l2[0] ** 2).max())
         / traj0.diagnostics.l2[0] ** 2, 1e-6)
    # RK4 self-convergence ~ dt^4
    cfgc = replace(cfg, t_final=0.1, dt=4e-3)
    y_coarse = solver.integrate_limit(cfgc, mc0, ops).states[-1]
    y_mid = solver.integrate_limit(replace(cfgc, dt=2e-3), mc0, ops).states[-1]
    y_fine = solver.integrate_limit(replace(cfgc, dt=1e-3), mc0, ops).states[-1]
    e1 = np.linalg.norm(y_coarse - y_fine)
    e2 = np.linalg.norm(y_mid - y_fine)
    c.ok("rk4-self-convergence", e1 / e2 > 8,
         f"halving dt reduced error by {e1/e2:.1f}x (expect ~16x)")
    # resonance-closed sector: Kelvin+geostrophic block matches for any eps
    mck = fields.ModeCoefficients(
        ops.basis, fields.project(mc0, WaveClass.KELVIN).phi
        + fields.project(mc0, WaveClass.GEOSTROPHIC).phi, real=True)
    eps = 0.1
    cfgf = replace(cfg, eps=eps, dt=eps / (10 * ops.max_tau() * 1.01))
    ft = solver.integrate_filtered(cfgf, mck, ops)
    lt = solver.integrate_limit(replace(cfg, dt=cfgf.dt), mck, ops)
    sector = ((ops.basis.codes_flat == fields.class_code(WaveClass.KELVIN))
              | (ops.basis.codes_flat == fields.class_code(WaveClass.GEOSTROPHIC)))
    worst = max(float(np.linalg.norm((ft.states[i] - lt.states[i])[sector]))
                for i in range(len(ft.times)))
    # agreement up to the quadratic feedback of the O(eps) radiated content
    c.le("kelvin-sector-agreement", worst, 50.0 * (eps * mck.norm() ** 2) ** 2)
    leak = max(float(np.linalg.norm(ft.states[i][~sector]))
               for i in range(len(ft.times)))
    c.le("kelvin-sector-leak-is-O(eps)", leak, 5.0 * eps * mck.norm() ** 2)
    return c.result("solver invariants")


ALL_SUITES = {
    "hermite": suite_hermite,
    "dispersion": suite_dispersion,
    "eigenbasis": suite_eigenbasis,
    "fields": suite_fields,
    "resonance": suite_resonance,
    "operators": suite_operators,
    "solver": suite_solver,
}


def run_all(fast: bool = False, names=None):
    results = []
    for name, fn in ALL_SUITES.items():
        if names and name not in names:
            continue
        results.append(fn(fast=fast))
    return results
