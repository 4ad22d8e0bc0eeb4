"""Time integration of the filtered fast-rotation system and of its
resonance-filtered limit, plus the convergence experiments.

Both systems are integrated in eigenmode coordinates on a spectral
truncation mask K (ball (n+k^2)^{1/2} <= N or rectangle n,|k| <= N):

limit system      d phi/dt = -K Q_L(K phi, K phi) + nu K D'_L K phi
filtered system   d phi/dt = -K P(t/eps) Q(P(-t/eps) phi, ...) + nu ...

where P(s) multiplies mode a by exp(+i s tau_a) (the filtering semigroup
conjugation, applied exactly).  The filtered unknown is the state with its
fast rotation unwound, so both systems share initial data and the limit is
the eps -> 0 average of the filtered one.

The dropped O(eps) density-weighted viscosity remainder of the underlying
physical system is NOT integrated here: the filtered system is solved with
zero remainder, which only perturbs at the order the experiments measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import fields, operators, resonance
from .dispersion import WaveClass
from .eigenbasis import ModeBasis
from .errors import InstabilityError
from .operators import GeostrophicDiffusion
from .resonance import ResonantSet

ENERGY_BLOWUP_FACTOR = 10.0


@dataclass
class SolverConfig:
    """Run parameters shared by both systems.

    ``eps`` applies to the filtered system only.  ``n_ball`` is the
    truncation radius of the mask (kind 'ball' or 'rect'); the ambient
    arrays are the (n_max, k_max) rectangle.
    """

    beta: float
    n_max: int
    k_max: int
    n_ball: float
    dt: float
    t_final: float
    nu: float = 0.0
    eps: float | None = None
    integrator: str = "rk4"
    seed: int = 0
    mask_kind: str = "ball"
    nonlinear: bool = True
    amplitude: float = 0.25
    damping: float = 2.0
    save_dt: float = 0.01
    resonance_tol: float = resonance.DEFAULT_TOL

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.nu < 0:
            raise ValueError("nu must be >= 0")
        if self.dt <= 0 or self.t_final <= 0:
            raise ValueError("dt and t_final must be positive")
        if self.dt > self.t_final:
            raise ValueError("dt must not exceed t_final")
        if self.eps is not None and self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.integrator not in ("rk4", "strang-exp"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.mask_kind not in ("ball", "rect"):
            raise ValueError(f"unknown mask kind {self.mask_kind!r}")


@dataclass
class OperatorSet:
    """Prebuilt operators for one (beta, truncation): shared by every run."""

    basis: ModeBasis
    tensor: operators.InteractionTensor
    rset: ResonantSet
    dmat: sp.csr_matrix
    dlmat: sp.csr_matrix
    mask: np.ndarray        # bool over flat mode indices
    geo: GeostrophicDiffusion
    sobolev1: np.ndarray    # (1+n+k^2) over flat indices
    ageo: np.ndarray        # bool: ageostrophic modes

    @property
    def maskf(self) -> np.ndarray:
        return self.mask.astype(float)

    def max_tau(self) -> float:
        return float(np.abs(self.basis.taus_flat[self.mask]).max())


def prepare_operators(cfg: SolverConfig, use_cache: bool = False,
                      cache_directory: str | None = None) -> OperatorSet:
    """Assemble basis, interaction tensor, diffusion matrices and masks."""
    basis = ModeBasis(cfg.beta, cfg.n_max, cfg.k_max)
    if use_cache:
        tensor = operators.cached_interaction_tensor(basis, directory=cache_directory)
    else:
        tensor = operators.build_interaction_tensor(basis)
    rset = resonance.resonant_set(cfg.beta, cfg.n_max, cfg.k_max, cfg.resonance_tol)
    dmat = operators.delta_prime_matrix(basis)
    dlmat = operators.delta_prime_l_matrix(basis, dmat)
    mask = fields.truncation_mask(cfg.n_max, cfg.k_max, cfg.n_ball,
                                  cfg.mask_kind).ravel()
    geo = operators.geostrophic_diffusion(cfg.beta, max(cfg.n_max, 5))
    sob = fields.sobolev_weights(cfg.n_max, cfg.k_max, 1.0).ravel()
    ageo = basis.codes_flat != fields.class_code(WaveClass.GEOSTROPHIC)
    return OperatorSet(basis, tensor, rset, dmat, dlmat, mask, geo, sob, ageo)


def initial_data(cfg: SolverConfig, ops: OperatorSet) -> fields.ModeCoefficients:
    """Seeded smooth random state restricted to the truncation mask."""
    mc = fields.random_modes(ops.basis, cfg.seed, cfg.damping, cfg.amplitude,
                             real=True)
    phi = np.where(ops.mask.reshape(ops.basis.shape), mc.phi, 0.0)
    return fields.ModeCoefficients(ops.basis, phi, real=True)


@dataclass
class Diagnostics:
    times: np.ndarray
    l2: np.ndarray
    hl1_perp: np.ndarray
    dissipation: np.ndarray  # cumulative integral of (phi | -D'_L phi)


@dataclass
class Trajectory:
    config: SolverConfig
    basis: ModeBasis
    times: np.ndarray
    states: list
    diagnostics: Diagnostics

    def state(self, i: int) -> fields.ModeCoefficients:
        return fields.ModeCoefficients(
            self.basis, self.states[i].reshape(self.basis.shape))


class _Rhs:
    """Right-hand sides of both systems over flat masked arrays."""

    def __init__(self, cfg: SolverConfig, ops: OperatorSet):
        self.cfg = cfg
        self.ops = ops
        self.maskf = ops.maskf
        self.taus = ops.basis.taus_flat
        if cfg.nonlinear:
            mask = ops.tensor.resonant_mask(ops.basis, ops.rset)
            self.m_res, self.pb, self.pc = ops.tensor._pair_machinery(
                ("resonant", ops.rset.tol), value_mask=mask)
            self.m_full, _, _ = ops.tensor._pair_machinery("full")

    def limit(self, t: float, y: np.ndarray) -> np.ndarray:
        out = np.zeros_like(y)
        if self.cfg.nonlinear:
            out -= self.m_res @ (y[self.pb] * y[self.pc])
        if self.cfg.nu:
            out += self.cfg.nu * (self.ops.dlmat @ y)
        return out * self.maskf

    def filtered(self, t: float, y: np.ndarray) -> np.ndarray:
        theta = t / self.cfg.eps
        ph = np.exp(-1j * theta * self.taus)
        p = ph * y
        out = np.zeros_like(y)
        if self.cfg.nonlinear:
            out -= self.m_full @ (p[self.pb] * p[self.pc])
        if self.cfg.nu:
            out += self.cfg.nu * (self.ops.dmat @ p)
        return np.conj(ph) * out * self.maskf

    def dissipation_limit(self, t: float, y: np.ndarray) -> float:
        return float(np.real(np.vdot(y, -(self.ops.dlmat @ y))))

    def dissipation_filtered(self, t: float, y: np.ndarray) -> float:
        p = np.exp(-1j * (t / self.cfg.eps) * self.taus) * y
        return float(np.real(np.vdot(p, -(self.ops.dmat @ p))))


def _exp_dl_factory(ops: OperatorSet, nu: float):
    """Exact blockwise exponential exp(s * nu * D'_L) by eigenvalue group."""
    gid = operators.eigenvalue_groups(ops.basis)
    dl = ops.dlmat
    diag = dl.diagonal().real
    blocks = []
    for g in np.unique(gid):
        members = np.flatnonzero(gid == g)
        if members.size > 1:
            sub = dl[np.ix_(members, members)].toarray().real
            w, u = np.linalg.eigh(sub)
            blocks.append((members, w, u))
    singles = np.ones(ops.basis.size, dtype=bool)
    for members, _, _ in blocks:
        singles[members] = False

    def apply(s: float, y: np.ndarray) -> np.ndarray:
        out = y.copy()
        out[singles] *= np.exp(s * nu * diag[singles])
        for members, w, u in blocks:
            out[members] = u @ (np.exp(s * nu * w) * (u.conj().T @ y[members]))
        return out

    return apply


def _integrate(cfg: SolverConfig, ops: OperatorSet, y0: np.ndarray,
               rhs, diss) -> Trajectory:
    steps = int(round(cfg.t_final / cfg.dt))
    if abs(steps * cfg.dt - cfg.t_final) > 1e-9 * cfg.t_final:
        steps = math.ceil(cfg.t_final / cfg.dt - 1e-12)
    save_every = max(1, int(round(cfg.save_dt / cfg.dt)))
    dt = cfg.dt

    y = y0 * ops.maskf
    e0 = np.linalg.norm(y)
    times = [0.0]
    states = [y.copy()]
    dtimes = [0.0]
    l2 = [e0]
    hl1 = [_hl1_perp(ops, y)]
    diss_acc = [0.0]
    acc = 0.0

    if cfg.integrator == "strang-exp" and cfg.nu:
        exp_dl = _exp_dl_factory(ops, cfg.nu)
    else:
        exp_dl = None

    for step in range(1, steps + 1):
        t = (step - 1) * dt
        if exp_dl is None:
            k1 = rhs(t, y)
            y2 = y + 0.5 * dt * k1
            k2 = rhs(t + 0.5 * dt, y2)
            y3 = y + 0.5 * dt * k2
            k3 = rhs(t + 0.5 * dt, y3)
            y4 = y + dt * k3
            k4 = rhs(t + dt, y4)
            # Simpson accumulation of the dissipation along the stages
            acc += dt / 6.0 * (diss(t, y) + 2.0 * diss(t + 0.5 * dt, y2)
                               + 2.0 * diss(t + 0.5 * dt, y3) + diss(t + dt, y4))
            y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            # Strang: exact half-step of nu*D'_L, explicit rest, half-step
            def nonstiff(tt, yy):
                return rhs(tt, yy) - cfg.nu * (ops.dlmat @ yy) * ops.maskf

            acc += 0.5 * dt * diss(t, y)
            y = exp_dl(0.5 * dt, y)
            k1 = nonstiff(t, y)
            k2 = nonstiff(t + 0.5 * dt, y + 0.5 * dt * k1)
            k3 = nonstiff(t + 0.5 * dt, y + 0.5 * dt * k2)
            k4 = nonstiff(t + dt, y + dt * k3)
            y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            y = exp_dl(0.5 * dt, y)
            acc += 0.5 * dt * diss(t + dt, y)
        energy = np.linalg.norm(y)
        if energy > ENERGY_BLOWUP_FACTOR * max(e0, 1e-300):
            raise InstabilityError(
                f"energy grew by more than {ENERGY_BLOWUP_FACTOR}x at step {step}",
                step=step, time=step * dt)
        dtimes.append(step * dt)
        l2.append(energy)
        hl1.append(_hl1_perp(ops, y))
        diss_acc.append(acc)
        if step % save_every == 0 or step == steps:
            times.append(step * dt)
            states.append(y.copy())

    diag = Diagnostics(np.array(dtimes), np.array(l2), np.array(hl1),
                       np.array(diss_acc))
    return Trajectory(cfg, ops.basis, np.array(times), states, diag)


def _hl1_perp(ops: OperatorSet, y: np.ndarray) -> float:
    sel = ops.ageo
    return float(np.sqrt(np.sum(ops.sobolev1[sel] * np.abs(y[sel]) ** 2)))


def integrate_limit(cfg: SolverConfig, mc0: fields.ModeCoefficients,
                    ops: OperatorSet | None = None) -> Trajectory:
    """Integrate the resonance-filtered limit system."""
    if ops is None:
        ops = prepare_operators(cfg)
    r = _Rhs(cfg, ops)
    return _integrate(cfg, ops, mc0.phi.ravel().astype(complex),
                      r.limit, r.dissipation_limit)


def integrate_filtered(cfg: SolverConfig, mc0: fields.ModeCoefficients,
                       ops: OperatorSet | None = None) -> Trajectory:
    """Integrate the filtered fast-rotation system (oscillatory conjugation
    applied exactly at every stage)."""
    if cfg.eps is None:
        raise ValueError("filtered system needs cfg.eps")
    if ops is None:
        ops = prepare_operators(cfg)
    if cfg.integrator == "rk4":
        cap = cfg.eps / (10.0 * max(ops.max_tau(), 1e-12))
        if cfg.dt > cap * (1 + 1e-12):
            raise ValueError(
                f"dt={cfg.dt} exceeds the rk4 cap eps/(10 max|tau|)={cap:.3e}")
    r = _Rhs(cfg, ops)
    return _integrate(cfg, ops, mc0.phi.ravel().astype(complex),
                      r.filtered, r.dissipation_filtered)


# ---------------------------------------------------------------------------
# geostrophic linear solve
# ---------------------------------------------------------------------------

def geostrophic_solve(gd: GeostrophicDiffusion, phi0: np.ndarray, nu: float,
                      t) -> np.ndarray:
    """Exact solution exp(nu t G) phi0 of the kernel diffusion flow;
    ``t`` may be a scalar or an array of times (rows of the output)."""
    w, u = np.linalg.eigh(gd.matrix)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    z = u.conj().T @ np.asarray(phi0, dtype=complex)
    out = np.einsum("nm,tm,m->tn", u, np.exp(nu * np.outer(t_arr, w)), z)
    return out[0] if np.isscalar(t) else out


# ---------------------------------------------------------------------------
# convergence experiments
# ---------------------------------------------------------------------------

def _aligned_dt(requested: float, save_dt: float) -> float:
    return save_dt / math.ceil(save_dt / requested - 1e-12)


@dataclass
class SweepReport:
    eps_list: list
    errors: list
    errors_corrector: list | None
    monotone: bool
    slope: float
    initial_norm: float

    def as_dict(self):
        return {"eps": list(self.eps_list), "sup_error": list(self.errors),
                "sup_error_corrector": (None if self.errors_corrector is None
                                        else list(self.errors_corrector)),
                "monotone_decreasing": self.monotone,
                "log_log_slope": self.slope,
                "initial_norm": self.initial_norm}


def convergence_sweep(cfg: SolverConfig, eps_list, mc0: fields.ModeCoefficients,
                      ops: OperatorSet | None = None,
                      with_corrector: bool = True,
                      keep_trajectories: bool = False):
    """Sup-in-time L2 distance between filtered and limit trajectories for a
    decreasing list of eps, optionally with the first-order corrector
    comparison.  Returns (SweepReport, filtered trajectories or None)."""
    if ops is None:
        ops = prepare_operators(cfg)
    eps_list = list(eps_list)
    if any(e2 >= e1 for e1, e2 in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    base = replace(cfg, eps=None, dt=_aligned_dt(cfg.dt, cfg.save_dt))
    limit_traj = integrate_limit(base, mc0, ops)
    max_tau = max(ops.max_tau(), 1e-12)
    errors, errors_corr, trajs = [], [], []
    for eps in eps_list:
        dt_eps = _aligned_dt(min(cfg.dt, eps / (10.0 * max_tau)), cfg.save_dt)
        cfg_eps = replace(cfg, eps=eps, dt=dt_eps)
        ftraj = integrate_filtered(cfg_eps, mc0, ops)
        if not np.allclose(ftraj.times, limit_traj.times):
            raise RuntimeError("trajectory save times failed to align")
        sup = 0.0
        sup_corr = 0.0
        for i, t in enumerate(limit_traj.times):
            diff = ftraj.states[i] - limit_traj.states[i]
            sup = max(sup, float(np.linalg.norm(diff)))
            if with_corrector:
                mc_n = limit_traj.state(i)
                cor = operators.corrector(ops.tensor, ops.rset, mc_n, eps, t,
                                          cfg.nu, ops.dmat,
                                          input_mask=ops.mask.reshape(ops.basis.shape))
                corr_flat = cor.phi.ravel() * ops.maskf
                sup_corr = max(sup_corr, float(np.linalg.norm(diff - eps * corr_flat)))
        errors.append(sup)
        errors_corr.append(sup_corr if with_corrector else None)
        if keep_trajectories:
            trajs.append(ftraj)
    monotone = all(b < a for a, b in zip(errors, errors[1:]))
    slope = float(np.polyfit(np.log(eps_list), np.log(errors), 1)[0]) \
        if min(errors) > 0 else float("nan")
    report = SweepReport(eps_list, errors,
                         errors_corr if with_corrector else None,
                         monotone, slope, float(np.linalg.norm(mc0.phi)))
    return report, (trajs if keep_trajectories else None), limit_traj


@dataclass
class WeakLimitReport:
    eps_list: list
    errors: list
    monotone: bool

    def as_dict(self):
        return {"eps": list(self.eps_list), "sup_kernel_error": list(self.errors),
                "monotone_decreasing": self.monotone}


def weak_limit_experiment(cfg: SolverConfig, eps_list, mc0: fields.ModeCoefficients,
                          ops: OperatorSet | None = None,
                          filtered_trajs: list | None = None) -> WeakLimitReport:
    """Kernel-coefficient distance between the filtered trajectories and the
    exact geostrophic diffusion flow started from the projected data."""
    if ops is None:
        ops = prepare_operators(cfg)
    eps_list = list(eps_list)
    kernel = ops.basis.kernel_flat_indices()
    kernel = kernel[ops.mask[kernel]]
    # kernel block of the filtered diffusion on the masked set
    gsub = ops.dlmat[np.ix_(kernel, kernel)].toarray().real
    gk = GeostrophicDiffusion(cfg.beta, kernel.size - 1, gsub)
    phi_geo0 = mc0.phi.ravel()[kernel]
    if filtered_trajs is None:
        max_tau = max(ops.max_tau(), 1e-12)
        filtered_trajs = []
        for eps in eps_list:
            dt_eps = _aligned_dt(min(cfg.dt, eps / (10.0 * max_tau)), cfg.save_dt)
            filtered_trajs.append(
                integrate_filtered(replace(cfg, eps=eps, dt=dt_eps), mc0, ops))
    errors = []
    for ftraj in filtered_trajs:
        ref = geostrophic_solve(gk, phi_geo0, cfg.nu, ftraj.times)
        sup = max(float(np.linalg.norm(ftraj.states[i][kernel] - ref[i]))
                  for i in range(len(ftraj.times)))
        errors.append(sup)
    monotone = all(b < a for a, b in zip(errors, errors[1:]))
    return WeakLimitReport(eps_list, errors, monotone)
