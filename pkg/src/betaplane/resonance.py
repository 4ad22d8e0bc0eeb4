"""Resonant-triad analysis of the dispersion frequencies.

A triad a + b -> c (with the zonal convolution constraint c.k = a.k + b.k)
is resonant when its frequency defect tau_a + tau_b - tau_c vanishes.  Two
families are exactly resonant for every beta: triads containing a zero
(geostrophic) frequency, and all-Kelvin triads (tau = k turns the defect
into the wavenumber constraint).  Everything else is "accidental" and, at
generic beta, empirically absent at any fixed truncation.

All frequencies here come from :func:`betaplane.dispersion.roots`; the scan
is pure bookkeeping on the cubic's root labels, so it runs in the same
mirrored-k convention as that module (see ``betaplane.eigenbasis`` for the
operator-side convention; the two scans are related by k -> -k, which maps
the truncation onto itself and preserves every class and defect magnitude).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dispersion
from .errors import ConfigurationError, InvalidTriadError

DEFAULT_TOL = 1e-9

ZERO_MODE = "zero-mode"
ALL_KELVIN = "all-kelvin"
ACCIDENTAL = "accidental"


@dataclass(frozen=True)
class TriadRecord:
    a: tuple
    b: tuple
    c: tuple
    beta: float
    defect: float
    classification: str

    def as_dict(self):
        return {"a": list(self.a), "b": list(self.b), "c": list(self.c),
                "beta": self.beta, "defect": self.defect,
                "classification": self.classification}


@dataclass(frozen=True)
class ResonantSet:
    """Resonance detection rule pinned to (beta, truncation, tolerance).

    ``tol`` is relative: a defect d with frequency magnitudes summing to S
    counts as resonant when |d| <= tol * max(1, S).  Exact resonances sit at
    rounding level (~1e-15), generic defects at desk truncations are far
    larger, so the default 1e-9 separates them cleanly.
    """

    beta: float
    n_max: int
    k_max: int
    tol: float = DEFAULT_TOL

    def matches(self, beta, n_max, k_max) -> None:
        if (abs(self.beta - beta) > 1e-12 * max(1.0, abs(beta))
                or self.n_max != n_max or self.k_max != k_max):
            raise ConfigurationError(
                f"resonant set built for (beta={self.beta}, n_max={self.n_max}, "
                f"k_max={self.k_max}), operator has (beta={beta}, n_max={n_max}, "
                f"k_max={k_max})")

    def mask(self, tau_out, tau_in1, tau_in2) -> np.ndarray:
        """Elementwise resonance test for tau_out = tau_in1 + tau_in2."""
        gap = np.asarray(tau_out) - tau_in1 - tau_in2
        scale = np.maximum(1.0, np.abs(tau_out) + np.abs(tau_in1) + np.abs(tau_in2))
        return np.abs(gap) <= self.tol * scale


def triad_defect(beta: float, a, b, c) -> float:
    """tau_a + tau_b - tau_c for a triad with c.k = a.k + b.k."""
    a, b, c = (dispersion.ModeIndex(*t) if not isinstance(t, dispersion.ModeIndex)
               else t for t in (a, b, c))
    if c.k != a.k + b.k:
        raise InvalidTriadError(
            f"wavenumber mismatch: {a.k} + {b.k} != {c.k}")
    return (dispersion.tau(beta, a.n, a.k, a.j)
            + dispersion.tau(beta, b.n, b.k, b.j)
            - dispersion.tau(beta, c.n, c.k, c.j))


def p_polynomial(beta: float, n: int, n_star: int, m: int,
                 k: int, k_star: int) -> float:
    """Product of all 27 triad defects over j, j*, l in {-1,0,1}; vanishes
    exactly when some branch combination is resonant."""
    ta = dispersion.roots(beta, n, k).taus
    tb = dispersion.roots(beta, n_star, k_star).taus
    tc = dispersion.roots(beta, m, k + k_star).taus
    out = 1.0
    for x in ta:
        for y in tb:
            for z in tc:
                out *= (x + y - z)
    return out


def omega_coefficients(n: int, n_star: int, m: int,
                       k: int, k_star: int) -> tuple[float, float]:
    """Leading two coefficients of the slow-branch triad defect expansion in
    1/beta: defect = omega0 + omega1/beta + o(1/beta) as beta -> infinity."""
    def w0(nn, kk):
        return kk / (2.0 * nn + 1.0)

    def w1(nn, kk):
        return 4.0 * kk ** 3 * nn * (nn + 1.0) / (2.0 * nn + 1.0) ** 4

    omega0 = w0(n, k) + w0(n_star, k_star) - w0(m, k + k_star)
    omega1 = -w1(n, k) - w1(n_star, k_star) + w1(m, k + k_star)
    return omega0, omega1


_SECTOR_CLASSES = {
    "all": None,
    "kelvin": dispersion.WaveClass.KELVIN,
    "rossby": dispersion.WaveClass.ROSSBY,
    "poincare": dispersion.WaveClass.POINCARE,
    "mixed": dispersion.WaveClass.MIXED,
    "geostrophic": dispersion.WaveClass.GEOSTROPHIC,
}


@dataclass
class ScanResult:
    beta: float
    n_max: int
    k_max: int
    tol: float
    sector: str
    records: list
    counts: dict
    min_nonexempt_defect: float

    @property
    def accidental_count(self) -> int:
        return self.counts.get(ACCIDENTAL, 0)


def scan_triads(beta: float, n_max: int, k_max: int, tol: float = DEFAULT_TOL,
                sector: str = "all") -> ScanResult:
    """Brute-force resonance scan over all triads within the truncation.

    Records every triad with relative defect below ``tol`` (classified
    zero-mode / all-kelvin / accidental) and tracks the minimum |defect|
    over the non-exempt (accidental-candidate) triads, resonant or not.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if sector not in _SECTOR_CLASSES:
        raise ValueError(f"unknown sector {sector!r}")
    taus = dispersion.taus_grid(beta, n_max, k_max)
    codes = np.empty(taus.shape, dtype=np.int8)
    for n in range(n_max + 1):
        for k in range(-k_max, k_max + 1):
            for j in (-1, 0, 1):
                codes[n, k + k_max, j + 1] = list(dispersion.WaveClass).index(
                    dispersion.classify(n, k, j))
    kelvin_code = list(dispersion.WaveClass).index(dispersion.WaveClass.KELVIN)
    geo_code = list(dispersion.WaveClass).index(dispersion.WaveClass.GEOSTROPHIC)
    want = _SECTOR_CLASSES[sector]
    want_code = None if want is None else list(dispersion.WaveClass).index(want)

    records = []
    counts = {ZERO_MODE: 0, ALL_KELVIN: 0, ACCIDENTAL: 0}
    min_nonexempt = np.inf
    nj = (n_max + 1) * 3
    for ka in range(-k_max, k_max + 1):
        ta = taus[:, ka + k_max, :].reshape(nj)
        ca = codes[:, ka + k_max, :].reshape(nj)
        if want_code is not None and not np.any(ca == want_code):
            continue
        for kb in range(-k_max, k_max + 1):
            kc = ka + kb
            if abs(kc) > k_max:
                continue
            tb = taus[:, kb + k_max, :].reshape(nj)
            cb = codes[:, kb + k_max, :].reshape(nj)
            tc = taus[:, kc + k_max, :].reshape(nj)
            cc = codes[:, kc + k_max, :].reshape(nj)
            defect = ta[:, None, None] + tb[None, :, None] - tc[None, None, :]
            scale = np.maximum(1.0, np.abs(ta)[:, None, None]
                               + np.abs(tb)[None, :, None] + np.abs(tc)[None, None, :])
            zero = ((ca == geo_code)[:, None, None] | (cb == geo_code)[None, :, None]
                    | (cc == geo_code)[None, None, :])
            kelv = ((ca == kelvin_code)[:, None, None]
                    & (cb == kelvin_code)[None, :, None]
                    & (cc == kelvin_code)[None, None, :])
            if want_code is not None:
                in_sector = ((ca == want_code)[:, None, None]
                             & (cb == want_code)[None, :, None]
                             & (cc == want_code)[None, None, :])
            else:
                in_sector = np.ones(defect.shape, dtype=bool)
            nonexempt = in_sector & ~zero & ~kelv
            if np.any(nonexempt):
                min_nonexempt = min(min_nonexempt,
                                    float(np.abs(defect[nonexempt]).min()))
            hit = in_sector & (np.abs(defect) <= tol * scale)
            for ia, ib, ic in zip(*np.nonzero(hit)):
                if zero[ia, ib, ic]:
                    cls = ZERO_MODE
                elif kelv[ia, ib, ic]:
                    cls = ALL_KELVIN
                else:
                    cls = ACCIDENTAL
                counts[cls] += 1
                records.append(TriadRecord(
                    a=(ia // 3, ka, ia % 3 - 1),
                    b=(ib // 3, kb, ib % 3 - 1),
                    c=(ic // 3, kc, ic % 3 - 1),
                    beta=beta, defect=float(defect[ia, ib, ic]),
                    classification=cls))
    records.sort(key=lambda r: (r.a, r.b, r.c))
    return ScanResult(beta, n_max, k_max, tol, sector, records, counts,
                      float(min_nonexempt))


def enumerate_resonances(beta: float, n_max: int, k_max: int,
                         tol: float = DEFAULT_TOL,
                         sector: str = "all") -> list[TriadRecord]:
    """All triads within truncation whose relative defect is below tol,
    classified and deterministically ordered."""
    return scan_triads(beta, n_max, k_max, tol, sector).records


def resonant_set(beta: float, n_max: int, k_max: int,
                 tol: float = DEFAULT_TOL) -> ResonantSet:
    """Resonance rule object consumed by the limit-system operators."""
    return ResonantSet(beta, n_max, k_max, tol)
