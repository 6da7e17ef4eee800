"""Pointwise identity suite over sampled points.

Every identity is checked by two independent routes: the (g, lambda, eta)
frame against the raw data, and the classical fundamental forms of
``X_u = Re phi``, ``X_v = -Im phi`` against the closed curvature formulas.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import RandomSampler, hopf_of, klotz_of, sample_surface, wedge_norm
from .curvature import curvature_of
from .surfaces import PuncturedPlane, UnitDisk
from .gauss import decompose, g_identity_residual, rebuild_phi

TOLERANCES = {
    "g_identity": 1e-9,      # relative to |phi|
    "klotz_g": 1e-10,
    "beltrami_chain": -1e-9,  # minimum slack
    "area": 1e-10,
    "gauss_curvature_sign": 1e-12,
    "curvature_routes": 1e-9,
    "sigma2": 1e-9,
    "w1_rebuild": 1e-9,
    "orthogonality": 1e-10,
}


def classical_curvatures(phi, dphi):
    """``(K, H, |sigma|^2)`` from the first and second fundamental forms."""
    Xu, Xv = phi.real, -phi.imag
    Xuu, Xuv = dphi.real, -dphi.imag
    n = np.cross(Xu, Xv, axis=0)
    n = n / np.linalg.norm(n, axis=0)
    E, F, G = (Xu * Xu).sum(0), (Xu * Xv).sum(0), (Xv * Xv).sum(0)
    L, M = (Xuu * n).sum(0), (Xuv * n).sum(0)
    N = -L  # X_vv = -X_uu for harmonic X
    det = E * G - F * F
    K = (L * N - M * M) / det
    H = (E * N - 2 * F * M + G * L) / (2 * det)
    # shape operator S = I^{-1} II; |sigma|^2 = tr(S^2)
    s11 = (G * L - F * M) / det
    s12 = (G * M - F * N) / det
    s21 = (E * M - F * L) / det
    s22 = (E * N - F * M) / det
    sig2 = s11 ** 2 + 2 * s12 * s21 + s22 ** 2
    return K, H, sig2


@dataclass
class IdentityReport:
    n_points: int
    worst: dict
    passed: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.passed.values())

    def to_dict(self):
        return {"n_points": self.n_points,
                "identities": {k: {"worst": float(v), "tolerance": TOLERANCES[k], "passed": bool(self.passed[k])}
                               for k, v in self.worst.items()}}


def identity_residuals(phi, dphi):
    """Per-point residuals for every identity (arrays)."""
    k = klotz_of(phi)
    nphi = np.sqrt(k)
    s = wedge_norm(phi)
    h = hopf_of(phi)
    N, g, rot, gr, phi_r, hr, lam, eta = decompose(phi)
    out = {}
    out["g_identity"] = g_identity_residual(phi_r, gr) / nphi
    out["klotz_g"] = np.abs(np.abs(lam) ** 2 + np.abs(eta) ** 2 - k) / k
    mu = np.abs(lam - eta) / np.abs(lam + eta)
    ratio = np.abs(h) / k
    out["beltrami_chain"] = np.minimum(ratio - mu, 2 * mu / (1 + mu * mu) - ratio)
    out["area"] = np.abs((np.conj(lam) * eta).real - 0.5 * s) / (0.5 * s)
    c = curvature_of(phi, dphi)
    Kc, Hc, S2c = classical_curvatures(phi, dphi)
    out["gauss_curvature_sign"] = np.maximum(c.K, Kc)
    # local curvature scale: both routes round off relative to |phi'|^2/|phi|^4
    k0 = np.abs(Kc) + Hc * Hc + (np.linalg.norm(dphi, axis=0) / k) ** 2
    diff = np.maximum(np.abs(c.K - Kc), np.abs(np.abs(c.mean) - np.abs(Hc)))
    out["curvature_routes"] = np.where(k0 > 0, diff / np.where(k0 > 0, k0, 1.0), diff)
    diff = np.maximum(np.abs(c.sigma2 - S2c), np.abs(4 * Hc * Hc - 2 * Kc - S2c))
    out["sigma2"] = np.where(S2c > 0, diff / np.where(S2c > 0, S2c, 1.0), diff)
    rb = rebuild_phi(gr, lam, eta)
    out["w1_rebuild"] = np.linalg.norm(rb - phi_r, axis=0) / nphi
    out["orthogonality"] = np.maximum(np.abs((N * phi.real).sum(0)), np.abs((N * phi.imag).sum(0))) / nphi
    return out


@dataclass(frozen=True)
class SuiteSampler:
    """Seeded random points where double precision resolves the frame.

    The whole plane is sampled uniformly in ``[-3, 3]^2``, the disk in
    ``|z| <= 0.9``; punctured planes and curves log-uniformly about 0.
    """

    n: int = 10000
    seed: int = 0

    def points(self, domain):
        rng = np.random.default_rng(self.seed)
        if isinstance(domain, UnitDisk):
            r = 0.9 * np.sqrt(rng.uniform(size=self.n))
            return r * np.exp(2j * np.pi * rng.uniform(size=self.n))
        if isinstance(domain, PuncturedPlane) and not domain.punctures:
            return rng.uniform(-3, 3, self.n) + 1j * rng.uniform(-3, 3, self.n)
        return RandomSampler(self.n, (-3.0, 3.0), self.seed).points(domain)


def identity_suite(wd, sampler=None, n=10000, seed=0):
    """Worst residual of every identity over seeded random points."""
    sampler = sampler or SuiteSampler(n, seed)
    z, w = sample_surface(wd.domain, sampler)
    phi = np.asarray(wd.phi(z, w), dtype=complex)
    dphi = np.asarray(wd.phi_prime(z, w), dtype=complex)
    res = identity_residuals(phi, dphi)
    worst, passed = {}, {}
    for key, r in res.items():
        if key == "beltrami_chain":
            worst[key] = float(np.min(r))
            passed[key] = worst[key] >= TOLERANCES[key]
        else:
            worst[key] = float(np.max(r))
            passed[key] = worst[key] <= TOLERANCES[key]
    return IdentityReport(int(np.size(z)), worst, passed)
