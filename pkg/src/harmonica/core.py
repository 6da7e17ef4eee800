"""Weierstrass triples, pointwise invariants and the immersion map.

A harmonic immersion is ``X = Re \\int Phi`` with ``Phi = (phi1, phi2, phi3) dz``
holomorphic.  Conventions used throughout the package:

* ``X_u = Re(phi)`` and ``X_v = -Im(phi)`` for ``z = u + i v``;
* Hopf coefficient ``h = sum phi_j**2`` and Klotz density ``|phi|^2``;
* ``|phi ^ conj(phi)| = 2 |Im(phi2 conj(phi3), phi3 conj(phi1), phi1 conj(phi2))|``
  and ``|phi ^ conj(phi)|**2 = |phi|**4 - |h|**2``.

Evaluators are vectorised: ``phi(z, w)`` returns an array of shape
``(3,) + z.shape``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import least_squares
from scipy.spatial import cKDTree

from .errors import EmptySampler, OpenPath, PathEndpointMismatch
from .quadrature import DEFAULT, QuadratureConfig, integrate_contour
from .surfaces import (
    Annulus,
    EllipticCurve,
    PathSpec,
    PuncturedPlane,
    SurfacePoint,
    UnitDisk,
    continue_w,
    coords,
    is_curve,
)

EPS_IMM = 1e-9


@dataclass(frozen=True)
class WeierstrassData:
    """Domain plus holomorphic coefficient triple.

    ``laurent`` optionally maps an end label to ``{k: (c1, c2, c3)}`` in that
    end's chart coordinate.
    """

    domain: object
    phi: Callable
    phi_prime: Optional[Callable] = None
    laurent: Optional[dict] = None
    name: str = ""


@dataclass(frozen=True)
class Immersion:
    wd: WeierstrassData
    basepoint: SurfacePoint
    base_value: tuple = (0.0, 0.0, 0.0)
    closed_form: Optional[Callable] = None

    def __post_init__(self):
        object.__setattr__(self, "base_value", tuple(float(x) for x in self.base_value))


# ----------------------------------------------------------------------------
# pointwise


def eval_phi(wd: WeierstrassData, P, w=None, check=True):
    z, w = coords(wd.domain, P, w, check)
    return np.asarray(wd.phi(z, w), dtype=complex)


def eval_phi_prime(wd: WeierstrassData, P, w=None, check=True):
    """Analytic ``d phi/dz`` when supplied, else a Cauchy-kernel derivative."""
    from .errors import DerivativeUnavailable

    z, w = coords(wd.domain, P, w, check)
    if wd.phi_prime is not None:
        return np.asarray(wd.phi_prime(z, w), dtype=complex)
    if is_curve(wd.domain):
        raise DerivativeUnavailable("numerical derivative on the curve needs analytic metadata")
    return _numeric_phi_prime(wd, z)


def _numeric_phi_prime(wd, z):
    from .quadrature import cauchy_derivative

    crit = np.array(wd.domain.critical_points(), dtype=complex)
    flat = np.atleast_1d(z).ravel()
    out = np.empty((3, flat.size), dtype=complex)
    for i, z0 in enumerate(flat):
        near = np.min(np.abs(crit - z0)) if crit.size else np.inf
        if isinstance(wd.domain, UnitDisk):
            near = min(near, 1 - abs(z0))
        out[:, i] = cauchy_derivative(lambda s: wd.phi(s, None), z0, nearest_singularity=near)
    return out.reshape((3,) + np.shape(z))


def hopf_of(phi):
    return np.sum(phi * phi, axis=0)


def klotz_of(phi):
    return np.sum(np.abs(phi) ** 2, axis=0)


def cross_im(phi):
    """``Im(phi2 conj(phi3), phi3 conj(phi1), phi1 conj(phi2))``."""
    p1, p2, p3 = phi
    return np.stack([
        (p2 * np.conj(p3)).imag,
        (p3 * np.conj(p1)).imag,
        (p1 * np.conj(p2)).imag,
    ])


def wedge_norm(phi):
    """``|phi ^ conj(phi)| = sqrt(|phi|^4 - |h|^2)`` without cancellation."""
    return 2 * np.linalg.norm(cross_im(phi), axis=0)


def margin_of(phi):
    """``|phi|^2 - |h|`` computed as ``|phi ^ conj(phi)|^2 / (|phi|^2 + |h|)``."""
    k = klotz_of(phi)
    s = wedge_norm(phi)
    return s * s / (k + np.abs(hopf_of(phi)))


def hopf(wd, P, w=None):
    return hopf_of(eval_phi(wd, P, w))


def klotz_density(wd, P, w=None):
    return klotz_of(eval_phi(wd, P, w))


def immersion_margin(wd, P, w=None):
    return margin_of(eval_phi(wd, P, w))


def normalized_margin(wd, P, w=None):
    phi = eval_phi(wd, P, w)
    return margin_of(phi) / klotz_of(phi)


# ----------------------------------------------------------------------------
# samplers


@dataclass(frozen=True)
class LogPolarSampler:
    """``z = center + exp(rho + i theta)`` on a tensor grid."""

    rho_range: tuple = (-4.0, 4.0)
    n_rho: int = 100
    n_theta: int = 100
    center: complex = 0j

    def points(self, domain):
        rho = np.linspace(self.rho_range[0], self.rho_range[1], self.n_rho)
        th = 2 * np.pi * (np.arange(self.n_theta) + 0.5) / self.n_theta
        R, T = np.meshgrid(rho, th, indexing="ij")
        return self.center + np.exp(R + 1j * T)


@dataclass(frozen=True)
class BoxSampler:
    re_range: tuple = (-10.0, 10.0)
    im_range: tuple = (-10.0, 10.0)
    n_re: int = 200
    n_im: int = 200

    def points(self, domain):
        x = np.linspace(*self.re_range, self.n_re)
        y = np.linspace(*self.im_range, self.n_im)
        X, Y = np.meshgrid(x, y, indexing="ij")
        return X + 1j * Y


@dataclass(frozen=True)
class DiskSampler:
    """Polar grid on the unit disk with radii accumulating at the boundary."""

    n_r: int = 100
    n_theta: int = 100
    depth: float = 8.0

    def points(self, domain):
        s = np.linspace(0.05, self.depth, self.n_r)
        r = 1 - np.exp(-s)
        th = 2 * np.pi * (np.arange(self.n_theta) + 0.5) / self.n_theta
        R, T = np.meshgrid(r, th, indexing="ij")
        return R * np.exp(1j * T)


@dataclass(frozen=True)
class RandomSampler:
    """Seeded random points, log-uniform in radius about ``center``."""

    n: int = 10000
    rho_range: tuple = (-3.0, 3.0)
    seed: int = 0
    center: complex = 0j

    def points(self, domain):
        rng = np.random.default_rng(self.seed)
        if isinstance(domain, UnitDisk):
            r = np.sqrt(rng.uniform(0, 0.98, self.n))
            return r * np.exp(2j * np.pi * rng.uniform(size=self.n))
        rho = rng.uniform(*self.rho_range, self.n)
        th = rng.uniform(0, 2 * np.pi, self.n)
        return self.center + np.exp(rho + 1j * th)


@dataclass(frozen=True)
class UnionSampler:
    parts: tuple = ()

    def points(self, domain):
        return np.concatenate([np.ravel(p.points(domain)) for p in self.parts]) if self.parts else np.array([], complex)


def default_sampler(domain, n=100, rho_range=(-4.0, 4.0)):
    """Log-polar grids about 0 and every finite puncture (disk grid on the disk)."""
    if isinstance(domain, UnitDisk):
        return DiskSampler(n, n)
    if isinstance(domain, Annulus):
        lo = np.log(domain.r_inner) + 1e-6 if domain.r_inner > 0 else rho_range[0]
        hi = np.log(domain.r_outer) - 1e-6 if np.isfinite(domain.r_outer) else rho_range[1]
        return LogPolarSampler((lo, hi), n, n)
    parts = [LogPolarSampler(rho_range, n, n)]
    if isinstance(domain, PuncturedPlane):
        for p in domain.punctures:
            if p != 0:
                parts.append(LogPolarSampler((rho_range[0], np.log(0.5 * abs(p))), n // 2, n // 2, p))
    if isinstance(domain, EllipticCurve):
        for p in (domain.a, 1 / domain.a):
            parts.append(LogPolarSampler((-8.0, np.log(0.4 * domain.a)), n // 4, n // 2, p))
    return UnionSampler(tuple(parts))


def sample_surface(domain, sampler):
    """Sample points inside the domain; both sheets on the curve.

    Returns flat arrays ``(z, w)`` (``w`` is ``None`` off the curve).
    """
    z = np.ravel(np.asarray(sampler.points(domain), dtype=complex))
    z = z[np.asarray(domain.contains(z))]
    if z.size == 0:
        raise EmptySampler("sampler produced no points inside the domain")
    if is_curve(domain):
        w = domain.principal_w(z)
        keep = np.abs(w) > 0
        z, w = z[keep], w[keep]
        return np.concatenate([z, z]), np.concatenate([w, -w])
    return z, None


# ----------------------------------------------------------------------------
# immersion check


@dataclass
class ImmersionReport:
    min_margin: float
    witness: SurfacePoint
    passed: bool
    n_samples: int
    eps: float = EPS_IMM

    def to_dict(self):
        return {
            "min_normalized_margin": float(self.min_margin),
            "witness": {"z": [self.witness.z.real, self.witness.z.imag],
                        "w": None if self.witness.branch is None else [self.witness.branch.real, self.witness.branch.imag]},
            "passed": bool(self.passed),
            "n_samples": int(self.n_samples),
            "tolerance": self.eps,
        }


def _refine(wd, z0, w0, reach, rounds=8):
    """Local minimisation of the normalised margin from a seed.

    The result must stay within ``reach`` of the seed, so the descent
    locates minima between grid nodes rather than drifting into an end.
    """
    dom = wd.domain
    scale = 2 * reach
    if is_curve(dom):
        crit = np.array(dom.critical_points())
        scale = min(scale, 0.5 * np.min(np.abs(crit - z0)))

    # unknowns start at (1, 1): MINPACK's difference step is relative to |x|
    # and would vanish for a seed on an axis, freezing that coordinate
    def at(xy):
        return z0 + scale * complex(xy[0] - 1, xy[1] - 1)

    def resid(xy):
        z = at(xy)
        if not dom.contains(z) or abs(z - z0) > 0.5 * scale:
            return np.full(3, 1e3)
        w = None if w0 is None else complex(continue_w(dom, z0, w0, z))
        phi = wd.phi(np.array([z]), None if w is None else np.array([w]))[:, 0]
        return 2 * cross_im(phi[:, None])[:, 0] / klotz_of(phi[:, None])[0]

    try:
        sol = least_squares(resid, [1.0, 1.0], method="lm", max_nfev=200 * rounds)
    except Exception:
        return None
    z = at(sol.x)
    if not dom.contains(z) or abs(z - z0) > 0.5 * scale:
        return None
    w = None if w0 is None else complex(continue_w(dom, z0, w0, z))
    return z, w


def _grid_parts(sampler, domain):
    parts = sampler.parts if isinstance(sampler, UnionSampler) else (sampler,)
    for p in parts:
        P = np.asarray(p.points(domain), dtype=complex)
        if P.ndim != 2 or min(P.shape) < 2:
            continue
        if isinstance(p, LogPolarSampler):
            P = np.concatenate([P, P[:, :1]], axis=1)  # close the theta seam
        yield P


def _winding_seeds(wd, sampler, max_cells=64):
    """Grid cells around which a pair of ``cross_im`` components winds.

    ``cross_im`` is the area-weighted normal, so it vanishes exactly where
    the margin does; nonzero winding in two coordinate projections flags a
    zero inside the cell even when the margin valley is too narrow for the
    grid to see.
    """
    out = []
    for P in _grid_parts(sampler, wd.domain):
        ok = np.asarray(wd.domain.contains(P))
        with np.errstate(all="ignore"):
            c = cross_im(wd.phi(P, None))
        ok &= np.all(np.isfinite(c), axis=0)
        corners = [(slice(None, -1), slice(None, -1)), (slice(1, None), slice(None, -1)),
                   (slice(1, None), slice(1, None)), (slice(None, -1), slice(1, None))]
        good = np.logical_and.reduce([ok[s] for s in corners])
        hits = np.zeros(good.shape, int)
        for i, j in ((0, 1), (1, 2), (2, 0)):
            ang = np.arctan2(c[j], c[i])
            wind = 0.0
            for a, b in zip(corners, corners[1:] + corners[:1]):
                wind = wind + np.angle(np.exp(1j * (ang[b] - ang[a])))
            hits += np.abs(wind) > np.pi
        # a true zero winds in at least two projections; one alone is a pole of N
        hit = (hits >= 2) & good
        idx = np.argwhere(hit)
        if not idx.size:
            continue
        quad = [P[s] for s in corners]
        centre = sum(quad) / 4
        diam = np.abs(quad[2] - quad[0])
        for r, t in idx:
            out.append((complex(centre[r, t]), float(diam[r, t])))
    if len(out) > max_cells:
        step = len(out) / max_cells
        out = [out[int(k * step)] for k in range(max_cells)]
    return out


def verify_immersion(wd: WeierstrassData, sampler=None, eps: float = EPS_IMM, refine: bool = True, n_seeds: int = 8):
    """Scan the normalised margin ``(|phi|^2 - |h|)/|phi|^2`` over a sampler.

    The smallest grid values seed a Levenberg-Marquardt descent on the
    vector ``2 Im(...)/|phi|^2`` whose squared norm controls the margin, so
    tangential zeros between grid nodes are still found.
    """
    if sampler is None:
        sampler = default_sampler(wd.domain)
    z, w = sample_surface(wd.domain, sampler)
    phi = wd.phi(z, w)
    m = margin_of(phi) / klotz_of(phi)
    m = np.where(np.isfinite(m), m, np.inf)
    order = np.argsort(m)
    best = int(order[0])
    best_val = float(m[best])
    best_z = complex(z[best])
    best_w = None if w is None else complex(w[best])
    if refine:
        tree = cKDTree(np.column_stack([z.real, z.imag]))
        seeds = order[:n_seeds]
        dist, _ = tree.query(np.column_stack([z[seeds].real, z[seeds].imag]), k=3)
        for i, d in zip(seeds, dist[:, -1]):
            res = _refine(wd, complex(z[i]), None if w is None else complex(w[i]), 3 * d)
            if res is None:
                continue
            zz, ww = res
            val = float(normalized_margin(wd, zz, ww))
            if val < best_val:
                best_val, best_z, best_w = val, zz, ww
        if w is None:
            for zc, reach in _winding_seeds(wd, sampler):
                res = _refine(wd, zc, None, reach)
                if res is None:
                    continue
                val = float(normalized_margin(wd, res[0]))
                if val < best_val:
                    best_val, best_z, best_w = val, res[0], None
    witness = SurfacePoint(best_z, best_w)
    return ImmersionReport(best_val, witness, best_val > eps, int(z.size), eps)


# ----------------------------------------------------------------------------
# periods and the immersion map


def contour_integral(wd, path: PathSpec, cfg: QuadratureConfig = DEFAULT):
    """``\\int_path Phi`` as a complex 3-vector."""
    res = integrate_contour(lambda z, w: wd.phi(z, w), path, cfg, wd.domain)
    return np.asarray(res.value, dtype=complex), res.error


def complex_periods(wd, generators, cfg: QuadratureConfig = DEFAULT):
    out = []
    for g in generators:
        if not g.closed:
            raise OpenPath("period generators must be closed paths")
        out.append(contour_integral(wd, g, cfg)[0])
    return out


def real_periods(wd, generators, cfg: QuadratureConfig = DEFAULT):
    return [p.real for p in complex_periods(wd, generators, cfg)]


def periods_vanish(periods, tol=1e-8):
    return all(np.all(np.abs(p) < tol) for p in periods)


def _same_point(a: SurfacePoint, b: SurfacePoint, tol=1e-12):
    if abs(a.z - b.z) > tol * (1 + abs(a.z)):
        return False
    if a.branch is None or b.branch is None:
        return True
    return abs(a.branch - b.branch) <= 1e-8 * (1 + abs(a.branch))


def evaluate_immersion(imm: Immersion, P, path: Optional[PathSpec] = None, cfg: QuadratureConfig = DEFAULT):
    """``X(P) = X(base) + Re \\int_path Phi``.

    Without a path the straight segment from the basepoint is used.
    """
    dom = imm.wd.domain
    if not isinstance(P, SurfacePoint):
        P = SurfacePoint(P)
    if path is None:
        path = PathSpec.polyline(dom, [imm.basepoint.z, P.z], w0=imm.basepoint.branch)
    if not _same_point(path.start, imm.basepoint):
        raise PathEndpointMismatch("path does not start at the basepoint")
    if path.closed or not _same_point(path.end, P):
        raise PathEndpointMismatch("path does not end at the requested point")
    val, _ = contour_integral(imm.wd, path, cfg)
    return np.asarray(imm.base_value) + val.real
