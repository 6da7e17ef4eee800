"""Gauss and mean curvature, second fundamental form, total curvature.

Pointwise formulas in terms of ``phi``, ``phi'`` and the unit normal ``N``
(``s = |phi ^ conj(phi)|``, ``h`` the Hopf coefficient)::

    K      = -4 |<N, phi'>|^2 / s^2
    H      = -2 <N, Re(conj(h) phi')> / s^2
    |s|^2  = 8/s^2 (2 <N, Re(conj(h) phi')>^2 / s^2 + |<N, phi'>|^2)
    dS     = s/2 du dv
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .core import eval_phi, eval_phi_prime, hopf_of, sample_surface, default_sampler, wedge_norm
from .errors import NonIntegerDegree
from .gauss import normal_of
from .quadrature import DEFAULT, QuadratureConfig, integrate_surface
from .surfaces import continue_w, is_curve


@dataclass
class CurvatureSample:
    K: np.ndarray
    mean: np.ndarray
    sigma2: np.ndarray
    area_density: np.ndarray
    sigma2_bound: np.ndarray  # upper bound -2K(2|h|^2/s^2 + 1)


def curvature_of(phi, dphi):
    N = normal_of(phi)
    s = wedge_norm(phi)
    h = hopf_of(phi)
    a = np.sum(N * dphi, axis=0)
    b = np.sum(N * (np.conj(h) * dphi).real, axis=0)
    s2 = s * s
    K = -4 * np.abs(a) ** 2 / s2
    H = -2 * b / s2
    sigma2 = 8 / s2 * (2 * b * b / s2 + np.abs(a) ** 2)
    bound = -2 * K * (2 * np.abs(h) ** 2 / s2 + 1)
    return CurvatureSample(K, H, sigma2, 0.5 * s, bound)


def curvature(wd, P, w=None):
    phi = eval_phi(wd, P, w)
    dphi = eval_phi_prime(wd, P, w)
    return curvature_of(phi, dphi)


def _phi_and_prime(wd):
    if wd.phi_prime is not None:
        return lambda z, w: (wd.phi(z, w), wd.phi_prime(z, w))
    return lambda z, w: (wd.phi(z, w), eval_phi_prime(wd, z, w, check=False))


def curvature_density(wd):
    """``K dS`` as a coefficient of ``du dv``: ``-2 |<N, phi'>|^2 / s``."""
    both = _phi_and_prime(wd)

    def f(z, w):
        phi, dphi = both(z, w)
        N = normal_of(phi)
        a = np.sum(N * dphi, axis=0)
        return -2 * np.abs(a) ** 2 / wedge_norm(phi)

    return f


def sigma2_density(wd):
    both = _phi_and_prime(wd)

    def f(z, w):
        phi, dphi = both(z, w)
        c = curvature_of(phi, dphi)
        return c.sigma2 * c.area_density

    return f


@dataclass
class TotalCurvature:
    value: float
    error: float
    sigma2: float
    sigma2_error: float

    def to_dict(self):
        return {"value": self.value, "error": self.error,
                "sigma2_integral": self.sigma2, "sigma2_error": self.sigma2_error}


def total_curvature(wd, domain=None, cfg: QuadratureConfig = DEFAULT, check_ftc: bool = True):
    """``\\int K dS`` over the whole surface.

    With ``check_ftc`` the finiteness integral ``\\int |sigma|^2 dS`` is
    computed first; it raises :class:`TailNotDecaying` at an end where the
    surface does not have finite total curvature, even when the integral of
    ``K`` alone would converge.
    """
    domain = domain or wd.domain
    s2 = s2e = float("nan")
    if check_ftc:
        loose = QuadratureConfig(abs_tol=max(cfg.abs_tol, 1e-4), rel_tol=max(cfg.rel_tol, 1e-3))
        r = integrate_surface(sigma2_density(wd), domain, loose)
        s2, s2e = r.value, r.error
    r = integrate_surface(curvature_density(wd), domain, cfg)
    return TotalCurvature(r.value, r.error, s2, s2e)


def gauss_degree(wd, domain=None, cfg: QuadratureConfig = DEFAULT, total=None, max_residual=0.05):
    """Degree from the curvature integral; returns ``(degree, residual, total)``."""
    total = total or total_curvature(wd, domain, cfg)
    q = total.value / (-4 * np.pi)
    d = int(round(q))
    res = q - d
    if abs(res) >= max_residual:
        raise NonIntegerDegree(f"total curvature / (-4 pi) = {q:.6f} is not an integer")
    return d, res, total


def jorge_meeks_check(genus: int, weights, degree: int) -> int:
    """``2 deg - (2 genus - 2 + sum(I + 1))``; zero when consistent."""
    return int(2 * degree - (2 * genus - 2 + sum(int(I) + 1 for I in weights)))


# ----------------------------------------------------------------------------
# preimage count cross-check


def preimage_count(wd, v, sampler=None, tol=1e-9, dedupe=1e-6):
    """Number of points with ``N(P) = v`` found by grid search and refinement.

    Seeds are grid points whose normal lies within 0.3 of ``v`` and is a
    local best among them; each seed is polished by Levenberg-Marquardt.
    """
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    dom = wd.domain
    sampler = sampler or default_sampler(dom, 200)
    z, w = sample_surface(dom, sampler)
    N = normal_of(wd.phi(z, w))
    d = np.linalg.norm(N - v[:, None], axis=0)
    idx = np.argsort(d)
    idx = idx[d[idx] < 0.3][:200]
    roots = []
    for i in idx:
        z0 = complex(z[i])
        w0 = None if w is None else complex(w[i])

        # offset unknowns keep MINPACK's relative difference step nonzero on the axes
        def resid(xy, z0=z0, w0=w0):
            zz = z0 + complex(xy[0] - 1, xy[1] - 1)
            ww = None if w0 is None else np.array([continue_w(dom, z0, w0, zz)])
            return normal_of(np.asarray(wd.phi(np.array([zz]), ww)))[:, 0] - v

        try:
            sol = least_squares(resid, [1.0, 1.0], method="lm", max_nfev=400)
        except Exception:
            continue
        if np.linalg.norm(sol.fun) > tol:
            continue
        zz = z0 + complex(sol.x[0] - 1, sol.x[1] - 1)
        if not dom.contains(zz):
            continue
        ww = None if w0 is None else complex(continue_w(dom, z0, w0, zz))
        if all(abs(zz - r[0]) > dedupe or (ww is not None and abs(ww - r[1]) > 1e-4 * (1 + abs(ww)))
               for r in roots):
            roots.append((zz, ww))
    return len(roots), roots
