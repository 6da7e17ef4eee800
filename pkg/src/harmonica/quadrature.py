"""Numerical integration: contours, endpoint-singular integrals, surfaces.

* :func:`integrate_contour` -- adaptive Gauss-Legendre panel pairs along a
  branch-continued polyline.
* :func:`integrate_improper` -- tanh-sinh (double exponential) rule.
* :func:`integrate_surface` -- log-polar tensor quadrature with outward
  slab extension and tail control, plus smooth cut-off patches around
  finite punctures and branch points.
* :func:`cauchy_derivative`, :func:`laurent_coefficients` -- trapezoidal
  Cauchy integrals on circles.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidParameters, NonConvergent, TailNotDecaying
from .surfaces import EllipticCurve, PuncturedPlane, Annulus, UnitDisk, is_curve


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 2 ** 16
    tail_radius_growth: float = 2.0

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise InvalidParameters("tolerances must be positive")
        if self.max_subdivisions < 16:
            raise InvalidParameters("max_subdivisions must be >= 16")
        if self.tail_radius_growth <= 1:
            raise InvalidParameters("tail_radius_growth must exceed 1")

    def tol(self, value) -> float:
        return max(self.abs_tol, self.rel_tol * float(np.max(np.abs(value))))


DEFAULT = QuadratureConfig()


@dataclass(frozen=True)
class QuadResult:
    value: object
    error: float
    evaluations: int = 0

    def __iter__(self):
        yield self.value
        yield self.error


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


# ----------------------------------------------------------------------------
# contours


def _eval_pieces(f, domain, za, zb, az, aw, x):
    """Evaluate ``f`` at the mapped nodes ``x`` of every panel.

    Returns an array ``(m, P, n)`` of integrand values times dz/dt.
    """
    mid = 0.5 * (za + zb)
    half = 0.5 * (zb - za)
    z = mid[:, None] + half[:, None] * x[None, :]
    if is_curve(domain):
        W = domain.w_squared(z)
        guess = aw[:, None] * np.sqrt(W / domain.w_squared(az)[:, None])
        root = np.sqrt(W)
        w = np.where(np.abs(root - guess) <= np.abs(root + guess), root, -root)
    else:
        w = None
    vals = np.asarray(f(z, w), dtype=complex)
    if vals.ndim == 2:
        vals = vals[None]
    return vals * half[None, :, None]


def integrate_contour(f, path, cfg: QuadratureConfig = DEFAULT, domain=None):
    """Integrate ``f(z, w) dz`` along ``path``.

    ``f`` must be vectorised and may return either a scalar field or a
    stacked array of components (leading axis).  Returns a
    :class:`QuadResult` whose value is complex (or an array of components).
    """
    if domain is None:
        domain = PuncturedPlane(())
    pieces = path.segments(domain)
    za = np.array([p[0] for p in pieces], dtype=complex)
    zb = np.array([p[2] for p in pieces], dtype=complex)
    if is_curve(domain):
        az = za.copy()
        aw = np.array([p[1] for p in pieces], dtype=complex)
    else:
        az = aw = np.zeros_like(za)
    x16, w16 = gauss_legendre(16)
    x32, w32 = gauss_legendre(32)
    total_len = float(np.sum(np.abs(zb - za)))
    done_val = 0
    done_err = 0.0
    nevals = 0
    npanels = len(za)
    scalar = None
    while len(za):
        v16 = _eval_pieces(f, domain, za, zb, az, aw, x16) @ w16
        v32 = _eval_pieces(f, domain, za, zb, az, aw, x32) @ w32
        if scalar is None:
            scalar = v16.shape[0] == 1 and np.ndim(f(np.array([za[0]]), None if aw is None else np.array([aw[0]]))) == 1
        nevals += 48 * len(za)
        err = np.max(np.abs(v32 - v16), axis=0)
        est = done_val + np.sum(v32, axis=1)
        tol = cfg.tol(est)
        share = tol * np.abs(zb - za) / total_len if total_len > 0 else np.full(len(za), tol)
        ok = err <= share
        done_val = done_val + np.sum(v32[:, ok], axis=1)
        done_err += float(np.sum(err[ok]))
        bad = ~ok
        if not np.any(bad):
            break
        npanels += int(np.sum(bad))
        if npanels > cfg.max_subdivisions:
            value = done_val + np.sum(v32[:, bad], axis=1)
            raise NonConvergent(
                "contour quadrature exhausted its panel budget",
                estimate=value, error=done_err + float(np.sum(err[bad])),
            )
        ma = za[bad]
        mb = zb[bad]
        mid = 0.5 * (ma + mb)
        za = np.concatenate([ma, mid])
        zb = np.concatenate([mid, mb])
        az = np.concatenate([az[bad], az[bad]])
        aw = np.concatenate([aw[bad], aw[bad]])
    value = done_val
    if scalar:
        value = complex(value[0])
    return QuadResult(value, done_err, nevals)


# ----------------------------------------------------------------------------
# tanh-sinh


def integrate_improper(f, interval, singular_endpoints=(True, True), cfg: QuadratureConfig = DEFAULT,
                       max_level: int = 12, t_max: float = 4.0, offsets: bool = False):
    """Double-exponential quadrature of a real integrand on ``(p, q)``.

    Nodes cluster doubly exponentially at both ends, so integrable
    endpoint singularities (inverse square roots, logarithms) are handled
    without special care.  Nodes are placed by their offset from the
    nearer endpoint; a node that rounds onto a singular endpoint is
    dropped.  With ``offsets=True`` the integrand is called as
    ``f(x, x - p, q - x)`` with both offsets computed without cancellation,
    which keeps full accuracy at singular endpoints.
    """
    p, q = map(float, interval)
    if not q > p:
        raise InvalidParameters("integrate_improper needs p < q")
    L = q - p
    sl, sr = singular_endpoints

    def nodes(t):
        u = 0.5 * np.pi * np.sinh(t)
        left = L / (1 + np.exp(-2 * u))
        right = L / (1 + np.exp(2 * u))
        x = np.where(u <= 0, p + left, q - right)
        wt = 0.5 * np.pi * np.cosh(t) * L / (2 * np.cosh(u) ** 2)
        dl = np.where(u <= 0, left, L - right)
        dr = np.where(u <= 0, L - left, right)
        keep = (dl > 0) & (dr > 0) & (wt > 0)
        if not offsets:
            if sl:
                keep &= x > p
            if sr:
                keep &= x < q
        return x[keep], dl[keep], dr[keep], wt[keep]

    def level_sum(t):
        x, dl, dr, wt = nodes(t)
        if x.size == 0:
            return 0.0
        y = np.asarray(f(x, dl, dr) if offsets else f(x), dtype=float)
        y = np.where(np.isfinite(y), y, 0.0)
        return float(np.sum(wt * y))

    h = 1.0
    t = np.arange(-t_max, t_max + h / 2, h)
    total = h * level_sum(t)
    nevals = t.size
    prev = total
    err = np.inf
    for level in range(1, max_level + 1):
        h *= 0.5
        t_new = np.arange(-t_max + h, t_max, 2 * h)
        nevals += t_new.size
        total = 0.5 * prev + h * level_sum(t_new)
        err = abs(total - prev)
        if level >= 3 and err <= cfg.tol(total):
            return QuadResult(total, err, nevals)
        prev = total
    raise NonConvergent("tanh-sinh did not converge", estimate=total, error=err)


# ----------------------------------------------------------------------------
# Cauchy integrals on circles


def _circle_samples(f, center, radius, n):
    theta = 2 * np.pi * np.arange(n) / n
    e = np.exp(1j * theta)
    vals = np.asarray(f(center + radius * e), dtype=complex)
    return vals, e


def cauchy_derivative(f, z0, radius=None, cfg: QuadratureConfig = DEFAULT, n0: int = 32, n_max: int = 4096,
                      nearest_singularity=None):
    """Derivative of a holomorphic ``f`` at ``z0`` via the Cauchy kernel.

    The trapezoid rule on a circle converges geometrically; ``n`` doubles
    until two successive values agree within tolerance.  Default radius is
    half the distance to ``nearest_singularity``, capped at 0.1.
    """
    if radius is None:
        radius = 0.1 if nearest_singularity is None else min(0.1, 0.5 * nearest_singularity)
    prev = None
    n = n0
    while n <= n_max:
        vals, e = _circle_samples(f, z0, radius, n)
        d = np.mean(vals / e, axis=-1) / radius
        if prev is not None:
            err = float(np.max(np.abs(d - prev)))
            if err <= cfg.tol(d):
                return d if np.ndim(d) else complex(d)
        prev = d
        n *= 2
    raise NonConvergent("Cauchy derivative did not converge", estimate=prev)


def laurent_coefficients(f, puncture=0j, k_range=range(-6, 3), cfg: QuadratureConfig = DEFAULT,
                         radius: float = 0.5, n0: int = 64, n_max: int = 8192):
    """Laurent coefficients ``c_k`` of ``f`` about ``puncture``.

    ``c_k = (1/2 pi i) \\oint f(z) (z - p)^{-k-1} dz`` on ``|z - p| = radius``
    which must lie in an annulus of holomorphy.  ``f`` may be vector valued
    (components on the leading axis).  Returns ``{k: c_k}``.
    """
    ks = list(k_range)
    prev = None
    n = n0
    while n <= n_max:
        vals, e = _circle_samples(f, puncture, radius, n)
        coeffs = np.stack([np.mean(vals * e ** (-k), axis=-1) * radius ** (-k) for k in ks])
        if prev is not None:
            scale = np.max(np.abs(coeffs * np.array([radius ** k for k in ks]).reshape((-1,) + (1,) * (coeffs.ndim - 1))))
            err = float(np.max(np.abs((coeffs - prev) * np.array([radius ** k for k in ks]).reshape((-1,) + (1,) * (coeffs.ndim - 1)))))
            if err <= max(cfg.abs_tol * 1e-2, cfg.rel_tol * 1e-2 * scale):
                return {k: (c if np.ndim(c) else complex(c)) for k, c in zip(ks, coeffs)}
        prev = coeffs
        n *= 2
    raise NonConvergent("Laurent extraction did not converge")


# ----------------------------------------------------------------------------
# surfaces


def smooth_step(x):
    """C-infinity cut-off: 1 on [0, 1/2], 0 on [1, inf)."""
    x = np.asarray(x, dtype=float)
    y = np.clip(2 * x - 1, 0.0, 1.0)

    def bump(s):
        out = np.zeros_like(s)
        m = s > 0
        out[m] = np.exp(-1 / s[m])
        return out

    a = bump(1 - y)
    b = bump(y)
    return a / (a + b)


@dataclass
class _Patch:
    center: complex
    radius: float
    kind: str  # "pole" or "branch"


def surface_patches(domain):
    """Cut-off patches around finite punctures (other than 0) and branch points."""
    if isinstance(domain, PuncturedPlane):
        special = [(p, "pole") for p in domain.punctures if p != 0]
    elif isinstance(domain, EllipticCurve):
        special = [(complex(domain.a), "branch"), (complex(1 / domain.a), "branch")]
    else:
        special = []
    crit = [0j] + [p for p, _ in special]
    patches = []
    for p, kind in special:
        d = min(abs(p - q) for q in crit if q != p)
        patches.append(_Patch(p, 0.45 * d, kind))
    return patches


class _Band:
    """Adaptive tensor rule on ``[lo, hi] x [0, 2 pi)`` for ``g(s, theta)``."""

    def __init__(self, g, tol_abs, rel, n_theta, max_theta=8192, max_depth=12):
        self.g = g
        self.tol_abs = tol_abs
        self.rel = rel
        self.n_theta0 = n_theta
        self.max_theta = max_theta
        self.max_depth = max_depth
        self.evals = 0

    def rule(self, lo, hi, nt):
        x, w = gauss_legendre(16)
        s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x
        th = 2 * np.pi * np.arange(nt) / nt
        S, T = np.meshgrid(s, th, indexing="ij")
        vals = self.g(S, T)
        self.evals += vals.size
        wt = 0.5 * (hi - lo) * w[:, None] * (2 * np.pi / nt)
        return float(np.sum(wt * vals)), float(np.sum(wt * np.abs(vals)))

    def integrate(self, lo, hi, nt=None, depth=0):
        nt = nt or self.n_theta0
        Ia, Aa = self.rule(lo, hi, nt)
        mid = 0.5 * (lo + hi)
        I1, A1 = self.rule(lo, mid, nt)
        I2, A2 = self.rule(mid, hi, nt)
        Ir = I1 + I2
        It, _ = self.rule(lo, hi, 2 * nt)
        e_s = abs(Ir - Ia)
        e_t = abs(It - Ia)
        tol = max(self.tol_abs, self.rel * (A1 + A2))
        if e_s + e_t <= tol or depth >= self.max_depth:
            return Ir + (It - Ia), e_s + e_t
        if e_t > 0.5 * tol and 2 * nt <= self.max_theta:
            nt *= 2
        if e_s > 0.5 * tol or nt == self.max_theta:
            v1, r1 = self.integrate(lo, mid, nt, depth + 1)
            v2, r2 = self.integrate(mid, hi, nt, depth + 1)
            return v1 + v2, r1 + r2
        return self.integrate(lo, hi, nt, depth + 1)


def _extend(band, start, step, limit, cfg, label):
    """Add slabs from ``start`` in direction ``sign(step)`` until the tail is small."""
    total = 0.0
    err = 0.0
    mags = []
    # cheap fixed-rule pre-scan: sustained growth means no decay, skip the adaptive pass
    probes = []
    for k in range(8):
        lo, hi = sorted((start + k * step, start + (k + 1) * step))
        probes.append(abs(band.rule(lo, hi, band.n_theta0)[0]))
    for k in range(len(probes) - 5):
        recent = probes[k:k + 6]
        if all(recent[i] > 0 and recent[i + 1] > 1.5 * recent[i] for i in range(5)):
            raise TailNotDecaying(
                f"integrand grows towards the {label} end "
                f"(coarse slab magnitudes {recent[-3]:.3g}, {recent[-2]:.3g}, {recent[-1]:.3g})",
                estimate=0.0, error=np.inf,
            )
    edge = start
    while True:
        lo, hi = sorted((edge, edge + step))
        v, e = band.integrate(lo, hi)
        total += v
        err += e
        mags.append(abs(v))
        edge += step
        if len(mags) >= 2:
            a, b = mags[-2], mags[-1]
            if b == 0 and a == 0:
                break
            r = b / a if a > 0 else np.inf
            if r < 1:
                tail = b * r / (1 - r)
                if tail < max(cfg.abs_tol, cfg.rel_tol * abs(total)) and b < max(cfg.abs_tol, cfg.rel_tol * abs(total)) * 10:
                    err += tail
                    break
            grows = len(mags) >= 4 and all(mags[-4 + i] > 0 and mags[-3 + i] > 1.5 * mags[-4 + i] for i in range(3))
            if len(mags) >= 6 or grows:
                recent = mags[-6:]
                ratios = [recent[i + 1] / recent[i] if recent[i] > 0 else np.inf for i in range(len(recent) - 1)]
                if (grows or min(ratios) > 0.9) and recent[-1] > cfg.abs_tol:
                    raise TailNotDecaying(
                        f"integrand does not decay towards the {label} end "
                        f"(slab magnitudes {recent[-3]:.3g}, {recent[-2]:.3g}, {recent[-1]:.3g})",
                        estimate=total, error=err,
                    )
        if abs(edge) > limit:
            raise TailNotDecaying(f"tail towards the {label} end not resolved by |rho| <= {limit}",
                                  estimate=total, error=err)
    return total, err


def _sheet_sum(density, domain):
    if not is_curve(domain):
        return lambda z: density(z, None)

    def g(z):
        w = domain.principal_w(z)
        return density(z, w) + density(z, -w)

    return g


def integrate_surface(density, domain, cfg: QuadratureConfig = DEFAULT, n_theta: int = 128,
                      slab_width: float = 1.0, max_rho: float = 50.0):
    """Integrate a real 2-form density over the whole domain.

    ``density(z, w)`` returns the coefficient of ``du dv`` (``z = u + i v``).
    The global chart is ``z = exp(rho + i theta)``; slabs of width
    ``slab_width`` are added towards ``rho = +-inf`` until the geometrically
    extrapolated tail falls below tolerance.  Finite punctures get local
    log-polar patches and branch points local ``z = p + t^2 e^{i psi}``
    patches, blended with smooth cut-offs.  On the curve both sheets are
    summed.

    Raises :class:`TailNotDecaying` when an end contributes non-decaying
    slabs (infinite integral).
    """
    g = _sheet_sum(density, domain)
    patches = surface_patches(domain)

    def cut_total(z):
        out = np.zeros(z.shape)
        for pt in patches:
            out += smooth_step(np.abs(z - pt.center) / pt.radius)
        return out

    def guarded(z, weight):
        out = np.zeros(z.shape)
        m = weight != 0
        if np.any(m):
            out[m] = weight[m] * g(z[m])
        return out

    def global_g(rho, theta):
        z = np.exp(rho + 1j * theta)
        weight = (1 - cut_total(z)) * np.exp(2 * rho)
        return guarded(z, weight)

    tol_abs = cfg.abs_tol
    rel = cfg.rel_tol
    total = 0.0
    err = 0.0
    evals = 0

    if isinstance(domain, UnitDisk):
        lo_fixed, hi_fixed = None, 0.0
    elif isinstance(domain, Annulus):
        lo_fixed = np.log(domain.r_inner) if domain.r_inner > 0 else None
        hi_fixed = np.log(domain.r_outer) if np.isfinite(domain.r_outer) else None
    else:
        lo_fixed = hi_fixed = None

    band = _Band(global_g, tol_abs, rel, n_theta)
    core_lo = -1.0 if lo_fixed is None else lo_fixed
    core_hi = 1.0 if hi_fixed is None else hi_fixed
    if lo_fixed is None and hi_fixed is not None:
        core_lo = hi_fixed - 2.0
    if hi_fixed is None and lo_fixed is not None:
        core_hi = lo_fixed + 2.0
    v, e = band.integrate(core_lo, core_hi)
    total += v
    err += e
    if hi_fixed is None:
        v, e = _extend(band, core_hi, slab_width, max_rho, cfg, "outer")
        total += v
        err += e
    if lo_fixed is None:
        v, e = _extend(band, core_lo, -slab_width, max_rho, cfg, "inner")
        total += v
        err += e
    evals += band.evals

    for pt in patches:
        if pt.kind == "pole":
            def pole_g(s, th, pt=pt):
                d = np.exp(s + 1j * th)
                z = pt.center + d
                weight = smooth_step(np.exp(s) / pt.radius) * np.exp(2 * s)
                return guarded(z, weight)

            pb = _Band(pole_g, tol_abs, rel, n_theta)
            top = np.log(pt.radius)
            v, e = pb.integrate(top - slab_width, top)
            v2, e2 = _extend(pb, top - slab_width, -slab_width, max_rho + abs(top), cfg, f"puncture {pt.center}")
            total += v + v2
            err += e + e2
            evals += pb.evals
        else:
            def branch_g(t, th, pt=pt):
                z = pt.center + t * t * np.exp(1j * th)
                weight = smooth_step(t * t / pt.radius) * 2 * t ** 3
                return guarded(z, weight)

            bb = _Band(branch_g, tol_abs, rel, n_theta)
            top = np.sqrt(pt.radius)
            for k in range(4):
                v, e = bb.integrate(top * k / 4, top * (k + 1) / 4)
                total += v
                err += e
            evals += bb.evals
    return QuadResult(total, err, evals)
