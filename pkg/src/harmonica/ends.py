"""End analysis from Laurent expansions in end charts.

All quantities are read in the chart ``u`` of an :class:`EndChart`, where
the 1-form ``Phi`` has coefficients ``phi(z(u)) dz/du``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import theilslopes

from .core import complex_periods
from .errors import LimitNormalDiverges, NotFTCEnd, OpenPath, OrderOutOfRange
from .gauss import normal_of
from .quadrature import DEFAULT, QuadratureConfig, laurent_coefficients

K_RANGE = range(-6, 3)
NOISE = 1e-8
SHELLS = (1e-1, 1e-2, 1e-3, 1e-4)


def chart_phi(wd, chart):
    """``u -> phi(z(u)) dz/du`` on an end chart."""

    def f(u):
        z, w = chart.to_surface(u)
        return np.asarray(wd.phi(z, w), dtype=complex) * chart.dz_du(u)

    return f


def laurent_of(wd, chart, source="auto", k_range=K_RANGE, cfg: QuadratureConfig = DEFAULT):
    """``{k: c_k}`` (complex 3-vectors) at an end.

    ``source`` is ``"laurent"`` (metadata), ``"contour"`` (trapezoidal
    extraction on ``|u| = radius/2``) or ``"auto"`` (metadata if present).
    """
    meta = (wd.laurent or {}).get(chart.label)
    if source == "laurent" or (source == "auto" and meta is not None):
        if meta is None:
            raise KeyError(f"no Laurent metadata for end {chart.label}")
        return {k: np.asarray(meta.get(k, (0, 0, 0)), dtype=complex) for k in k_range}
    coeffs = laurent_coefficients(chart_phi(wd, chart), 0j, k_range, cfg, radius=0.5 * chart.radius)
    return {k: np.asarray(v, dtype=complex) for k, v in coeffs.items()}


@dataclass
class PoleOrders:
    orders: tuple
    weight: int
    coefficients: dict = field(repr=False, default_factory=dict)


def pole_orders(wd, chart, source="auto", cfg: QuadratureConfig = DEFAULT):
    """Pole orders per component and the weight ``max - 1``."""
    c = laurent_of(wd, chart, source, cfg=cfg)
    scale = max(float(np.max(np.abs(v))) for v in c.values())
    kmin = min(c)
    orders = []
    for j in range(3):
        n = 0
        for k in sorted(c):
            if k >= 0:
                break
            if abs(c[k][j]) > NOISE * scale:
                n = -k
                break
        if n >= -kmin:
            raise OrderOutOfRange(f"pole order of component {j + 1} at {chart.label} reaches {n}; extend k_range")
        orders.append(n)
    return PoleOrders(tuple(orders), max(max(orders) - 1, 0), c)


@dataclass
class LimitNormal:
    converged: bool
    normal: Optional[np.ndarray]
    spread: float
    shell_means: list

    def to_dict(self):
        return {"converged": self.converged,
                "normal": None if self.normal is None else [float(x) for x in self.normal],
                "spread": float(self.spread), "tolerance": 1e-3}


def limit_normal(wd, chart, shells=SHELLS, n_theta=32, tol=1e-3):
    """Gauss map on shrinking shells ``|u| = r``; converged when the deepest shell is tight."""
    means = []
    spread = np.inf
    for r in shells:
        u = r * np.exp(2j * np.pi * (np.arange(n_theta) + 0.5) / n_theta)
        z, w = chart.to_surface(u)
        N = normal_of(np.asarray(wd.phi(z, w), dtype=complex))
        m = N.mean(axis=1)
        nm = np.linalg.norm(m)
        m = m / nm if nm > 0 else m
        means.append(m)
        spread = float(np.max(np.linalg.norm(N - m[:, None], axis=0)))
    ok = spread < tol
    return LimitNormal(ok, means[-1] if ok else None, spread, means)


def rotation_to_north(n):
    """Rotation matrix sending unit vector ``n`` to ``(0, 0, 1)``."""
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)
    e3 = np.array([0.0, 0.0, 1.0])
    v = np.cross(n, e3)
    c = float(np.dot(n, e3))
    if np.linalg.norm(v) < 1e-15:
        return np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx / (1 + c)


@dataclass
class FTCResult:
    ftc: bool
    rotation: Optional[np.ndarray]
    reason: str
    orders: PoleOrders
    normal: Optional[np.ndarray] = None


def ftc_criterion(wd, chart, source="auto", cfg: QuadratureConfig = DEFAULT):
    """FTC test at an end: weight >= 1 and, after rotating the limit normal
    to the north pole, ``Ord(Phi3) < Ord(Phi1) = Ord(Phi2) = I + 1`` with
    ``Phi2/Phi1`` non-real at the end."""
    po = pole_orders(wd, chart, source, cfg)
    if po.weight < 1:
        return FTCResult(False, None, f"weight {po.weight} < 1", po)
    ln = limit_normal(wd, chart)
    if not ln.converged:
        raise LimitNormalDiverges(f"Gauss map has no limit at end {chart.label} (spread {ln.spread:.3g})")
    n = po.weight + 1
    lead = po.coefficients[-n]
    axis = np.cross(lead.real, lead.imag)
    if np.linalg.norm(axis) > 0:
        axis = axis / np.linalg.norm(axis)
        normal = axis if np.dot(axis, ln.normal) >= 0 else -axis
    else:
        normal = ln.normal
    R = rotation_to_north(normal)
    rl = R @ lead
    scale = np.max(np.abs(rl))
    ords_ok = abs(rl[2]) <= NOISE * scale and abs(rl[0]) > NOISE * scale and abs(rl[1]) > NOISE * scale
    ratio = rl[1] / rl[0] if abs(rl[0]) > 0 else np.inf
    nonreal = np.isfinite(ratio) and abs(ratio.imag) > NOISE * max(1.0, abs(ratio))
    ok = bool(ords_ok and nonreal)
    reason = "" if ok else ("rotated orders fail" if not ords_ok else "Phi2/Phi1 is real at the end")
    return FTCResult(ok, R, reason, po, normal)


@dataclass
class EndReport:
    label: str
    pole_orders: tuple
    weight: int
    ftc: bool
    rotation: Optional[list]
    end_type: str
    axis: Optional[list] = None
    log_growth: Optional[int] = None
    growth_vector: Optional[list] = None
    riemann_type: Optional[bool] = None
    phi3_residue: complex = 0j
    flux_contribution: Optional[list] = None
    limit_normal: Optional[list] = None
    limit_normal_converged: Optional[bool] = None
    limit_normal_spread: Optional[float] = None
    x3_limit: Optional[float] = None
    ray_bound: Optional[float] = None
    ray_slope: Optional[float] = None
    reason: str = ""

    def to_dict(self):
        d = dict(self.__dict__)
        d["phi3_residue"] = [self.phi3_residue.real, self.phi3_residue.imag]
        return d


def _ray_samples(chart, depths, n_rays=8):
    ang = 2 * np.pi * (np.arange(n_rays) + 0.25) / n_rays
    return depths[None, :] * np.exp(1j * ang)[:, None]


def classify_end(wd, chart, closed_form=None, source="auto", cfg: QuadratureConfig = DEFAULT):
    """Catenoidal or planar type with growth data.

    With a closed-form immersion, the remainder of the end expansion is
    sampled along 8 rays: for a catenoidal end
    ``|(X1, X2) - (a1, a2) X3| exp(X3 / res3)`` (rotated frame), for a
    planar end ``|(X1, X2)| |X3 - X3(end)|``.  ``ray_bound`` is its largest
    sampled value and ``ray_slope`` the Theil-Sen slope against depth.
    """
    f = ftc_criterion(wd, chart, source, cfg)
    po = f.orders
    if not f.ftc:
        raise NotFTCEnd(f"end {chart.label} is not FTC: {f.reason}")
    R = f.rotation
    res = po.coefficients.get(-1, np.zeros(3, complex))
    rres = R @ res
    scale = max(float(np.max(np.abs(v))) for v in po.coefficients.values())
    rep = EndReport(chart.label, po.orders, po.weight, True, R.tolist(), "", phi3_residue=complex(rres[2]),
                    flux_contribution=list(map(float, (2 * np.pi * res).real)),
                    limit_normal=list(map(float, f.normal)), limit_normal_converged=True)
    # X = Re(res log u) + ...: moving into the end (u -> 0) X moves along -Re(res)
    rep.growth_vector = list(map(float, -res.real))
    depths = np.logspace(-4, -8, 9)
    if abs(rres[2]) > NOISE * scale:
        rep.end_type = "catenoidal"
        d = rres.real
        rep.axis = [float(d[0] / d[2]), float(d[1] / d[2]), 1.0]
        rep.log_growth = int(-np.sign(d[2]))
        if closed_form is not None:
            u = _ray_samples(chart, depths)
            z, w = chart.to_surface(u)
            X = np.tensordot(R, closed_form(z, w), axes=(1, 0))
            horiz = X[:2] - np.array(rep.axis[:2])[:, None, None] * X[2]
            q = np.linalg.norm(horiz, axis=0) * np.exp(X[2] / d[2])
            rep.ray_bound = float(np.max(q))
            rep.ray_slope = float(max(abs(theilslopes(qr, np.log10(1 / depths))[0]) for qr in q))
    else:
        rep.end_type = "planar"
        value = (R @ po.coefficients.get(0, np.zeros(3, complex)))[2]
        rep.riemann_type = bool(abs(value) > NOISE * scale)
        if closed_form is not None:
            u = _ray_samples(chart, depths, 32)
            z, w = chart.to_surface(u)
            X = np.tensordot(R, closed_form(z, w), axes=(1, 0))
            lim = float(np.mean(X[2][:, -1]))
            rep.x3_limit = float(np.mean(closed_form(z, w)[2][:, -1]))
            q = np.linalg.norm(X[:2], axis=0) * np.abs(X[2] - lim)
            rep.ray_bound = float(np.max(q))
            rep.ray_slope = float(max(abs(theilslopes(qr[:-1], np.log10(1 / depths[:-1]))[0]) for qr in q))
    return rep


def analyze_end(wd, chart, closed_form=None, source="auto", cfg: QuadratureConfig = DEFAULT):
    """EndReport for any end, including non-FTC ones."""
    try:
        return classify_end(wd, chart, closed_form, source, cfg)
    except (NotFTCEnd, LimitNormalDiverges) as exc:
        try:
            po = pole_orders(wd, chart, source, cfg)
            orders, weight = po.orders, po.weight
            res = po.coefficients.get(-1, np.zeros(3))[2]
        except OrderOutOfRange:
            orders, weight, res = (), -1, 0j
        ln = limit_normal(wd, chart)
        return EndReport(chart.label, orders, weight, False, None, "not_ftc", phi3_residue=complex(res),
                         limit_normal=None if ln.normal is None else list(map(float, ln.normal)),
                         limit_normal_converged=ln.converged, limit_normal_spread=ln.spread,
                         reason=str(exc))
    except OrderOutOfRange as exc:
        return EndReport(chart.label, (), -1, False, None, "not_ftc", reason=str(exc))


# ----------------------------------------------------------------------------
# flux


@dataclass
class Flux:
    vectors: list
    vertical: bool

    def to_dict(self):
        return {"vectors": [list(map(float, v)) for v in self.vectors], "vertical": self.vertical,
                "tolerance": 1e-8}


def flux(wd, generators, cfg: QuadratureConfig = DEFAULT, tol=1e-8):
    """``Im \\oint Phi`` per generator; vertical when the horizontal parts vanish."""
    gens = list(generators)
    for g in gens:
        if not g.closed:
            raise OpenPath("flux generators must be closed paths")
    vecs = [p.imag for p in complex_periods(wd, gens, cfg)]
    vertical = all(abs(v[0]) < tol and abs(v[1]) < tol for v in vecs)
    return Flux(vecs, vertical)
