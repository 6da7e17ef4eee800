"""Domains, surface points and branch-continued polyline paths.

Four domain variants are supported: punctured planes, annuli, the unit
disk and the genus-one curve ``w**2 = (z - a)(a z - 1)/z`` with its two
ends over ``z = 0`` and ``z = inf`` removed.  Every 1-form in the package
is stored as its coefficient with respect to ``dz`` in the ambient chart;
on the curve the evaluator also receives the sheet value ``w``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import BranchMismatch, InvalidParameters, PointOutsideDomain

BRANCH_RTOL = 1e-10


@dataclass(frozen=True)
class PuncturedPlane:
    punctures: tuple = (0j,)

    def __post_init__(self):
        pts = tuple(complex(p) for p in self.punctures)
        for i, p in enumerate(pts):
            for q in pts[i + 1:]:
                if p == q:
                    raise InvalidParameters(f"repeated puncture {p}")
        object.__setattr__(self, "punctures", pts)

    sheets = 1

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        ok = np.isfinite(z)
        for p in self.punctures:
            ok &= z != p
        return ok

    def critical_points(self):
        return tuple(self.punctures)


@dataclass(frozen=True)
class Annulus:
    r_inner: float = 0.0
    r_outer: float = np.inf

    def __post_init__(self):
        if not (0 <= self.r_inner < self.r_outer):
            raise InvalidParameters("need 0 <= r_inner < r_outer")

    sheets = 1

    def contains(self, z):
        r = np.abs(np.asarray(z, dtype=complex))
        return (r > self.r_inner) & (r < self.r_outer)

    def critical_points(self):
        return (0j,) if self.r_inner == 0 else ()


@dataclass(frozen=True)
class UnitDisk:
    sheets = 1

    def contains(self, z):
        return np.abs(np.asarray(z, dtype=complex)) < 1

    def critical_points(self):
        return ()


@dataclass(frozen=True)
class EllipticCurve:
    """The curve ``w**2 = (z - a)(a z - 1)/z`` minus the points over 0 and inf."""

    a: float

    def __post_init__(self):
        if not (0 < self.a < 1):
            raise InvalidParameters("EllipticCurve needs 0 < a < 1")

    sheets = 2

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        return np.isfinite(z) & (z != 0)

    def w_squared(self, z):
        a = self.a
        z = np.asarray(z, dtype=complex)
        return (z - a) * (a * z - 1) / z

    @property
    def branch_points(self):
        return (0j, complex(self.a), complex(1 / self.a))

    def critical_points(self):
        return self.branch_points

    def principal_w(self, z):
        return np.sqrt(self.w_squared(z))


Domain = Union[PuncturedPlane, Annulus, UnitDisk, EllipticCurve]


def is_curve(domain) -> bool:
    return isinstance(domain, EllipticCurve)


@dataclass(frozen=True)
class SurfacePoint:
    z: complex
    branch: Optional[complex] = None

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        if self.branch is not None:
            object.__setattr__(self, "branch", complex(self.branch))


def branch_residual(domain: EllipticCurve, z, w):
    w = np.asarray(w, dtype=complex)
    return np.abs(w * w - domain.w_squared(z)) / (1 + np.abs(w) ** 2)


def coords(domain, P, w=None, check=True):
    """Normalise a point argument to ``(z, w)`` arrays.

    ``P`` may be a :class:`SurfacePoint`, a complex scalar or an array of
    chart coordinates.  On the curve a missing ``w`` defaults to the
    principal square root.
    """
    if isinstance(P, SurfacePoint):
        if w is None:
            w = P.branch
        P = P.z
    z = np.asarray(P, dtype=complex)
    if check and not np.all(domain.contains(z)):
        bad = np.asarray(z)[~np.asarray(domain.contains(z))].ravel()
        raise PointOutsideDomain(f"point(s) outside domain: {bad[:3]}")
    if not is_curve(domain):
        return z, None
    if w is None:
        w = domain.principal_w(z)
    else:
        w = np.broadcast_to(np.asarray(w, dtype=complex), z.shape)
        if check and np.any(branch_residual(domain, z, w) > BRANCH_RTOL):
            raise BranchMismatch("w is not a root of w^2 = (z-a)(az-1)/z")
    return z, w


# ----------------------------------------------------------------------------
# branch continuation


def _segment_clearance(z0, z1, pts):
    d = z1 - z0
    best = np.inf
    for p in pts:
        if d == 0:
            dist = abs(p - z0)
        else:
            t = min(1.0, max(0.0, ((p - z0) * np.conj(d)).real / abs(d) ** 2))
            dist = abs(z0 + t * d - p)
        best = min(best, dist)
    return best


def split_segment(domain, z0, w0, z1, max_pieces=100000):
    """Cut ``[z0, z1]`` into pieces short enough for local continuation.

    Returns a list of ``(za, wa, zb, wb)``.  On each piece the branch is
    ``w(z) = wa * sqrt(W(z) / W(za))`` (principal root), which is valid when
    the piece is short compared with its distance to the branch points.
    """
    if not is_curve(domain):
        return [(complex(z0), None, complex(z1), None)]
    pts = domain.branch_points
    out = []
    stack = [(complex(z0), complex(z1))]
    za, wa = complex(z0), complex(w0)
    while stack:
        a, b = stack.pop()
        clear = _segment_clearance(a, b, pts)
        if clear == 0:
            raise BranchMismatch(f"segment {a}->{b} passes through a branch point")
        if abs(b - a) > 0.25 * clear:
            m = 0.5 * (a + b)
            stack.append((m, b))
            stack.append((a, m))
            continue
        wb = continue_w(domain, za, wa, b)
        out.append((za, wa, b, wb))
        za, wa = b, wb
        if len(out) > max_pieces:
            raise BranchMismatch("branch continuation needs too many steps")
    return out


def continue_w(domain, z_ref, w_ref, z):
    """Continue the sheet value from ``(z_ref, w_ref)`` to nearby ``z``.

    Nearest-root selection: the root of ``w**2 = W(z)`` closest to
    ``w_ref * sqrt(W(z)/W(z_ref))``.  Vectorised over ``z``.
    """
    W = domain.w_squared(z)
    Wr = domain.w_squared(z_ref)
    guess = w_ref * np.sqrt(W / Wr)
    root = np.sqrt(W)
    return np.where(np.abs(root - guess) <= np.abs(root + guess), root, -root)


@dataclass(frozen=True)
class PathSpec:
    """Polyline on the domain; the sheet tag is continued vertex to vertex."""

    vertices: tuple
    closed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))

    @classmethod
    def polyline(cls, domain, zs: Sequence[complex], w0=None, closed=False):
        zs = [complex(z) for z in zs]
        if not np.all(domain.contains(np.array(zs))):
            raise PointOutsideDomain("path vertex outside domain")
        if not is_curve(domain):
            return cls(tuple(SurfacePoint(z) for z in zs), closed)
        if w0 is None:
            w0 = complex(domain.principal_w(zs[0]))
        verts = [SurfacePoint(zs[0], w0)]
        w = complex(w0)
        for za, zb in zip(zs[:-1], zs[1:]):
            pieces = split_segment(domain, za, w, zb)
            w = complex(pieces[-1][3])
            verts.append(SurfacePoint(zb, w))
        return cls(tuple(verts), closed)

    @classmethod
    def circle(cls, domain, center, radius, n=64, w0=None, start_angle=0.0):
        t = start_angle + 2 * np.pi * np.arange(n) / n
        return cls.polyline(domain, center + radius * np.exp(1j * t), w0=w0, closed=True)

    @property
    def start(self):
        return self.vertices[0]

    @property
    def end(self):
        return self.vertices[0] if self.closed else self.vertices[-1]

    def segments(self, domain):
        """Continuation pieces ``(za, wa, zb, wb)`` covering the whole path."""
        vs = list(self.vertices)
        if self.closed:
            vs = vs + [vs[0]]
        pieces = []
        w = vs[0].branch
        if is_curve(domain) and w is None:
            w = complex(domain.principal_w(vs[0].z))
        for a, b in zip(vs[:-1], vs[1:]):
            segs = split_segment(domain, a.z, w, b.z)
            pieces.extend(segs)
            w = segs[-1][3]
        return pieces


# ----------------------------------------------------------------------------
# end charts


@dataclass(frozen=True)
class EndChart:
    """Local coordinate ``u`` at an end, the end sitting at ``u = 0``.

    ``to_surface(u)`` returns ``(z, w)`` (``w`` is ``None`` off the curve)
    and ``dz_du(u)`` the chart Jacobian.  ``radius`` bounds a punctured disk
    in ``u`` free of other ends and branch points.
    """

    label: str
    to_surface: Callable
    dz_du: Callable
    radius: float
    point: complex = field(default=0j)


def _finite_chart(p, radius):
    p = complex(p)
    return EndChart(
        label=_fmt(p),
        to_surface=lambda u, p=p: (p + np.asarray(u, dtype=complex), None),
        dz_du=lambda u: np.ones_like(np.asarray(u, dtype=complex)),
        radius=radius,
        point=p,
    )


def _infinity_chart(radius):
    return EndChart(
        label="inf",
        to_surface=lambda u: (1 / np.asarray(u, dtype=complex), None),
        dz_du=lambda u: -1 / np.asarray(u, dtype=complex) ** 2,
        radius=radius,
        point=complex(np.inf),
    )


def _fmt(p: complex) -> str:
    if p.imag == 0:
        x = p.real
        return str(int(x)) if x == int(x) else repr(x)
    return repr(p)


def curve_end_charts(domain: EllipticCurve):
    """Charts ``u = 1/w`` at the two ends of the curve."""
    a = domain.a
    r = 0.3 / (1 + a)

    def disc(w):
        s = 1 + a * a + w * w
        # sqrt(s^2 - 4a^2) continued from w^2 at large |w|
        return s, w * w * np.sqrt((s / (w * w)) ** 2 - 4 * a * a / (w * w) ** 2)

    def small(u):
        u = np.asarray(u, dtype=complex)
        w = 1 / u
        s, root = disc(w)
        return 2 * a / (s + root), w

    def large(u):
        u = np.asarray(u, dtype=complex)
        w = 1 / u
        s, root = disc(w)
        return (s + root) / (2 * a), w

    def jac(to_surface):
        def dz_du(u):
            z, w = to_surface(u)
            u = np.asarray(u, dtype=complex)
            dwdz = a * (z * z - 1) / (2 * z * z * w)
            return -1 / (u * u * dwdz)
        return dz_du

    return (
        EndChart("(0,inf)", small, jac(small), r, 0j),
        EndChart("(inf,inf)", large, jac(large), r, complex(np.inf)),
    )


def default_end_charts(domain):
    """End charts derived from the domain alone."""
    if isinstance(domain, PuncturedPlane):
        pts = domain.punctures
        charts = []
        for p in pts:
            others = [abs(p - q) for q in pts if q != p]
            charts.append(_finite_chart(p, 0.5 * min(others) if others else 1.0))
        far = max((abs(p) for p in pts), default=0.0)
        charts.append(_infinity_chart(0.5 / far if far > 0 else 1.0))
        return tuple(charts)
    if isinstance(domain, Annulus):
        charts = []
        if domain.r_inner == 0:
            charts.append(_finite_chart(0, 0.5 * min(domain.r_outer, 1.0)))
        if domain.r_outer == np.inf:
            charts.append(_infinity_chart(0.5 / max(domain.r_inner, 1.0)))
        return tuple(charts)
    if isinstance(domain, EllipticCurve):
        return curve_end_charts(domain)
    return ()
