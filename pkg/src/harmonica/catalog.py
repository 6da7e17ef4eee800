"""Explicit harmonic immersions: constructors, validity predicates, b(a).

Every family exposes its Weierstrass data with an analytic derivative,
the closed-form immersion where one exists, homology generators, end
charts with Laurent data, and a default sampler.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .core import (
    BoxSampler,
    Immersion,
    LogPolarSampler,
    UnionSampler,
    WeierstrassData,
    DiskSampler,
    complex_periods,
    default_sampler,
)
from .errors import InvalidParameters, RootNotBracketed
from .quadrature import DEFAULT, QuadratureConfig, integrate_improper
from .surfaces import (
    EllipticCurve,
    PathSpec,
    PuncturedPlane,
    SurfacePoint,
    UnitDisk,
    default_end_charts,
)

FAMILIES = (
    "plane", "graph", "helicoid_y1", "helicoid_y2", "rotational", "horn",
    "catenoid", "flujo", "torus", "nonqc_y", "remark_contra",
)


@dataclass(frozen=True)
class FamilySpec:
    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParameters(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")

    def to_json(self):
        def enc(v):
            if isinstance(v, complex):
                return {"re": v.real, "im": v.imag}
            if isinstance(v, (list, tuple)):
                return [enc(x) for x in v]
            return v
        return {"family": self.family, "params": {k: enc(v) for k, v in self.params.items()}}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)

        def dec(v):
            if isinstance(v, dict) and set(v) == {"re", "im"}:
                return complex(v["re"], v["im"])
            if isinstance(v, list):
                return [dec(x) for x in v]
            return v
        return cls(obj["family"], {k: dec(v) for k, v in obj.get("params", {}).items()})


@dataclass
class Family:
    spec: FamilySpec
    wd: WeierstrassData
    immersion: Immersion
    closed_form: Optional[Callable]
    generators: tuple
    end_charts: tuple
    genus: int
    sampler: object
    valid: bool
    reason: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def domain(self):
        return self.wd.domain


# ----------------------------------------------------------------------------
# validity predicates


def rotational_valid(b) -> bool:
    b = complex(b)
    return not (b.imag == 0 and b.real < 0)


def rotational_quartic(b, x):
    """``2x^4 + (1 - |1 - 4b|) x^2 + 2|b|^2`` with ``x = |z|``."""
    b = complex(b)
    x = np.asarray(x, dtype=float)
    return 2 * x ** 4 + (1 - abs(1 - 4 * b)) * x ** 2 + 2 * abs(b) ** 2


def omega_member(alpha, beta) -> bool:
    alpha, beta = complex(alpha), complex(beta)
    if abs(alpha) <= abs(beta):
        return False
    if alpha.real >= 0 and abs(alpha.imag) <= abs(beta):
        return False
    return True


def flujo_valid(b, c) -> bool:
    return float(b) > 3 and float(c) < 2


def catenoid_injectivity_margin(alpha, beta, m):
    alpha, beta = complex(alpha), complex(beta)
    m = np.asarray(m, dtype=float)
    return -alpha.real + 1 / m ** 2 + m ** 2 / 4 * (abs(alpha) ** 2 - abs(beta) ** 2)


def catenoid_closed_form(alpha, beta, r1, r2, m, t, check=True):
    """Polar closed form of the harmonic catenoid at ``z = m e^{it}``."""
    alpha, beta = complex(alpha), complex(beta)
    if check and not omega_member(alpha, beta):
        raise InvalidParameters(f"(alpha, beta) = ({alpha}, {beta}) is not in Omega")
    m = np.asarray(m, dtype=float)
    t = np.asarray(t, dtype=float)
    x1 = ((-2 + (alpha + beta).real * m ** 2) * np.cos(t) + (beta - alpha).imag * m ** 2 * np.sin(t)
          + 2 * r1 * m * np.log(m)) / (2 * m)
    x2 = ((-2 + (alpha - beta).real * m ** 2) * np.sin(t) + (alpha + beta).imag * m ** 2 * np.cos(t)
          + 2 * r2 * m * np.log(m)) / (2 * m)
    return np.stack([x1, x2, np.log(m) * np.ones_like(t)])


# ----------------------------------------------------------------------------
# torus period


def torus_w_squared(a, z):
    return (z - a) * (a * z - 1) / z


def torus_cut_integrals(a, cfg: QuadratureConfig = DEFAULT):
    """``(I0, I1) = (\\int_0^a dz/|w|, \\int_0^a dz/(z|w|))``; w is real on (0, a)."""
    # |w|^2 = (a - z)(1 - a z)/z; offsets keep both endpoint factors exact
    I0 = integrate_improper(lambda x, l, r: np.sqrt(l / (r * (1 - a * x))), (0.0, a), cfg=cfg, offsets=True)
    I1 = integrate_improper(lambda x, l, r: 1 / np.sqrt(l * r * (1 - a * x)), (0.0, a), cfg=cfg, offsets=True)
    return I0.value, I1.value


def torus_generators(a, n=256):
    """Loops around the cuts [0, a] and [a, 1/a]."""
    dom = EllipticCurve(a)
    delta = 0.5 * min(a, 1 / a - a)
    g1 = PathSpec.circle(dom, a / 2, a / 2 + delta, n=n, start_angle=np.pi / 2)
    c2 = 0.5 * (a + 1 / a)
    g2 = PathSpec.circle(dom, c2, 0.5 * (1 / a - a) + delta, n=n, start_angle=np.pi / 2)
    return g1, g2


@dataclass
class TorusPeriod:
    a: float
    b: float
    residual_gamma1: float
    real_period_gamma2: float
    ratio_displayed: float  # -2 I1 / I0
    ratio_reciprocal: float  # -2 I0 / I1
    matches: str

    def to_dict(self):
        return dict(self.__dict__)


def torus_period_b(a, cfg: QuadratureConfig = DEFAULT, full: bool = False):
    """The unique ``b`` killing the real periods of ``Phi_2`` on the torus.

    The gamma_1 period collapses onto the cut ``[0, a]``, giving
    ``2 (2 I0 + b I1)`` with the improper integrals of
    :func:`torus_cut_integrals`; the root in ``[-2, 0]`` is bracketed and
    the residual is re-checked by contour quadrature on both generators.
    """
    a = float(a)
    if not 0 < a < 1:
        raise InvalidParameters("torus parameter a must lie in (0, 1)")
    I0, I1 = torus_cut_integrals(a, cfg)

    def cut_period(b):
        return 2 * (2 * I0 + b * I1)

    lo, hi = -2.0, 0.0
    if cut_period(lo) * cut_period(hi) > 0:
        raise RootNotBracketed("gamma_1 period does not change sign on [-2, 0]")
    b = brentq(cut_period, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    if not full:
        return b
    wd = torus_data(a, b)
    g1, g2 = torus_generators(a)
    p1, p2 = complex_periods(wd, (g1, g2), cfg)
    disp, recip = -2 * I1 / I0, -2 * I0 / I1
    match = "reciprocal" if abs(recip - b) < abs(disp - b) else "displayed"
    return TorusPeriod(a, b, float(abs(p1[1].real)), float(abs(p2[1].real)), disp, recip, match)


# ----------------------------------------------------------------------------
# family data


def _cayley(zeta):
    return (1 + zeta) / (1 - zeta)


def plane_data():
    def phi(z, w):
        one = np.ones_like(z)
        return np.stack([one, 1j * one, 0 * one])

    def dphi(z, w):
        return np.zeros((3,) + np.shape(z), dtype=complex)

    return WeierstrassData(PuncturedPlane(()), phi, dphi, name="plane")


def graph_data(coeffs):
    """``X = (Re z, Im z, Re F(z))`` with ``F = sum c_k z^k``."""
    c = np.asarray(coeffs, dtype=complex)
    P = np.polynomial.Polynomial(c)
    dP, d2P = P.deriv(1), P.deriv(2)

    def phi(z, w):
        one = np.ones_like(z)
        return np.stack([one, -1j * one, dP(z)])

    def dphi(z, w):
        zero = np.zeros_like(z)
        return np.stack([zero, zero, d2P(z) + zero])

    return WeierstrassData(PuncturedPlane(()), phi, dphi, name="graph"), P


def helicoid_y1_data():
    def phi(z, w):
        e = np.exp(z)
        return np.stack([e, 1j * e, 1j * np.ones_like(z)])

    def dphi(z, w):
        e = np.exp(z)
        return np.stack([e, 1j * e, np.zeros_like(z)])

    return WeierstrassData(PuncturedPlane(()), phi, dphi, name="helicoid_y1")


def helicoid_y2_data():
    """Half-plane data pulled back to the unit disk by ``z = (1+s)/(1-s)``."""

    def phi(s, w):
        z = _cayley(s)
        dz = 2 / (1 - s) ** 2
        return np.stack([np.cosh(z) * dz, 1j * np.sinh(z) * dz, 1j * dz])

    def dphi(s, w):
        z = _cayley(s)
        dz = 2 / (1 - s) ** 2
        d2z = 4 / (1 - s) ** 3
        return np.stack([
            np.sinh(z) * dz ** 2 + np.cosh(z) * d2z,
            1j * np.cosh(z) * dz ** 2 + 1j * np.sinh(z) * d2z,
            1j * d2z,
        ])

    return WeierstrassData(UnitDisk(), phi, dphi, name="helicoid_y2")


def rotational_data(b):
    b = complex(b)

    def phi(z, w):
        q = b / z ** 2
        return np.stack([1 - q, 1j * (1 + q), 1 / z])

    def dphi(z, w):
        q = 2 * b / z ** 3
        return np.stack([q, -1j * q, -1 / z ** 2])

    laurent = {
        "0": {-2: (-b, 1j * b, 0), -1: (0, 0, 1), 0: (1, 1j, 0)},
        "inf": {-2: (-1, -1j, 0), -1: (0, 0, -1), 0: (b, -1j * b, 0)},
    }
    return WeierstrassData(PuncturedPlane((0j,)), phi, dphi, laurent, name="rotational")


def horn_data(r1, r2):
    r1, r2 = float(r1), float(r2)

    def phi(z, w):
        u = 1 / z
        return np.stack([1 + r1 * u, -1j + r2 * u, u])

    def dphi(z, w):
        u2 = -1 / z ** 2
        return np.stack([r1 * u2, r2 * u2, u2])

    laurent = {
        "0": {-1: (r1, r2, 1), 0: (1, -1j, 0)},
        "inf": {-2: (-1, 1j, 0), -1: (-r1, -r2, -1)},
    }
    return WeierstrassData(PuncturedPlane((0j,)), phi, dphi, laurent, name="horn")


def catenoid_coeffs(alpha, beta):
    alpha, beta = complex(alpha), complex(beta)
    A = (alpha + np.conj(beta)) / 2
    B = (alpha - np.conj(beta)) / 2j
    return A, B


def catenoid_data(alpha, beta, r1=0.0, r2=0.0):
    A, B = catenoid_coeffs(alpha, beta)
    r1, r2 = float(r1), float(r2)

    def phi(z, w):
        u = 1 / z
        u2 = u * u
        return np.stack([u2 + r1 * u + A, 1j * u2 + r2 * u + B, u])

    def dphi(z, w):
        u = 1 / z
        u2, u3 = u * u, u * u * u
        return np.stack([-2 * u3 - r1 * u2, -2j * u3 - r2 * u2, -u2])

    laurent = {
        "0": {-2: (1, 1j, 0), -1: (r1, r2, 1), 0: (A, B, 0)},
        "inf": {-2: (-A, -B, 0), -1: (-r1, -r2, -1), 0: (-1, -1j, 0)},
    }
    return WeierstrassData(PuncturedPlane((0j,)), phi, dphi, laurent, name="catenoid")


def _flujo_num(k, z2):
    return 6 + k + (12 - 2 * k) * z2 + (k - 2) * z2 * z2


def flujo_data(b, c):
    b, c = float(b), float(c)

    def phi(z, w):
        z2 = z * z
        d = z2 - 1
        return np.stack([-1j * _flujo_num(b, z2) / d ** 2, _flujo_num(c, z2) / d ** 2, 12 / d])

    def dnum(k, z):
        z2 = z * z
        return 2 * (12 - 2 * k) * z + 4 * (k - 2) * z2 * z

    def dphi(z, w):
        z2 = z * z
        d = z2 - 1

        def q(k):
            return (dnum(k, z) * d - 4 * z * _flujo_num(k, z2)) / d ** 3

        return np.stack([-1j * q(b), q(c), -24 * z / d ** 2])

    return WeierstrassData(PuncturedPlane((1 + 0j, -1 + 0j)), phi, dphi, name="flujo")


def torus_data(a, b):
    a, b = float(a), float(b)
    dom = EllipticCurve(a)

    def phi(z, w):
        z2w = z * z * w
        return np.stack([1j * (z * z - 1) / z2w, (z * z + b * z + 1) / z2w, 1 / z])

    def dphi(z, w):
        dw = a * (z * z - 1) / (2 * z * z * w)
        q1, dq1 = 1 - z ** -2, 2 * z ** -3
        q2, dq2 = 1 + b / z + z ** -2, -b / z ** 2 - 2 * z ** -3
        return np.stack([
            1j * (dq1 / w - q1 * dw / w ** 2),
            dq2 / w - q2 * dw / w ** 2,
            -1 / z ** 2,
        ])

    return WeierstrassData(dom, phi, dphi, name="torus")


def nonqc_data():
    def phi(z, w):
        return np.stack([-1j * (z + z ** -3), 1 - z ** -2, 1 / z])

    def dphi(z, w):
        return np.stack([-1j * (1 - 3 * z ** -4), 2 * z ** -3, -1 / z ** 2])

    laurent = {
        "0": {-3: (-1j, 0, 0), -2: (0, -1, 0), -1: (0, 0, 1), 0: (0, 1, 0), 1: (-1j, 0, 0)},
    }
    return WeierstrassData(PuncturedPlane((0j,)), phi, dphi, laurent, name="nonqc_y")


def contra_data():
    def phi(z, w):
        one = np.ones_like(z)
        return np.stack([one, 1j * one, -1 / z ** 2])

    def dphi(z, w):
        zero = np.zeros_like(z)
        return np.stack([zero, zero, 2 / z ** 3])

    laurent = {"0": {-2: (0, 0, -1), 0: (1, 1j, 0)}, "inf": {-2: (-1, -1j, 0), 0: (0, 0, 1)}}
    return WeierstrassData(PuncturedPlane((0j,)), phi, dphi, laurent, name="remark_contra")


# ----------------------------------------------------------------------------
# closed forms  X(z) as arrays (3, ...)


def _closed_forms(name, p):
    if name == "plane":
        return lambda z, w=None: np.stack([z.real, -z.imag, 0 * z.real])
    if name == "graph":
        P = np.polynomial.Polynomial(np.asarray(p.get("coeffs", [0, 0, 1]), dtype=complex))
        return lambda z, w=None: np.stack([z.real, z.imag, P(z).real])
    if name == "helicoid_y1":
        return lambda z, w=None: np.stack([np.exp(z).real, (1j * np.exp(z)).real, (1j * z).real])
    if name == "helicoid_y2":
        def f(s, w=None):
            z = _cayley(s)
            return np.stack([np.sinh(z).real, (1j * np.cosh(z)).real, (1j * z).real])
        return f
    if name == "rotational":
        b = complex(p.get("b", 0.25))
        return lambda z, w=None: np.stack([(z + b / z).real, (1j * (z - b / z)).real, np.log(np.abs(z))])
    if name == "horn":
        r1, r2 = float(p.get("r1", 0)), float(p.get("r2", 0))
        return lambda z, w=None: np.stack([
            r1 * np.log(np.abs(z)) + z.real, r2 * np.log(np.abs(z)) + z.imag, np.log(np.abs(z))])
    if name == "catenoid":
        A, B = catenoid_coeffs(p["alpha"], p["beta"])
        r1, r2 = float(p.get("r1", 0)), float(p.get("r2", 0))
        return lambda z, w=None: np.stack([
            (-1 / z + A * z).real + r1 * np.log(np.abs(z)),
            (-1j / z + B * z).real + r2 * np.log(np.abs(z)),
            np.log(np.abs(z)),
        ])
    if name == "flujo":
        b, c = float(p["b"]), float(p["c"])
        return lambda z, w=None: np.stack([
            (z * (b - 2 - 8 / (z * z - 1))).imag,
            (z * (c - 2 - 8 / (z * z - 1))).real,
            6 * np.log(np.abs((z - 1) / (z + 1))),
        ])
    if name == "nonqc_y":
        return lambda z, w=None: np.stack([
            ((-1 + z ** 4) / (2 * z * z)).imag, (1 / z + z).real, np.log(np.abs(z))])
    if name == "remark_contra":
        return lambda z, w=None: np.stack([z.real, (1j * z).real, (1 / z).real])
    return None


# ----------------------------------------------------------------------------


def _unit_circle(dom, n=64):
    return (PathSpec.circle(dom, 0j, 1.0, n=n),)


def weierstrass_data(spec: FamilySpec):
    """Weierstrass data for a spec without applying the validity predicate."""
    return _build(spec, check=False).wd


def _build(spec: FamilySpec, check: bool, cfg: QuadratureConfig = DEFAULT):
    name, p = spec.family, dict(spec.params)
    valid, reason = True, ""
    extra = {}
    genus = 0
    if name == "plane":
        wd = plane_data()
        gens = ()
        sampler = BoxSampler((-5, 5), (-5, 5), 50, 50)
    elif name == "graph":
        coeffs = p.setdefault("coeffs", [0, 0, 1])
        wd, _ = graph_data(coeffs)
        gens = ()
        sampler = BoxSampler((-5, 5), (-5, 5), 100, 100)
    elif name == "helicoid_y1":
        wd = helicoid_y1_data()
        gens = ()
        sampler = BoxSampler((-8, 8), (-8, 8), 100, 100)
    elif name == "helicoid_y2":
        wd = helicoid_y2_data()
        gens = ()
        sampler = DiskSampler(100, 100)
    elif name == "rotational":
        b = complex(p.setdefault("b", 0.25))
        wd = rotational_data(b)
        valid = rotational_valid(b)
        reason = "" if valid else f"b = {b} lies on the negative real axis"
        gens = _unit_circle(wd.domain)
        sampler = default_sampler(wd.domain)
    elif name == "horn":
        r1, r2 = float(p.setdefault("r1", 0.0)), float(p.setdefault("r2", 0.0))
        wd = horn_data(r1, r2)
        gens = _unit_circle(wd.domain)
        sampler = default_sampler(wd.domain)
    elif name == "catenoid":
        alpha = complex(p.setdefault("alpha", -3 + 3j))
        beta = complex(p.setdefault("beta", -1 - 1j))
        r1, r2 = float(p.setdefault("r1", 0.0)), float(p.setdefault("r2", 0.0))
        wd = catenoid_data(alpha, beta, r1, r2)
        valid = omega_member(alpha, beta)
        reason = "" if valid else f"(alpha, beta) = ({alpha}, {beta}) is not in Omega"
        gens = _unit_circle(wd.domain)
        sampler = default_sampler(wd.domain)
    elif name == "flujo":
        b, c = float(p.setdefault("b", 4.0)), float(p.setdefault("c", 0.0))
        wd = flujo_data(b, c)
        valid = flujo_valid(b, c)
        reason = "" if valid else "need b > 3 and c < 2"
        dom = wd.domain
        gens = (PathSpec.circle(dom, 1.0, 0.5, n=64), PathSpec.circle(dom, -1.0, 0.5, n=64))
        sampler = UnionSampler((
            BoxSampler((-10, 10), (-10, 10), 200, 200),
            LogPolarSampler((-6.0, np.log(0.5)), 50, 64, 1 + 0j),
            LogPolarSampler((-6.0, np.log(0.5)), 50, 64, -1 + 0j),
            LogPolarSampler((2.0, 6.0), 30, 64),
        ))
    elif name == "torus":
        a = float(p.setdefault("a", 0.5))
        if not 0 < a < 1:
            raise InvalidParameters("torus parameter a must lie in (0, 1)")
        b_given = p.get("b")
        b_star = torus_period_b(a, cfg)
        b = b_star if b_given is None else float(b_given)
        p["b"] = b
        extra["b_period"] = b_star
        wd = torus_data(a, b)
        if abs(b - b_star) > 1e-8:
            valid, reason = False, f"b = {b} differs from the period solution b(a) = {b_star}"
        gens = torus_generators(a)
        genus = 1
        sampler = default_sampler(wd.domain)
    elif name == "nonqc_y":
        wd = nonqc_data()
        gens = _unit_circle(wd.domain)
        sampler = default_sampler(wd.domain)
    elif name == "remark_contra":
        wd = contra_data()
        gens = _unit_circle(wd.domain)
        sampler = default_sampler(wd.domain)
    else:  # pragma: no cover - FamilySpec validates names
        raise InvalidParameters(name)
    if check and not valid:
        raise InvalidParameters(reason)
    spec = FamilySpec(name, p)
    cf = _closed_forms(name, p)
    dom = wd.domain
    if isinstance(dom, EllipticCurve):
        base = SurfacePoint(1.0, complex(dom.principal_w(1.0)))
        base_value = (0.0, 0.0, 0.0)
    else:
        z0 = {"plane": 0j, "graph": 0j, "helicoid_y1": 0j, "helicoid_y2": 0j, "flujo": 1j}.get(name, 1 + 0j)
        base = SurfacePoint(z0)
        base_value = tuple(cf(np.array(z0)).ravel()) if cf is not None else (0.0, 0.0, 0.0)
    imm = Immersion(wd, base, base_value, cf)
    charts = default_end_charts(dom)
    return Family(spec, wd, imm, cf, tuple(gens), charts, genus, sampler, valid, reason, extra)


def make_family(spec, cfg: QuadratureConfig = DEFAULT, check: bool = True) -> Family:
    """Build a family; raises :class:`InvalidParameters` when invalid."""
    if isinstance(spec, dict):
        spec = FamilySpec.from_json(spec)
    return _build(spec, check, cfg)
