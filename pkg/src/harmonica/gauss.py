"""Gauss map, complex Gauss map and the (lambda, eta, mu) decomposition.

With ``g`` the stereographic projection of the unit normal from the north
pole, ``lambda = phi3 (1 + |g|^2) / (2|g|)`` and ``eta = sqrt(lambda^2 - h)``
on the branch with ``Re(eta conj(lambda)) >= 0``; the triple rebuilds
``phi`` and gives the Beltrami coefficient of ``g``.  Near ``g in {0, inf}``
the data are first rotated by a quarter turn about the x-axis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import cross_im, eval_phi, hopf_of, klotz_of, wedge_norm
from .errors import DegeneratePoint, EmptySampler
from .surfaces import continue_w, coords, is_curve

# quarter turn about the x-axis: (x, y, z) -> (x, -z, y)
R_X = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
G_BAND = (1e-3, 1e3)
DEGENERATE_TOL = 1e-14


def rotate(R, v):
    """Apply a 3x3 matrix (or a stack ``(..., 3, 3)``) to vectors on axis 0."""
    R = np.asarray(R)
    if R.ndim == 2:
        return np.tensordot(R, v, axes=(1, 0))
    return np.einsum("...ij,j...->i...", R, v)


def normal_of(phi, where=None):
    c = cross_im(phi)
    n = np.linalg.norm(c, axis=0)
    bad = n <= DEGENERATE_TOL * klotz_of(phi)
    if np.any(bad):
        raise DegeneratePoint("immersion condition fails: normal undefined", where=where)
    return c / n


def stereo(N):
    """Projection from the north pole; ``inf`` at ``N = (0, 0, 1)``."""
    N1, N2, N3 = N
    num = N1 + 1j * N2
    with np.errstate(divide="ignore", invalid="ignore"):
        south = num / (1 - N3)
        north = (1 + N3) / np.conj(num)
    g = np.where(N3 <= 0, south, north)
    return np.where((N3 >= 1) | ~np.isfinite(g), complex(np.inf), g)


def gauss_map(wd, P, w=None):
    phi = eval_phi(wd, P, w)
    return normal_of(phi, where=P)


def complex_gauss(wd, P, w=None):
    return stereo(gauss_map(wd, P, w))


def g_identity_residual(phi, g):
    """``|2Re(g) phi1 + 2Im(g) phi2 + (|g|^2 - 1) phi3| / (1 + |g|^2)``."""
    a = np.abs(g) ** 2
    r = 2 * g.real * phi[0] + 2 * g.imag * phi[1] + (a - 1) * phi[2]
    return np.abs(r) / (1 + a)


def beltrami_magnitude_of(phi):
    k = klotz_of(phi)
    s = wedge_norm(phi)
    return np.abs(hopf_of(phi)) / (k + s)


def beltrami_magnitude(wd, P, w=None):
    phi = eval_phi(wd, P, w)
    normal_of(phi, where=P)
    return beltrami_magnitude_of(phi)


def distortion_of(phi):
    return klotz_of(phi) / wedge_norm(phi)


def distortion(wd, P, w=None):
    phi = eval_phi(wd, P, w)
    normal_of(phi, where=P)
    return distortion_of(phi)


@dataclass
class GaussFrame:
    N: np.ndarray
    g: np.ndarray
    rotated: np.ndarray
    g_rot: np.ndarray
    phi_rot: np.ndarray
    hopf: np.ndarray
    lam: np.ndarray
    eta: np.ndarray
    mu: np.ndarray
    distortion: np.ndarray

    @property
    def rotation(self):
        """Per-point rotation matrices (identity or the quarter turn)."""
        eye = np.eye(3)
        return np.where(np.asarray(self.rotated)[..., None, None], R_X, eye)


def _rotated_g(phi, rotated):
    phi_r = np.where(rotated, rotate(R_X, phi), phi)
    return stereo(normal_of(phi_r)), phi_r


def decompose(phi, rotated=None):
    """(g, lambda, eta) in the admissible frame; ``rotated`` may be forced."""
    N = normal_of(phi)
    g = stereo(N)
    if rotated is None:
        ag = np.abs(g)
        rotated = ~((ag >= G_BAND[0]) & (ag <= G_BAND[1]))
    gr, phi_r = _rotated_g(phi, rotated)
    ag = np.abs(gr)
    h = hopf_of(phi_r)
    lam = phi_r[2] * (1 + ag ** 2) / (2 * ag)
    eta = np.sqrt(lam * lam - h)
    eta = np.where((eta * np.conj(lam)).real >= 0, eta, -eta)
    return N, g, rotated, gr, phi_r, h, lam, eta


def rebuild_phi(g, lam, eta):
    """Weierstrass data from ``(g, lambda, eta)``."""
    ag = np.abs(g)
    c = (1 - ag ** 2) / (ag * (1 + ag ** 2))
    return np.stack([
        g.real * c * lam - 1j * g.imag / ag * eta,
        g.imag * c * lam + 1j * g.real / ag * eta,
        2 * ag / (1 + ag ** 2) * lam,
    ])


def frame(wd, P, w=None, rotated=None, fd_step=1e-6):
    """Full Gauss frame, including the complex Beltrami coefficient.

    ``d g/dz`` is taken by centred differences of the (rotated) Gauss map;
    the phase factor ``conj(g_z)/g_z`` is the only place it enters.
    """
    z, w = coords(wd.domain, P, w)
    phi = np.asarray(wd.phi(z, w), dtype=complex)
    N, g, rot, gr, phi_r, h, lam, eta = decompose(phi, rotated)
    hstep = fd_step * np.maximum(np.abs(z), 1.0)
    crit = np.array(wd.domain.critical_points(), dtype=complex)
    if crit.size:
        d = np.min(np.abs(np.asarray(z)[..., None] - crit), axis=-1)
        hstep = np.minimum(hstep, 1e-3 * d)

    def g_at(dz):
        zz = z + dz
        ww = None if w is None else continue_w(wd.domain, z, w, zz)
        return _rotated_g(np.asarray(wd.phi(zz, ww), dtype=complex), rot)[0]

    gx = (g_at(hstep) - g_at(-hstep)) / (2 * hstep)
    gy = (g_at(1j * hstep) - g_at(-1j * hstep)) / (2 * hstep)
    gz = 0.5 * (gx - 1j * gy)
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = -gr * (lam - eta) / (np.conj(gr) * (lam + eta)) * (np.conj(gz) / gz)
    mu = np.where(np.isfinite(mu), mu, 0j)
    dist = (np.abs(lam) ** 2 + np.abs(eta) ** 2) / (2 * (np.conj(lam) * eta).real)
    return GaussFrame(N, g, rot, gr, phi_r, h, lam, eta, mu, dist)


# ----------------------------------------------------------------------------
# QC indices


@dataclass
class QCIndices:
    shell_ratio: list
    shell_mu: list
    sup_ratio: float
    i_upper: float
    i_lower: float
    chain_ok: bool

    def to_dict(self):
        return {
            "shell_sup_ratio": [float(x) for x in self.shell_ratio],
            "shell_sup_mu": [float(x) for x in self.shell_mu],
            "sup_ratio": float(self.sup_ratio),
            "i_upper": float(self.i_upper),
            "i_lower": float(self.i_lower),
            "chain_ok": bool(self.chain_ok),
            "tolerance": 1e-3,
        }


def shell_points(chart, radius, n_theta=64):
    """Points ``|u| = radius`` in an end chart, mapped to ``(z, w)``."""
    u = radius * np.exp(2j * np.pi * (np.arange(n_theta) + 0.5) / n_theta)
    return chart.to_surface(u)


def qc_indices(wd, shells, tol=1e-3):
    """Shell suprema of ``|h|/|phi|^2`` and ``|mu|``.

    ``shells`` is a sequence of ``(z, w)`` pairs ordered towards the ends;
    the deepest shell supplies the limit estimates.
    """
    shells = list(shells)
    if not shells:
        raise EmptySampler("qc_indices needs at least one shell")
    ratio, mus = [], []
    for z, w in shells:
        with np.errstate(over="ignore", invalid="ignore"):
            phi = np.asarray(wd.phi(np.asarray(z), w), dtype=complex)
            r = np.abs(hopf_of(phi)) / klotz_of(phi)
            m = beltrami_magnitude_of(phi)
        ok = np.isfinite(r) & np.isfinite(m)  # overflow at essential singularities
        if not np.any(ok):
            raise EmptySampler("no finite samples on a shell")
        ratio.append(float(np.max(r[ok])))
        mus.append(float(np.max(m[ok])))
    i_up, i_lo = ratio[-1], mus[-1]
    chain = (i_lo <= i_up + tol) and (i_up <= 2 * i_lo / (1 + i_lo ** 2) + tol)
    return QCIndices(ratio, mus, max(ratio), i_up, i_lo, chain)
