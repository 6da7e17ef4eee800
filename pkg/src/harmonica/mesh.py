"""Triangle meshes of immersions and OBJ/PLY/CSV writers."""
from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .core import cross_im, klotz_of, margin_of, evaluate_immersion
from .curvature import curvature_of
from .errors import DegeneratePoint, HarmonicaError
from .gauss import beltrami_magnitude_of, distortion_of, normal_of
from .quadrature import gauss_legendre
from .surfaces import EllipticCurve, PathSpec, SurfacePoint, continue_w, is_curve


class MeshIOError(HarmonicaError, OSError):
    pass


@dataclass
class SurfaceMesh:
    vertices: np.ndarray
    normals: np.ndarray
    faces: np.ndarray
    vertex_fields: dict = field(default_factory=dict)
    params: Optional[np.ndarray] = None  # chart coordinate per vertex
    branches: Optional[np.ndarray] = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.normals = np.asarray(self.normals, dtype=float).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)

    def validate(self):
        n = len(self.vertices)
        if not np.all(np.isfinite(self.vertices)):
            raise ValueError("non-finite vertex coordinates")
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= n):
            raise ValueError("face index out of range")
        if np.any(np.abs(np.linalg.norm(self.normals, axis=1) - 1) > 1e-6):
            raise ValueError("normals are not unit vectors")
        for k, v in self.vertex_fields.items():
            if len(v) != n:
                raise ValueError(f"field {k} has wrong length")
        return True

    def area(self):
        v = self.vertices
        a, b, c = v[self.faces[:, 0]], v[self.faces[:, 1]], v[self.faces[:, 2]]
        return 0.5 * float(np.sum(np.linalg.norm(np.cross(b - a, c - a), axis=1)))


@dataclass(frozen=True)
class LogPolarGrid:
    """Grid ``zeta = exp(rho + i theta)`` mapped to the chart by ``moebius``."""

    rho_min: float = -3.0
    rho_max: float = 3.0
    n_rho: int = 64
    n_theta: int = 64
    moebius: Optional[tuple] = None  # (a, b, c, d): z = (a zeta + b)/(c zeta + d)
    theta_offset: float = 0.0
    center: complex = 0j

    def rho(self):
        return np.linspace(self.rho_min, self.rho_max, self.n_rho)

    def theta(self):
        return self.theta_offset + 2 * np.pi * np.arange(self.n_theta) / self.n_theta

    def zeta(self):
        R, T = np.meshgrid(self.rho(), self.theta(), indexing="ij")
        return np.exp(R + 1j * T)

    def to_chart(self, zeta):
        if self.moebius is None:
            return self.center + zeta
        a, b, c, d = self.moebius
        return (a * zeta + b) / (c * zeta + d)

    def points(self):
        return self.to_chart(self.zeta())


def flujo_grid(n_rho=65, n_theta=64, rho_max=3.0):
    """Grid for the three-ended family: ``z = (1 + zeta)/(1 - zeta)``.

    The circle ``rho = 0`` maps onto the imaginary axis; the half-step theta
    offset keeps vertices away from ``zeta = 1`` (the end at infinity).
    """
    if n_rho % 2 == 0:
        n_rho += 1
    return LogPolarGrid(-rho_max, rho_max, n_rho, n_theta, (1, 1, -1, 1), np.pi / n_theta)


def grid_faces(n_rho, n_theta, periodic=True):
    faces = []
    cols = n_theta if periodic else n_theta - 1
    for i in range(n_rho - 1):
        for j in range(cols):
            j1 = (j + 1) % n_theta
            a, b = i * n_theta + j, i * n_theta + j1
            c, d = (i + 1) * n_theta + j, (i + 1) * n_theta + j1
            faces.append((a, c, d))
            faces.append((a, d, b))
    return np.array(faces, dtype=np.int64).reshape(-1, 3)


# ----------------------------------------------------------------------------
# vertex positions


def edge_integrals(wd, za, wa, zb, n=16):
    """``\\int_{za}^{zb} Phi`` on straight segments, vectorised (GL-n)."""
    x, wt = gauss_legendre(n)
    za = np.asarray(za, dtype=complex)
    zb = np.asarray(zb, dtype=complex)
    mid, half = 0.5 * (za + zb), 0.5 * (zb - za)
    z = mid[..., None] + half[..., None] * x
    w = None
    if wa is not None:
        w = continue_w(wd.domain, za[..., None], np.asarray(wa)[..., None], z)
    vals = np.asarray(wd.phi(z, w), dtype=complex)
    return np.sum(vals * wt, axis=-1) * half


def _integrate_sweep(wd, Z, W, start, X0, substeps=4):
    """Positions on a (rho, theta) grid by a spanning-tree sweep.

    The tree is the theta column through ``start`` plus every rho-row.
    Each tree edge is split into ``substeps`` straight GL-16 pieces.
    """
    n_r, n_t = Z.shape
    i0, j0 = start
    X = np.full((3,) + Z.shape, np.nan)
    X[:, i0, j0] = X0

    def step(za, wa, zb):
        acc = 0
        t = np.linspace(0, 1, substeps + 1)
        for k in range(substeps):
            a = za + (zb - za) * t[k]
            b = za + (zb - za) * t[k + 1]
            wa_k = None if wa is None else continue_w(wd.domain, za, wa, a)
            acc = acc + edge_integrals(wd, a, wa_k, b)
        return acc.real

    for rng in (range(i0 + 1, n_r), range(i0 - 1, -1, -1)):
        for i in rng:
            p = i - 1 if i > i0 else i + 1
            X[:, i, j0] = X[:, p, j0] + step(Z[p, j0], None if W is None else W[p, j0], Z[i, j0])
    for rng in (range(j0 + 1, n_t), range(j0 - 1, -1, -1)):
        for j in rng:
            q = j - 1 if j > j0 else j + 1
            X[:, :, j] = X[:, :, q] + step(Z[:, q], None if W is None else W[:, q], Z[:, j])
    return X


def _fields(phi, dphi):
    out = {"margin": margin_of(phi) / klotz_of(phi), "distortion": distortion_of(phi),
           "abs_mu": beltrami_magnitude_of(phi)}
    if dphi is not None:
        out = {"K": curvature_of(phi, dphi).K, **out}
    return out


def _fd_normals(f, z, h=1e-5):
    """Unit normals from centred differences of a position map ``f(z)``."""
    hs = h * np.maximum(1.0, np.abs(z))
    Xu = (f(z + hs) - f(z - hs)) / (2 * hs)
    Xv = (f(z + 1j * hs) - f(z - 1j * hs)) / (2 * hs)
    n = np.cross(Xu, Xv, axis=0)
    return n / np.linalg.norm(n, axis=0)


def sample_mesh(fam, grid: LogPolarGrid = None, fields: bool = True):
    """Mesh a catalog family (or any object with ``wd``, ``immersion`` and
    ``closed_form``) on a log-polar parameter grid.

    Positions come from the closed form when available, otherwise from a
    spanning-tree integration sweep.  Normals are computed from the
    positions (difference quotients of the closed form, or ``X_u x X_v``
    with ``X_u = Re phi``, ``X_v = -Im phi``), independently of the Gauss
    map formula used elsewhere.
    """
    wd = fam.wd
    if is_curve(wd.domain):
        return sample_torus_mesh(fam, grid, fields)
    grid = grid or LogPolarGrid()
    Z = grid.points()
    if not np.all(wd.domain.contains(Z)):
        raise DegeneratePoint("grid leaves the domain", where=Z[~wd.domain.contains(Z)][:1])
    phi = np.asarray(wd.phi(Z, None), dtype=complex)
    cf = fam.closed_form
    if cf is not None:
        X = cf(Z)
        N = _fd_normals(lambda z: cf(z), Z)
    else:
        j0 = 0
        i0 = int(np.argmin(np.abs(grid.rho())))
        X0 = evaluate_immersion(fam.immersion, SurfacePoint(Z[i0, j0]))
        X = _integrate_sweep(wd, Z, None, (i0, j0), X0)
        a, b = phi.real, -phi.imag
        n = np.cross(a, b, axis=0)
        N = n / np.linalg.norm(n, axis=0)
    _check_regular(phi, Z)
    dphi = wd.phi_prime(Z, None) if wd.phi_prime is not None else None
    vf = {k: v.ravel() for k, v in _fields(phi, dphi).items()} if fields else {}
    mesh = SurfaceMesh(X.reshape(3, -1).T, N.reshape(3, -1).T, grid_faces(grid.n_rho, grid.n_theta),
                       vf, params=Z.ravel())
    return mesh


def _check_regular(phi, Z, W=None):
    s = np.linalg.norm(cross_im(phi), axis=0)
    bad = s <= 1e-14 * klotz_of(phi)
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        raise DegeneratePoint(f"degenerate vertex at grid index {tuple(idx)}", where=Z[tuple(idx)])


# ----------------------------------------------------------------------------
# torus


def torus_grid(a, n_rho=96, n_theta=96, margin=2.5):
    """Log-polar grid symmetric under ``z -> 1/z`` with both branch points
    ``log a`` and ``-log a`` at the centre of a rho-cell."""
    L = -np.log(a)
    half = L + margin
    # rho nodes at (k + 1/2) h on both sides, so +-L sit mid-cell when L/h is integral
    k = max(int(np.ceil(L / (2 * half / n_rho))), 1)
    h = L / k
    m = int(np.ceil(half / h))
    return LogPolarGrid(-(m - 0.5) * h, (m - 0.5) * h, 2 * m, n_theta, None, 0.0)


def _theta_continued_w(dom, Z):
    """Sheet values continued in theta from theta = pi along every rho-row."""
    n_r, n_t = Z.shape
    W = np.empty_like(Z)
    jpi = n_t // 2
    W[0, jpi] = np.sqrt(dom.w_squared(Z[0, jpi]))
    for i in range(1, n_r):
        W[i, jpi] = continue_w(dom, Z[i - 1, jpi], W[i - 1, jpi], Z[i, jpi])
    for rng in (range(jpi + 1, n_t), range(jpi - 1, -1, -1)):
        for j in rng:
            q = j - 1 if j > jpi else j + 1
            W[:, j] = continue_w(dom, Z[:, q], W[:, q], Z[:, j])
    return W


def sample_torus_mesh(fam, grid=None, fields=True, weld_tol=1e-8):
    """Two sheets on ``theta in [0, 2 pi]`` welded along the seam theta = 0.

    The sheet values are continued from theta = pi, the second sheet is the
    image under ``J(z, w) = (z, -w)`` and satisfies
    ``X o J = diag(-1, -1, 1) X + c``.  Seam vertices are merged by
    proximity; the small loops left at the branch points are fan-filled.
    """
    wd = fam.wd
    dom: EllipticCurve = wd.domain
    grid = grid or torus_grid(dom.a)
    rho = grid.rho()
    th = np.linspace(0, 2 * np.pi, grid.n_theta + 1)
    R, T = np.meshgrid(rho, th, indexing="ij")
    Z = np.exp(R + 1j * T)
    Z[:, -1] = np.exp(rho)  # exact seam
    W = _theta_continued_w(dom, Z)
    n_r, n_t = Z.shape
    jpi = n_t // 2
    i0 = int(np.argmin(np.abs(rho)))
    # basepoint (1, w0) -> upper unit half circle -> radial to the start vertex
    arc = np.exp(1j * np.linspace(0, np.pi, 65)[1:-1])
    path = PathSpec.polyline(dom, [1.0, *arc, -1.0, Z[i0, jpi]], w0=fam.immersion.basepoint.branch)
    end_w = path.end.branch
    if abs(end_w - W[i0, jpi]) > abs(end_w + W[i0, jpi]):
        W = -W
    X0 = evaluate_immersion(fam.immersion, path.end, path)
    X = _integrate_sweep(wd, Z, W, (i0, jpi), X0)
    # X(J P) = L X(P) + c with c = (I - L) X(branch point a)
    Xa = _x_at_branch_point(fam)
    L = np.array([-1.0, -1.0, 1.0])
    c = (1 - L) * Xa
    X2 = L[:, None, None] * X + c[:, None, None]
    phi1 = np.asarray(wd.phi(Z, W), dtype=complex)
    phi2 = np.asarray(wd.phi(Z, -W), dtype=complex)
    _check_regular(phi1, Z)

    def normals(phi):
        n = np.cross(phi.real, -phi.imag, axis=0)
        return n / np.linalg.norm(n, axis=0)

    verts = np.concatenate([X.reshape(3, -1).T, X2.reshape(3, -1).T])
    norms = np.concatenate([normals(phi1).reshape(3, -1).T, normals(phi2).reshape(3, -1).T])
    params = np.concatenate([Z.ravel(), Z.ravel()])
    branches = np.concatenate([W.ravel(), -W.ravel()])
    vf = {}
    if fields:
        f1 = _fields(phi1, wd.phi_prime(Z, W))
        f2 = _fields(phi2, wd.phi_prime(Z, -W))
        vf = {k: np.concatenate([f1[k].ravel(), f2[k].ravel()]) for k in f1}
    faces1 = grid_faces(n_r, n_t, periodic=False)
    faces = np.concatenate([faces1, faces1 + n_r * n_t])
    verts, norms, faces, keep = _weld(verts, norms, faces, weld_tol)
    faces = _fill_small_holes(faces, max_len=8)
    vf = {k: v[keep] for k, v in vf.items()}
    return SurfaceMesh(verts, norms, faces, vf, params=params[keep], branches=branches[keep])


def _x_at_branch_point(fam):
    """``X`` at ``(a, 0)``: integrate from the basepoint ``z = 1`` along the
    real axis with ``z = a + t^2`` to remove the square-root singularity."""
    wd = fam.wd
    dom = wd.domain
    a = dom.a
    z_base, w_base = fam.immersion.basepoint.z, fam.immersion.basepoint.branch
    T = np.sqrt(z_base.real - a)
    x, wt = gauss_legendre(64)
    acc = np.zeros(3)
    edges = np.linspace(0.0, T, 9)
    for lo, hi in zip(edges[:-1], edges[1:]):
        t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x
        z = a + t * t
        w = continue_w(dom, z_base, w_base, z)  # principal root is continuous on (a, 1]
        vals = np.asarray(wd.phi(z, w)) * 2 * t
        acc += (np.sum(vals * wt, axis=-1) * 0.5 * (hi - lo)).real
    return np.asarray(fam.immersion.base_value) - acc


def _weld(verts, norms, faces, tol):
    tree = cKDTree(verts)
    pairs = tree.query_pairs(tol, output_type="ndarray")
    parent = np.arange(len(verts))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([find(i) for i in range(len(verts))])
    keep = np.unique(roots)
    remap = -np.ones(len(verts), dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    new_faces = remap[roots[faces]]
    ok = (new_faces[:, 0] != new_faces[:, 1]) & (new_faces[:, 1] != new_faces[:, 2]) & (new_faces[:, 0] != new_faces[:, 2])
    return verts[keep], norms[keep], new_faces[ok], keep


def boundary_loops(faces):
    """Oriented boundary loops (edges used by exactly one face)."""
    from collections import Counter, defaultdict

    und = Counter()
    for f in faces:
        for k in range(3):
            a, b = f[k], f[(k + 1) % 3]
            und[(min(a, b), max(a, b))] += 1
    nxt = defaultdict(list)
    for f in faces:
        for k in range(3):
            a, b = int(f[k]), int(f[(k + 1) % 3])
            if und[(min(a, b), max(a, b))] == 1:
                nxt[a].append(b)
    loops, seen = [], set()
    for s in list(nxt):
        if s in seen:
            continue
        loop, v = [], s
        while v not in seen and nxt.get(v):
            seen.add(v)
            loop.append(v)
            v = nxt[v][0]
        if loop:
            loops.append(loop)
    return loops


def _fill_small_holes(faces, max_len=8):
    new = [faces]
    for loop in boundary_loops(faces):
        if 3 <= len(loop) <= max_len:
            # boundary runs with the adjacent faces; reversed fan keeps orientation
            r = loop[::-1]
            new.append(np.array([(r[0], r[k], r[k + 1]) for k in range(1, len(r) - 1)], dtype=np.int64))
    return np.concatenate(new)


# ----------------------------------------------------------------------------
# writers


def _fmt(x):
    return "%.9g" % x


def obj_text(mesh: SurfaceMesh) -> str:
    out = io.StringIO()
    for v in mesh.vertices:
        out.write("v " + " ".join(_fmt(c) for c in v) + "\n")
    for n in mesh.normals:
        out.write("vn " + " ".join(_fmt(c) for c in n) + "\n")
    for f in mesh.faces + 1:
        out.write("f " + " ".join(f"{i}//{i}" for i in f) + "\n")
    return out.getvalue()


def _open(path, mode):
    try:
        return open(path, mode, newline="" if "b" not in mode else None)
    except OSError as exc:
        raise MeshIOError(f"cannot write {path}: {exc}") from exc


def export_obj(mesh: SurfaceMesh, path):
    mesh.validate()
    try:
        with _open(path, "w") as fh:
            fh.write(obj_text(mesh))
    except OSError as exc:
        raise MeshIOError(str(exc)) from exc


def export_ply(mesh: SurfaceMesh, path):
    mesh.validate()
    names = list(mesh.vertex_fields)
    header = ["ply", "format binary_little_endian 1.0", f"element vertex {len(mesh.vertices)}"]
    header += [f"property double {c}" for c in ("x", "y", "z", "nx", "ny", "nz")]
    header += [f"property double {n}" for n in names]
    header += [f"element face {len(mesh.faces)}", "property list uchar int vertex_indices", "end_header"]
    cols = [mesh.vertices, mesh.normals] + [np.asarray(mesh.vertex_fields[n], float)[:, None] for n in names]
    table = np.ascontiguousarray(np.hstack(cols), dtype="<f8")
    fdt = np.dtype([("n", "u1"), ("i", "<i4", (3,))])
    frec = np.empty(len(mesh.faces), dtype=fdt)
    frec["n"] = 3
    frec["i"] = mesh.faces
    try:
        with _open(path, "wb") as fh:
            fh.write(("\n".join(header) + "\n").encode("ascii"))
            fh.write(table.tobytes())
            fh.write(frec.tobytes())
    except OSError as exc:
        raise MeshIOError(str(exc)) from exc


def export_csv(mesh: SurfaceMesh, path):
    mesh.validate()
    names = list(mesh.vertex_fields)
    cols = [mesh.vertices, mesh.normals] + [np.asarray(mesh.vertex_fields[n], float)[:, None] for n in names]
    table = np.hstack(cols)
    try:
        with _open(path, "w") as fh:
            fh.write(",".join(["x", "y", "z", "nx", "ny", "nz"] + names) + "\n")
            for row in table:
                fh.write(",".join(_fmt(x) for x in row) + "\n")
    except OSError as exc:
        raise MeshIOError(str(exc)) from exc


def export_mesh(mesh, path, fmt=None):
    fmt = (fmt or os.path.splitext(str(path))[1].lstrip(".")).lower()
    writers = {"obj": export_obj, "ply": export_ply, "csv": export_csv}
    if fmt not in writers:
        raise MeshIOError(f"unknown mesh format {fmt!r}")
    writers[fmt](mesh, path)


def read_obj(path):
    verts, norms, faces = [], [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "vn":
                norms.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                faces.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
    return np.array(verts), np.array(norms), np.array(faces, dtype=np.int64)


def read_ply(path):
    with open(path, "rb") as fh:
        data = fh.read()
    end = data.index(b"end_header\n") + len(b"end_header\n")
    header = data[:end].decode("ascii").splitlines()
    nv = nf = 0
    props = []
    for line in header:
        p = line.split()
        if p[:2] == ["element", "vertex"]:
            nv = int(p[2])
        elif p[:2] == ["element", "face"]:
            nf = int(p[2])
        elif p[0] == "property" and p[1] == "double":
            props.append(p[2])
    table = np.frombuffer(data, dtype="<f8", count=nv * len(props), offset=end).reshape(nv, len(props))
    fdt = np.dtype([("n", "u1"), ("i", "<i4", (3,))])
    frec = np.frombuffer(data, dtype=fdt, count=nf, offset=end + table.nbytes)
    return props, table, frec["i"].astype(np.int64)
