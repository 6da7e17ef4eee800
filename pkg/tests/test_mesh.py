import numpy as np
import pytest

from harmonica.catalog import FamilySpec, make_family
from harmonica.core import evaluate_immersion
from harmonica.mesh import (LogPolarGrid, MeshIOError, SurfaceMesh, boundary_loops, export_csv, export_mesh,
                            export_obj, export_ply, flujo_grid, grid_faces, read_obj, read_ply, sample_mesh,
                            torus_grid)


@pytest.fixture(scope="module")
def horn_mesh():
    fam = make_family(FamilySpec("horn", {}))
    return sample_mesh(fam, LogPolarGrid(-3.0, 3.0, 128, 128))


def test_horn_height_equals_rho(horn_mesh):
    rho = np.log(np.abs(horn_mesh.params))
    assert np.max(np.abs(horn_mesh.vertices[:, 2] - rho)) < 1e-12
    assert horn_mesh.validate()
    assert set(horn_mesh.vertex_fields) >= {"K", "distortion", "abs_mu", "margin"}


def test_rotationally_symmetric_catenoid():
    fam = make_family(FamilySpec("catenoid", {"alpha": -1.0, "beta": 0.0}))
    n_t = 64
    m = sample_mesh(fam, LogPolarGrid(-2.0, 2.0, 33, n_t), fields=False)
    V = m.vertices.reshape(33, n_t, 3)
    step = 2 * np.pi / n_t
    c, s = np.cos(step), np.sin(step)
    for sign in (1, -1):
        R = np.array([[c, -sign * s, 0], [sign * s, c, 0], [0, 0, 1]])
        err = np.max(np.abs(V @ R.T - np.roll(V, -1, axis=1)))
        if err < 1e-8:
            break
    assert err < 1e-8


def test_area_converges_under_refinement():
    fam = make_family(FamilySpec("catenoid", {}))
    a1 = sample_mesh(fam, LogPolarGrid(-2.0, 2.0, 64, 64), fields=False).area()
    a2 = sample_mesh(fam, LogPolarGrid(-2.0, 2.0, 128, 128), fields=False).area()
    assert abs(a2 - a1) / a2 < 0.01


def test_sweep_positions_match_path_integrals():
    # rotational data has a closed form; compare the sweep route by dropping it
    fam = make_family(FamilySpec("rotational", {}))
    cf = fam.closed_form
    fam.closed_form = None
    m = sample_mesh(fam, LogPolarGrid(-1.0, 1.0, 17, 32), fields=False)
    assert np.max(np.abs(m.vertices - cf(m.params).T)) < 1e-9
    i = 100
    assert np.allclose(m.vertices[i], evaluate_immersion(fam.immersion, m.params[i]), atol=1e-9)


def test_flujo_axis_vertices():
    fam = make_family(FamilySpec("flujo", {}))
    m = sample_mesh(fam, flujo_grid(33, 32), fields=False)
    axis = np.abs(m.params.real) < 1e-12
    assert axis.sum() == 32
    assert np.max(np.abs(m.vertices[axis][:, 1:])) < 1e-8


def test_torus_mesh_is_closed_up_to_rims():
    fam = make_family(FamilySpec("torus", {}))
    m = sample_mesh(fam, torus_grid(0.5, 48, 48), fields=False)
    m.validate()
    loops = boundary_loops(m.faces)
    assert len(loops) == 2 and all(len(l) == 96 for l in loops)
    directed = {tuple(e) for f in m.faces for e in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0]))}
    assert len(directed) == 3 * len(m.faces)


def test_grid_faces_counts():
    assert grid_faces(3, 4, periodic=True).shape == (16, 3)
    assert grid_faces(3, 4, periodic=False).shape == (12, 3)


def test_obj_round_trip(horn_mesh, tmp_path):
    path = tmp_path / "horn.obj"
    export_obj(horn_mesh, path)
    v, n, f = read_obj(path)
    # nine significant digits: deviation bounded relative to coordinate size
    ref = horn_mesh.vertices
    assert np.max(np.abs(v - ref) / np.maximum(1.0, np.abs(ref))) < 1e-8
    assert np.array_equal(f, horn_mesh.faces)
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.count(b"\nf ") == len(horn_mesh.faces)


def test_ply_round_trip(horn_mesh, tmp_path):
    path = tmp_path / "horn.ply"
    export_ply(horn_mesh, path)
    assert path.read_bytes().startswith(b"ply\nformat binary_little_endian 1.0\n")
    props, table, faces = read_ply(path)
    assert props[:6] == ["x", "y", "z", "nx", "ny", "nz"] and len(props) == 6 + len(horn_mesh.vertex_fields)
    assert np.array_equal(table[:, :3], horn_mesh.vertices)
    assert np.array_equal(faces, horn_mesh.faces)


def test_csv_columns(horn_mesh, tmp_path):
    path = tmp_path / "horn.csv"
    export_csv(horn_mesh, path)
    lines = path.read_text().splitlines()
    assert len(lines) == len(horn_mesh.vertices) + 1
    ncol = 6 + len(horn_mesh.vertex_fields)
    assert all(len(l.split(",")) == ncol for l in lines[:5])


def test_write_errors(horn_mesh, tmp_path):
    with pytest.raises(MeshIOError):
        export_obj(horn_mesh, tmp_path / "missing" / "x.obj")
    with pytest.raises(MeshIOError):
        export_mesh(horn_mesh, tmp_path / "x.stl")


def test_invalid_mesh_rejected():
    bad = SurfaceMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 0, 2]] * 3, [[0, 1, 2]])
    with pytest.raises(ValueError):
        bad.validate()
    bad = SurfaceMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 0, 1]] * 3, [[0, 1, 3]])
    with pytest.raises(ValueError):
        bad.validate()
