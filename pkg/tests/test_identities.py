import numpy as np
import pytest

from harmonica.catalog import FAMILIES, FamilySpec, make_family
from harmonica.curvature import curvature_of
from harmonica.identities import SuiteSampler, classical_curvatures, identity_residuals, identity_suite


def _enneper(z):
    # f = 2, g = z: minimal, K = -4/(1 + |z|^2)^4
    phi = np.stack([1 - z ** 2, 1j * (1 + z ** 2), 2 * z])
    dphi = np.stack([-2 * z, 2j * z, 2 * np.ones_like(z)])
    return phi, dphi


def test_classical_curvatures_on_enneper(rng):
    z = rng.normal(size=100) + 1j * rng.normal(size=100)
    phi, dphi = _enneper(z)
    K, H, S2 = classical_curvatures(phi, dphi)
    exact = -4 / (1 + np.abs(z) ** 2) ** 4
    assert np.allclose(K, exact, rtol=1e-10)
    assert np.allclose(H, 0, atol=1e-12)
    assert np.allclose(S2, -2 * exact, rtol=1e-10)
    c = curvature_of(phi, dphi)
    assert np.allclose(c.K, exact, rtol=1e-10)


def test_residuals_on_random_data(rng):
    phi = rng.normal(size=(3, 500)) + 1j * rng.normal(size=(3, 500))
    dphi = rng.normal(size=(3, 500)) + 1j * rng.normal(size=(3, 500))
    res = identity_residuals(phi, dphi)
    assert np.max(res["g_identity"]) < 1e-12
    assert np.max(res["klotz_g"]) < 1e-12
    assert np.min(res["beltrami_chain"]) > -1e-12
    assert np.max(res["area"]) < 1e-10
    assert np.max(res["gauss_curvature_sign"]) <= 0
    assert np.max(res["curvature_routes"]) < 1e-9
    assert np.max(res["sigma2"]) < 1e-9


def test_sampler_is_seeded():
    dom = make_family(FamilySpec("catenoid", {})).domain
    assert np.array_equal(SuiteSampler(100, 3).points(dom), SuiteSampler(100, 3).points(dom))
    assert not np.array_equal(SuiteSampler(100, 3).points(dom), SuiteSampler(100, 4).points(dom))


@pytest.mark.parametrize("name", FAMILIES)
def test_suite_passes(name):
    rep = identity_suite(make_family(FamilySpec(name, {})).wd, n=2000, seed=1)
    assert rep.ok, rep.to_dict()
    assert rep.n_points >= 2000
