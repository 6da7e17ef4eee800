import numpy as np
import pytest

from harmonica.catalog import (FamilySpec, catenoid_data, make_family, omega_member, rotational_data,
                               torus_data, torus_generators, torus_period_b)
from harmonica.core import (BoxSampler, Immersion, LogPolarSampler, WeierstrassData, complex_periods,
                            evaluate_immersion, hopf_of, klotz_of, margin_of, real_periods, verify_immersion,
                            wedge_norm)
from harmonica.errors import EmptySampler, PathEndpointMismatch
from harmonica.surfaces import PathSpec, PuncturedPlane, SurfacePoint, UnitDisk


def _random_phi(rng, n=1000):
    return rng.normal(size=(3, n)) + 1j * rng.normal(size=(3, n))


def test_wedge_identity(rng):
    phi = _random_phi(rng)
    # direct route: |Re phi x Im phi| is the area of X_u, X_v
    direct = 2 * np.linalg.norm(np.cross(phi.real, phi.imag, axis=0), axis=0)
    assert np.allclose(wedge_norm(phi), direct, rtol=1e-13)
    assert np.allclose(wedge_norm(phi) ** 2, klotz_of(phi) ** 2 - np.abs(hopf_of(phi)) ** 2, rtol=1e-10)
    assert np.allclose(margin_of(phi), klotz_of(phi) - np.abs(hopf_of(phi)), rtol=1e-10)


def test_hopf_vanishes_for_minimal_data(rng):
    # Enneper-type data (1 - g^2, i(1 + g^2), 2g) is conformal
    g = rng.normal(size=50) + 1j * rng.normal(size=50)
    phi = np.stack([1 - g ** 2, 1j * (1 + g ** 2), 2 * g])
    assert np.max(np.abs(hopf_of(phi)) / klotz_of(phi)) < 1e-14


def test_immersion_matches_closed_form(rng):
    fam = make_family(FamilySpec("catenoid", {"r1": 2.0, "r2": -1.0}))
    for _ in range(5):
        z = complex(np.exp(rng.uniform(-1, 1) + 1j * rng.uniform(0, 2 * np.pi)))
        loop_free = PathSpec.polyline(fam.domain, [fam.immersion.basepoint.z, 2j if z.imag > 0 else -2j, z])
        X = evaluate_immersion(fam.immersion, z, path=loop_free)
        assert np.allclose(X, fam.closed_form(np.array(z)).ravel(), atol=1e-9)


def test_path_endpoint_checks():
    fam = make_family(FamilySpec("catenoid", {}))
    with pytest.raises(PathEndpointMismatch):
        evaluate_immersion(fam.immersion, 2.0, path=PathSpec.polyline(fam.domain, [3.0, 2.0]))
    with pytest.raises(PathEndpointMismatch):
        evaluate_immersion(fam.immersion, 2.0, path=PathSpec.polyline(fam.domain, [1.0, 3.0]))


@pytest.mark.parametrize("name", ["catenoid", "horn", "rotational", "flujo"])
def test_real_periods_vanish(name):
    fam = make_family(FamilySpec(name, {}))
    for p in real_periods(fam.wd, fam.generators):
        assert np.max(np.abs(p)) < 1e-8


def test_verify_immersion_rotational():
    good = verify_immersion(rotational_data(0.25))
    assert good.passed and good.min_margin > 1e-3
    bad = verify_immersion(rotational_data(-1.0))
    assert not bad.passed and bad.min_margin < 1e-20


@pytest.mark.parametrize("alpha,beta", [
    # zeros in narrow valleys that the grid alone misses
    (1.4026144723104093 - 2.234428694399478j, 2.6701631434973505 + 0.07006299188847231j),
    (-0.33260793558457147 - 2.574697198494063j, -2.569732172725197 + 0.4424598346408972j),
    # a zero 0.0135 rad off the real axis, seeded from an on-axis cell
    (2.776718037930136 + 1.0598486382627845j, -2.9134568688504023 + 1.138949834099714j),
])
def test_oracle_finds_tangential_zeros(alpha, beta):
    assert not omega_member(alpha, beta)
    rep = verify_immersion(catenoid_data(alpha, beta), LogPolarSampler((-6.0, 6.0), 120, 64), eps=1e-20)
    assert rep.min_margin < 1e-25


def test_torus_far_from_period_solution_fails():
    rep = verify_immersion(torus_data(0.5, 5.0))
    assert not rep.passed


def test_torus_period_sensitivity():
    b = torus_period_b(0.5)
    g1, _ = torus_generators(0.5)
    p_ok = complex_periods(torus_data(0.5, b), (g1,))[0]
    p_off = complex_periods(torus_data(0.5, b + 0.1), (g1,))[0]
    assert abs(p_ok[1].real) < 1e-8
    assert abs(p_off[1].real) > 1e-4


def test_empty_sampler():
    wd = WeierstrassData(UnitDisk(), lambda z, w: np.stack([np.ones_like(z), 1j * np.ones_like(z), z]))
    with pytest.raises(EmptySampler):
        verify_immersion(wd, BoxSampler((5, 6), (5, 6), 4, 4))


def test_immersion_base_value():
    wd = WeierstrassData(PuncturedPlane(()), lambda z, w: np.stack([np.ones_like(z), 1j * np.ones_like(z),
                                                                     np.zeros_like(z)]))
    imm = Immersion(wd, SurfacePoint(0j), (1.0, 2.0, 3.0))
    assert np.allclose(evaluate_immersion(imm, 2 + 1j), [3.0, 1.0, 3.0])
