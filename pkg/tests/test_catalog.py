import numpy as np
import pytest

from harmonica.catalog import (FAMILIES, FamilySpec, catenoid_closed_form, complex_periods, flujo_valid,
                               make_family, omega_member, rotational_valid, torus_data, torus_generators,
                               torus_period_b)
from harmonica.core import evaluate_immersion
from harmonica.errors import InvalidParameters
from harmonica.surfaces import PathSpec

# regression fixture, checked below against a bisection on contour periods
B_A05 = -0.517960787847346


def test_spec_json_round_trip():
    spec = FamilySpec("catenoid", {"alpha": -3 + 3j, "beta": -1 - 1j, "r1": 2.0})
    assert FamilySpec.from_json(spec.to_json()) == spec
    with pytest.raises(InvalidParameters):
        FamilySpec("enneper")


@pytest.mark.parametrize("name", FAMILIES)
def test_defaults_build(name):
    fam = make_family(FamilySpec(name, {}))
    assert fam.valid


@pytest.mark.parametrize("name,params", [
    ("catenoid", {"alpha": 1.0, "beta": 0.0}),
    ("flujo", {"b": 2.0, "c": 0.0}),
    ("flujo", {"b": 4.0, "c": 3.0}),
    ("rotational", {"b": -1.0}),
    ("torus", {"a": 1.5}),
    ("torus", {"a": 0.5, "b": 5.0}),
])
def test_invalid_parameters_rejected(name, params):
    with pytest.raises(InvalidParameters):
        make_family(FamilySpec(name, params))


def test_predicates():
    assert omega_member(-1, 0) and not omega_member(1, 0)
    assert not omega_member(1j, 2)
    assert omega_member(-3 + 3j, -1 - 1j)
    assert omega_member(0.5 + 3j, 1)  # Re alpha >= 0 but |Im alpha| > |beta|
    assert rotational_valid(0.25) and rotational_valid(-1 + 1e-9j) and not rotational_valid(-1)
    assert flujo_valid(4, 0) and not flujo_valid(3, 0) and not flujo_valid(4, 2)


def test_catenoid_polar_closed_form_matches_cartesian(rng):
    fam = make_family(FamilySpec("catenoid", {"r1": 1.0, "r2": -2.0}))
    m, t = np.exp(rng.uniform(-2, 2, 30)), rng.uniform(0, 2 * np.pi, 30)
    polar = catenoid_closed_form(-3 + 3j, -1 - 1j, 1.0, -2.0, m, t)
    assert np.allclose(polar, fam.closed_form(m * np.exp(1j * t)), atol=1e-12)
    with pytest.raises(InvalidParameters):
        catenoid_closed_form(1.0, 0.0, 0, 0, m, t)


@pytest.mark.parametrize("name", ["flujo", "horn", "rotational", "nonqc_y", "helicoid_y1"])
def test_closed_forms_against_quadrature(name, rng):
    fam = make_family(FamilySpec(name, {}))
    base = fam.immersion.basepoint.z
    for _ in range(3):
        z = base + complex(*rng.uniform(-0.4, 0.4, 2))
        X = evaluate_immersion(fam.immersion, z)
        assert np.allclose(X, fam.closed_form(np.array(z)).ravel(), atol=1e-9)


def test_horn_height_is_log_radius(rng):
    fam = make_family(FamilySpec("horn", {"r1": 1.0}))
    z = np.exp(rng.uniform(-3, 3, 20) + 1j * rng.uniform(0, 6, 20))
    assert np.allclose(fam.closed_form(z)[2], np.log(np.abs(z)), atol=0)


def _bisect(f, lo, hi, n=60):
    flo = f(lo)
    for _ in range(n):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_torus_period_against_bisection_oracle():
    g1, _ = torus_generators(0.5)
    oracle = _bisect(lambda b: complex_periods(torus_data(0.5, b), (g1,))[0][1].real, -2.0, 0.0, 45)
    b = torus_period_b(0.5)
    assert b == pytest.approx(oracle, abs=1e-9)
    assert b == pytest.approx(B_A05, abs=1e-12)


def test_torus_period_report():
    tp = torus_period_b(0.5, full=True)
    assert tp.matches == "reciprocal"
    assert tp.ratio_reciprocal == pytest.approx(tp.b, rel=1e-12)
    assert tp.residual_gamma1 < 1e-8 and tp.real_period_gamma2 < 1e-8


def test_torus_periods_all_components():
    fam = make_family(FamilySpec("torus", {"a": 0.3}))
    for p in complex_periods(fam.wd, fam.generators):
        assert np.max(np.abs(p.real)) < 1e-8


def test_torus_path_independence():
    # two homotopic routes on the same sheet give the same point
    fam = make_family(FamilySpec("torus", {}))
    dom = fam.domain
    w0 = fam.immersion.basepoint.branch
    p1 = PathSpec.polyline(dom, [1.0, 1.0 + 1j, 3.0 + 1j], w0=w0)
    p2 = PathSpec.polyline(dom, [1.0, 1.5 + 2j, 3.0 + 1j], w0=w0)
    assert p1.end.branch == pytest.approx(p2.end.branch)
    X1 = evaluate_immersion(fam.immersion, p1.end, p1)
    X2 = evaluate_immersion(fam.immersion, p2.end, p2)
    assert np.allclose(X1, X2, atol=1e-9)
