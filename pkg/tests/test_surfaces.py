import numpy as np
import pytest

from harmonica.errors import BranchMismatch, InvalidParameters, PointOutsideDomain
from harmonica.surfaces import (Annulus, EllipticCurve, PathSpec, PuncturedPlane, SurfacePoint, UnitDisk,
                                branch_residual, continue_w, coords, default_end_charts)


def test_domain_validation():
    with pytest.raises(InvalidParameters):
        EllipticCurve(1.0)
    with pytest.raises(InvalidParameters):
        PuncturedPlane((1, 1))
    with pytest.raises(InvalidParameters):
        Annulus(2.0, 1.0)


def test_contains():
    dom = PuncturedPlane((1, -1))
    assert list(dom.contains(np.array([1, -1, 0, 2j]))) == [False, False, True, True]
    assert not UnitDisk().contains(1.0)
    assert EllipticCurve(0.5).contains(0.5) and not EllipticCurve(0.5).contains(0)


def test_coords_checks():
    with pytest.raises(PointOutsideDomain):
        coords(PuncturedPlane((0,)), 0j)
    cur = EllipticCurve(0.5)
    with pytest.raises(BranchMismatch):
        coords(cur, 2.0, w=5.0)
    z, w = coords(cur, SurfacePoint(2.0, -cur.principal_w(2.0)))
    assert w == pytest.approx(-cur.principal_w(2.0))


def test_principal_root_solves_curve():
    cur = EllipticCurve(0.3)
    z = np.exp(np.linspace(-3, 3, 50) + 1j * np.linspace(0, 6, 50))
    assert np.max(branch_residual(cur, z, cur.principal_w(z))) < 1e-14


@pytest.mark.parametrize("center,sheet", [(0.5, -1), (2.0, -1), (0.0 + 0.7j, 1)])
def test_monodromy(center, sheet):
    # one branch point inside flips the sheet; none inside keeps it
    cur = EllipticCurve(0.5)
    loop = PathSpec.circle(cur, center, 0.2, n=32)
    w0 = loop.start.branch
    w_end = loop.segments(cur)[-1][3]
    assert w_end == pytest.approx(sheet * w0, rel=1e-12)


def test_loop_around_two_branch_points_closes():
    cur = EllipticCurve(0.5)
    loop = PathSpec.circle(cur, 1.25, 1.0, n=64)
    assert loop.segments(cur)[-1][3] == pytest.approx(loop.start.branch, rel=1e-12)


def test_continue_w_picks_nearest_root():
    cur = EllipticCurve(0.5)
    z0 = 3.0 + 1j
    w0 = -cur.principal_w(z0)
    w = continue_w(cur, z0, w0, z0 + 1e-3)
    assert abs(w - w0) < 1e-2


def test_end_charts():
    charts = default_end_charts(PuncturedPlane((1, -1)))
    assert [c.label for c in charts] == ["1", "-1", "inf"]
    inf = charts[-1]
    z, _ = inf.to_surface(np.array([0.01]))
    assert abs(z[0]) == pytest.approx(100)
    cur = default_end_charts(EllipticCurve(0.5))
    for ch in cur:
        z, w = ch.to_surface(np.array([0.01 + 0.01j]))
        assert branch_residual(EllipticCurve(0.5), z, w)[0] < 1e-12
