"""Harmonic immersions of Riemann surfaces from Weierstrass data."""
from .errors import *  # noqa: F401,F403
from .surfaces import (Annulus, EllipticCurve, EndChart, PathSpec, PuncturedPlane, SurfacePoint, UnitDisk,
                       default_end_charts)
from .quadrature import (DEFAULT, QuadratureConfig, QuadResult, cauchy_derivative, integrate_contour,
                         integrate_improper, integrate_surface, laurent_coefficients)
from .core import (EPS_IMM, Immersion, WeierstrassData, complex_periods, evaluate_immersion, hopf,
                   immersion_margin, klotz_density, real_periods, verify_immersion)
from .gauss import (beltrami_magnitude, complex_gauss, decompose, distortion, frame, gauss_map, qc_indices,
                    rebuild_phi)
from .curvature import curvature, gauss_degree, jorge_meeks_check, total_curvature
from .catalog import FAMILIES, FamilySpec, make_family, torus_period_b
from .ends import analyze_end, classify_end, flux, ftc_criterion, pole_orders
from .identities import identity_suite
from .mesh import (LogPolarGrid, SurfaceMesh, export_csv, export_obj, export_ply, flujo_grid, sample_mesh,
                   torus_grid)

__version__ = "0.1.0"
