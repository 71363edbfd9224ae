"""Numerical construction and certification of compact ECS quotient data."""

from ._validation import ConsistencyError, ConvergenceError, InputError
from .certificate import Certificate, Check, Section
from .curvature import CurvatureJet, curvature_from_jet
from .fncore import PeriodicGridFunction, antiderivative, derivative, from_callable, integrate_period
from .geometry import (MetricData, curvature_jet, ecs_certificate, isometry_residual, metric_at,
                       sample_points, signature)
from .group import (GroupContext, GroupElement, PointM, SigmaLattice, act_on_M, act_on_RE, check_ncsuf,
                    equivariant_map, inverse, multiply)
from .odespace import (DiagonalOperatorPath, HillSystem, InnerSpace, IntegerLattice, SolutionSpace,
                       build_lattice, companion_basis, dim4_obstruction, lagrangian_residual, omega,
                       solve_first_order, traceless_square_identity, translation_operator)
from .pipeline import BuildConfig, build_ecs_bundle, dim4_demo
from .septuple import (XRS, Septuple, SpecTriple, constant_septuple, rho_sigma_to_septuple,
                       septuple_to_xrs, spec, xrs_to_rho_sigma)
from .specsolve import CubicSpec, cubic_roots, invert_spec, verify_lmn

__version__ = "0.1.0"
