"""Analysis and simulation of two-component cubic NLS systems."""
from .algebra import (CoefficientVector, ConeClass, ConeVector, FieldPair, GL2Transform, NlslabError,
                      QuadraticObservables, SystemRep, coefficients_to_system, cone_classify, dmatrix,
                      dmatrix_inverse, observables, quadratic_form, subspace_meets_cone,
                      system_to_coefficients, transform_system)
from .classify import (BoundConstant, Classification, ConservedQuantitySpec, bound_constant, classify,
                       conserved_quantities, evaluate_conserved)
from .eigen import EigenStructure, eigen_decompose, rank_of
from .families import nls_a, nls_b
from .normalize import (AssumptionNotSatisfied, NormalizationResult, normalize, normalize_assumption1,
                        normalize_assumption2)
from .ode import OdeTrajectory, check_derivative_identity, global_bound_ratio, integrate, integrate_many
from .pde import Grid, PdeState, ProfileComparison, boundedness_diagnostics, extract_w, run_asymptotics
from .templates import FORM_PARAMS, template

__version__ = "0.1.0"
