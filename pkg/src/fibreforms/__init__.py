"""Exterior calculus, horizontal-shadow decompositions, gauged relaxation,
quasiconvexity falsification and direct-method minimization on
trivializable fibre-bundle charts."""

__version__ = "0.1.0"

from .bundle import (
    BundleChart,
    ShadowData,
    ShadowEntry,
    StarDomain,
    check_closedness,
    entry_bound,
    horizontal_projection,
    shadow_decompose,
    shadow_reconstruct,
)
from .comass import comass, comass_sampling_oracle, comass_value
from .forms import Diffeomorphism, Form, FormValue, exterior_derivative, pullback, wedge
from .homotopy import homotopy_operator, poincare_antiderivative
from .metric import MetricField
from .minimizer import (
    DiscreteField,
    SolveReport,
    gradient_check,
    linear_solve_oracle,
    minimize,
    objective,
    refinement_study,
)
from .multiindex import all_multiindices, insert_index, merge_with_parity, sort_with_parity
from .polynomial import Polynomial, random_polynomial
from .quadrature import box_rule, integrate
from .quasiconvexity import (
    Integrand,
    QCReport,
    change_of_variables_reduction,
    euclidean_qc_test,
    gap_value,
    paired_qc_gaps,
    riemannian_qc_test,
    volume_growth_factor,
)
from .relaxation import (
    ComassPowerCost,
    ConstantCost,
    CostFunction,
    Discretization,
    DoubleWellCost,
    GaugeForm,
    GaugedProblem,
    GrowthConstants,
    QuadraticCost,
    ZeroCost,
    check_admissible,
    coercivity_check,
    gauged_cost,
    relax,
    tuple_norm,
)
from .rng import philox

__all__ = [name for name in dir() if not name.startswith("_")]
