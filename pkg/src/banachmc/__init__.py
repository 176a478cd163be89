"""Monte Carlo integration of Banach space valued functions on [0,1]^d.

Submodules
----------
spaces       l_q^m spaces and their norms
functions    test integrands, the bump function and the fooling family
interp       composite tensor-product Lagrange interpolation
montecarlo   standard and separated Monte Carlo, quadrature form, error rates
rademacher   Rademacher averages, type-constant ratios, block partitions
kernels      compiled/numpy backend selection for the inner loops
"""

__version__ = "0.1.0"

from .functions import (  # noqa: E402
    FoolingFamily,
    TestProblem,
    bump_eval,
    bump_integral,
    make_fooling_family,
    oracle_integral,
    parse_problem,
    registry_problem,
)
from .interp import (  # noqa: E402
    InterpolationOperator,
    apply_interp,
    build_interp,
    integrate_interpolant,
    sup_error_estimate,
)
from .kernels import BACKEND  # noqa: E402
from .montecarlo import (  # noqa: E402
    ErrorMoment,
    MCConfig,
    QuadratureRealization,
    RateReport,
    as_quadrature,
    error_moment,
    rate_fit,
    sep_mc,
    standard_mc,
)
from .rademacher import (  # noqa: E402
    PartitionTrace,
    RademacherEstimate,
    TypeConstantEstimate,
    greedy_partition,
    rademacher_moment,
    reconstruct_full_moment,
    sigma_lower_bound,
    subset_search,
)
from .spaces import SpaceDescriptor, axpy, basis_vector, lq, norm, parse_space, scalar  # noqa: E402
