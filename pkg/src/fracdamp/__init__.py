"""fracdamp: fractional Laplacian operators, blow-up functionals, and a
pseudo-spectral simulator for structurally damped sigma-evolution models.

The package has four layers:

* :mod:`fracdamp.brackets` / :mod:`fracdamp.quadrature` /
  :mod:`fracdamp.lemmas` / :mod:`fracdamp.gridfield` - exact bracket
  calculus, singular-integral quadrature, operator-estimate checks, and
  the spectral torus oracle;
* :mod:`fracdamp.params` / :mod:`fracdamp.cutoffs` /
  :mod:`fracdamp.functionals` - exponent algebra, test functions, and
  the space-time functional pipeline;
* :mod:`fracdamp.sim` - the time-domain simulator;
* :mod:`fracdamp.tables` / :mod:`fracdamp.figures` /
  :mod:`fracdamp.experiments` / :mod:`fracdamp.cli` - the experiment
  harness.
"""

from .brackets import (
    BracketSum,
    FractionalOrder,
    RadialWeight,
    bracket,
    iterated_laplacian,
    iterated_laplacian_terms,
    laplacian_weight_step,
    weight_partial_derivative,
)
from .cutoffs import (
    SpatialWeightChoice,
    TemporalCutoff,
    condition_supremum,
    spatial_weight_for,
    temporal_cutoff_eval,
)
from .functionals import (
    BoxGrid,
    FunctionalReport,
    RadialGrid,
    SpaceTimeField,
    check_contradiction_bound,
    contradiction_ladder,
    evaluate_functionals,
)
from .gridfield import GridField, spectral_fractional_laplacian
from .lemmas import decay_majorant, verify_decay_lemma, verify_scaling
from .params import (
    ModelParams,
    blow_up_range,
    derived_params,
    existence_exponent_bound,
    lifespan_bound,
    linear_decay_exponents,
    young_upper,
)
from .quadrature import (
    QuadratureFailure,
    QuadratureScheme,
    fractional_laplacian_of_weight,
    fractional_laplacian_quadrature,
    kernel_constant,
)
from .sim import (
    RunRecord,
    SimConfig,
    energy_ledger,
    lifespan_sweep,
    linear_propagator_coefficients,
    measure_linear_decay,
    simulate,
)

__version__ = "0.1.0"
