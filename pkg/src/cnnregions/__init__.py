"""Exact counts, bounds, and sampling estimates of linear regions of ReLU CNNs."""

__version__ = "0.1.0"

from .arch import (
    Architecture,
    Dims,
    LayerSpec,
    compose_linear_layers,
    fold_linear_weights,
    layer_output_dims,
    parameter_count,
    receptive_fields,
    validate_architecture,
)
from .bounds import (
    BoundReport,
    bound_report,
    expressivity_report,
    fc_bounds,
    multilayer_lower_bound,
    multilayer_upper_bound,
    naive_bound,
)
from .counting import (
    CountPolynomial,
    asymptotic_exponent,
    exact_region_count,
    expected_region_count,
    fc_region_count,
    region_count_sweep,
    region_polynomial,
)
from .coverage import ReceptiveFieldMap, coverage_rank, enumerate_K, is_feasible, max_total
from .oracle import (
    Arrangement,
    WeightSet,
    build_layer_arrangement,
    check_one_layer,
    count_regions_whitney,
    sample_rational_weights,
    zaslavsky_general_position_bound,
)
from .sampler import (
    RegionSampler,
    SamplingConfig,
    activation_pattern,
    estimate_region_count,
    forward_preactivations,
    he_init,
)
from .tables import reproduce_table
