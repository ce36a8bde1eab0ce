"""avglab: log-domain weighted averaging calculus and its verification lab.

Core pieces: backward-difference calculus on lazy sequences, weight schemes
held in log form, five averaging modes with convergence reports, regular
summability matrix constructions with exact identity checks, auxiliary
weight pipelines, exact ergodic correlation simulators, and bitmask pattern
scans.
"""

from .sequences import IntPolynomial, Sequence, from_values
from .calculus import delta, delta_iter, poly_delta, shift_via_delta
from .weights import (
    ClassificationReport,
    WeightScheme,
    builtin_scheme,
    classify_difference_order,
    exp_pow_scheme,
    log_weight_form,
    normalized_weight,
    power_scheme,
    register_scheme,
    scheme_from_function,
    tempered_growth_check,
)
from .averages import (
    AverageReport,
    IntervalFamily,
    interval_average,
    interval_family,
    iterated_average,
    iterated_average_logkernel,
    iterated_average_trace,
    iteration_tail_report,
    nested_average_residual,
    uniform_average,
    weighted_average,
    weighted_average_report,
)
from .toeplitz import (
    RegularityReport,
    SummabilityMatrix,
    apply_row,
    cesaro_matrix,
    check_regularity,
    identity_matrix,
    interval_from_windows_matrix,
    interval_from_windows_residual,
    interval_from_windows_row,
    stuck_column_matrix,
    window_from_prefix_matrix,
    window_from_prefix_residual,
    window_from_prefix_row,
)
from .constructions import (
    AuxWeights,
    build_aux_weights,
    build_convex_twin,
    build_subordinate_scheme,
    check_subordination,
    default_exponent_schedule,
    default_z,
    make_exponent_schedule,
)
from .ergodic import (
    ArcUnion,
    CircleRotation,
    CyclicSet,
    CyclicSystem,
    correlation,
    recurrence_experiment,
    recurrence_sequence,
)
from .patterns import (
    IntegerSet,
    blocks_set,
    good_shift_set,
    pattern_density,
    pattern_density_naive,
    tail_window_report,
)

__version__ = "0.1.0"
