"""Orlicz-space input-to-state stability: exact norms, mild solutions and certificates."""

__version__ = "0.1.0"

from .admissibility import (
    AdmissibilityReport,
    ComparisonFn,
    admissibility_constant,
    estimate_theta,
    infinite_time_verdict,
    verify_siiss,
    verify_siss,
)
from .counterexample import build_counterexample, construct_h, construct_u0, run_counterexample
from .orlicz import NormSpec, luxemburg_norm, lp_norm, mean_convergence_check, modular
from .piecewise import PiecewiseFn
from .systems import (
    Diagonal,
    ScalarODE,
    SeparableInput,
    StepInput,
    TimeReversed,
    TranslationL1,
    apply_semigroup,
    input_to_state_map,
    mild_solution,
)
from .young import (
    ExpMinusYoung,
    PowerYoung,
    TabulatedYoung,
    check_young,
    delta2_index,
    eval_young,
    majorant_phi1,
    parse_young,
)
