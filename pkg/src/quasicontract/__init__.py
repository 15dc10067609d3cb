"""Analysis of self-maps obeying d(Tx, Ty) <= (1 - K) d(x, y) + M."""

from .bounds import (
    BoundTrajectory,
    PermanenceQuery,
    bound_closed_form,
    bound_recurrence,
    bound_series,
    permanence_index,
    ultimate_bound,
    uniform_iterate_bound,
)
from .constraint import (
    ContractionParams,
    DistanceSample,
    PairVerdict,
    Regime,
    RegimeTag,
    classify_pair,
    classify_regime,
    fit_frontier,
    fit_min_M,
    read_samples_csv,
    verify_pair,
)
from .lti import (
    EnvelopeFit,
    LtiSystem,
    RandomPerturbation,
    SinusoidalPerturbation,
    ZeroPerturbation,
    contraction_params,
    envelope_fit,
    integrate_step,
    min_sampling_period,
    sampled_map,
    spectral_abscissa,
)
from .metric import AxiomReport, Metric, as_point, check_metric_axioms, distance
from .orbits import (
    FixedPointResult,
    NonConvergence,
    OrbitRecord,
    SelfMap,
    check_bound_domination,
    empirical_entry_index,
    fixed_point_iteration,
    iterate_pair,
    make_compliant_test_map,
)
from .regions import (
    BandParams,
    BandVerdict,
    RegionReport,
    UnclassifiedBand,
    band_envelope,
    corollary_verdict,
    disjointness_check,
    feasibility_oracle,
    feasibility_scan,
    interval_for_36,
    interval_for_37,
    region_report,
    xei_radius,
    xhat_threshold,
)

__version__ = "0.1.0"
