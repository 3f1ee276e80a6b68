"""Vector Fitting and LSCF rational models for impedance-based structural health monitoring."""

from .core import (
    FrequencyGrid,
    FrequencyResponse,
    ModalParameters,
    Mode,
    RationalModel,
    canonical_order,
    evaluate_model,
    poles_to_modal,
)
from .damage import DamageReport, ModeMatch, assess, control_thresholds, match_modes, render_report
from .errors import (
    ConfigError,
    DataError,
    IllConditionedError,
    NumericError,
    NumericFailureError,
    ParseError,
    VfshmError,
)
from .lscf import PolynomialModel, lscf_fit, polynomial_poles
from .metrics import WindowedMetricSeries, rmsd, windowed_metric, xcorr_metric
from .simulators import (
    PZT5A,
    MdofSystem,
    PztParams,
    apply_damage,
    emi_coupled_impedance,
    mdof_frf,
    mdof_mechanical_impedance,
    mdof_model,
    mdof_poles,
    benchmark_system,
)
from .stabilization import StabilizationResult, SweepConfig, order_sweep, stable_modal_set
from .vectfit import VfDiagnostics, VfOptions, vector_fit

__version__ = "0.1.0"
