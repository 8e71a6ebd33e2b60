"""Characteristics, horizons and boundary data for acoustic-type Lorentzian metrics."""

__version__ = "0.1.0"

import types as _types

from .profiles import TimeProfile
from .metric import (
    AcousticFlow,
    HyperbolicityError,
    MetricError,
    PolarMetric2D,
    RadialMetric,
    ValidationReport,
    Window,
    acoustic_to_polar2d,
    acoustic_to_radial,
    banded_radial_metric,
    validate,
)
from .characteristics import (
    CharRoots,
    DegenerateClassification,
    SurfaceClassification,
    char_speeds,
    classify_surface,
    cone_pairing_check,
    factor_speeds_bpm,
    radial_char_roots,
)
from .geodesics import (
    Census,
    IntegrationError,
    PolarState,
    StepCollapseError,
    Trajectory,
    fate_census,
    integrate_polar2d,
    integrate_radial,
    null_initial_state,
)
from .horizons import (
    HorizonCurve,
    HorizonError,
    NoHorizonError,
    appearance_time,
    containment,
    disappearance_time,
    dynamic_horizon,
    inner_separatrix,
    picard_bounded_solution,
    separatrix_shoot,
)
from .stationary2d import (
    ClosedOrbit,
    Ergosphere,
    extremal_horizons,
    find_closed_orbits,
    locate_ergosphere,
    origin_capture_census,
)
from .waves import (
    Pulse,
    build_char_coords,
    dalembert_solve,
    dn_characteristic,
    dn_direct,
    gaussian_probe,
    isometry_map,
    pullback_metric,
    refinement_study,
)

__all__ = [name for name, obj in list(globals().items())
           if not name.startswith("_") and not isinstance(obj, _types.ModuleType)]
