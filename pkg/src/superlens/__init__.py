"""Near-field reconstruction of periodic surfaces through a superlens slab."""

__version__ = "0.1.0"

from .analytic import first_order_trace, scaling_factor_upsilon, upsilon_scan, zeroth_order_field  # noqa: E402
from .errors import (AliasingError, ConditioningError, DegenerateModeError, ResonanceError,  # noqa: E402
                     SuperlensError)
from .forward import Grid, assemble_system, solve_total_field, trace_on_gamma_b  # noqa: E402
from .measurement import MeasurementSet, apply_noise, sample_measurements  # noqa: E402
from .profiles import Profile, boxcar_profile, smooth_profile, tent_profile  # noqa: E402
from .reconstruction import ReconstructedProfile, profile_error, reconstruct_profile  # noqa: E402
from .spectral import SceneParameters, branch_sqrt  # noqa: E402

__all__ = [
    "AliasingError", "ConditioningError", "DegenerateModeError", "Grid", "MeasurementSet", "Profile",
    "ReconstructedProfile", "ResonanceError", "SceneParameters", "SuperlensError", "apply_noise",
    "assemble_system", "boxcar_profile", "branch_sqrt", "first_order_trace", "profile_error",
    "reconstruct_profile", "sample_measurements", "scaling_factor_upsilon", "smooth_profile",
    "solve_total_field", "tent_profile", "trace_on_gamma_b", "upsilon_scan", "zeroth_order_field",
]
