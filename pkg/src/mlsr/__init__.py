"""Collective emission from small ensembles of multilevel atoms.

Master-equation dynamics, final photonic states, entanglement measures and
multimode Wigner distributions for V-type and four-level emitters at desk
scale (N of order 10).
"""

from ._backend import backend_name
from .basis import LoweringSpec, OccupationBasis, apply_lowering, apply_raising, enumerate_basis
from .dynamics import (
    DensityTensor,
    InvariantViolation,
    LevelScheme,
    LindbladGenerator,
    SchemeKind,
    TimeSeries,
    build_generator,
    coherence_spectrum,
    detect_peak,
    ground_sector_state,
    integrate,
    intensities,
    steady_state_time,
    symmetric_init,
)
from .entanglement import (
    Factorization,
    conditional_entropy,
    embed_occupation,
    negativity,
    partial_trace,
    partial_transpose,
    peres_min_eigenvalue,
    von_neumann_entropy,
)
from .fitting import ScalingFit, fit_power_law
from .photonic import (
    DressedOperatorSet,
    ModeIndependence,
    PhotonicMixture,
    PhotonicPureState,
    fla_final_mixture,
    g_recursion_value,
    mixture_density_matrix,
    mode_independence_check,
    path_populations,
    v_final_state,
)
from .wigner import (
    GridSpec,
    PhasePoint,
    WignerSlice,
    displacement_element,
    separability_probe,
    wigner_grid_integral,
    wigner_slice,
    wigner_value,
)

__version__ = "0.1.0"
