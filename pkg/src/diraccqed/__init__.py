"""Single-emitter cavity QED in a Dirac-cone photonic lattice.

Band structure of a coupled-cavity array, the emitter-bath coupling on the
Dirac disc, and the emitter dynamics from either a direct amplitude ODE or
the inverse Laplace transform of the closed-form resolvent.
"""
from .bands import (
    BandTable,
    ConeFit,
    DiracCone,
    TightBindingModel,
    band_frequencies,
    band_path,
    fit_dirac_cone,
    identity_model,
    load_overlap_file,
    save_overlap_file,
    solve_supercell_bands,
    symmetric_model,
)
from .config import RunConfig
from .coupling import (
    AngularProfile,
    EmitterSpec,
    ModeSet,
    SystemSpec,
    build_mode_set,
    debye_to_si,
    rabi_magnitude,
    sample_disc,
    transition_frequency,
)
from .errors import (
    ConeFitError,
    ConfigError,
    DiracCQEDError,
    GeometryError,
    InsufficientDataError,
    IntegrationError,
    InversionAccuracyError,
    ModelError,
    OverlapFileError,
    StateError,
)
from .laplace import (
    InversionResult,
    KernelParams,
    c2_laplace,
    chi21_value,
    invert_c2,
    invert_laplace,
    kernel_lower,
    kernel_quadrature,
    kernel_total,
    kernel_upper,
)
from .lattice import LatticeSpec
from .ode import (
    AmplitudeState,
    FrequencyReport,
    InitialState,
    Trajectory,
    entanglement_entropy,
    estimate_oscillation_frequency,
    evolve,
    oscillation_frequency,
    propagate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
