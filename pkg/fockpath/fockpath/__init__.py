"""Exact few-photon linear-optics simulation in the occupation-number basis."""

__version__ = '1.0.0'

from .elements import (  # noqa: E402
    BeamSplitter,
    Circuit,
    ModeUnitary,
    PhaseShifter,
    PolarizationRotator,
    PolarizingBeamSplitter,
    compile_circuit,
)
from .evolution import TransitionQuery, amplitude_oracle, apply, permanent  # noqa: E402
from .experiments import (  # noqa: E402
    ChshConfig,
    HomConfig,
    RyffConfig,
    build_ryff,
    chsh,
    predicted_nu1,
    run_hom,
    run_ryff,
    sweep_c,
)
from .fock import (  # noqa: E402
    DensityMatrix,
    Mode,
    ModeRegistry,
    OccupationVector,
    PureState,
    epr_pair_state,
    reduced_density_matrix,
    single_photon_state,
    tensor,
    vacuum,
)
from .measurement import (  # noqa: E402
    DetectionPattern,
    conditional_state,
    fidelity,
    pattern_probability,
    polarization_angle,
    purity,
    sample_events,
)

__all__ = [
    'BeamSplitter',
    'ChshConfig',
    'Circuit',
    'DensityMatrix',
    'DetectionPattern',
    'HomConfig',
    'Mode',
    'ModeRegistry',
    'ModeUnitary',
    'OccupationVector',
    'PhaseShifter',
    'PolarizationRotator',
    'PolarizingBeamSplitter',
    'PureState',
    'RyffConfig',
    'TransitionQuery',
    'amplitude_oracle',
    'apply',
    'build_ryff',
    'chsh',
    'compile_circuit',
    'conditional_state',
    'epr_pair_state',
    'fidelity',
    'pattern_probability',
    'permanent',
    'polarization_angle',
    'predicted_nu1',
    'purity',
    'reduced_density_matrix',
    'run_hom',
    'run_ryff',
    'sample_events',
    'single_photon_state',
    'sweep_c',
    'tensor',
    'vacuum',
]
