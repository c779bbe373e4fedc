"""rydsense: three-photon Rydberg RF electrometry simulation and analysis.

Two readout channels of a thermal-vapor three-photon Rydberg sensor are
modeled end to end: probe transmission (EIT/EIA) and RF-gated fluorescence.
On top of the steady-state and time-domain Lindblad solvers sit the
measurement chain: Autler-Townes field calibration, heterodyne sensitivity
estimation, bandwidth extraction, and decay decomposition.
"""

__version__ = "0.1.0"

from .calibrate import (
    CalibrationFit,
    HeterodyneResult,
    HeterodyneSetup,
    SensitivityMap,
    SplittingResult,
    calibrate_scan_axis,
    extract_at_splitting,
    fit_field_calibration,
    sensitivity_from_snr,
    sensitivity_map,
    simulate_heterodyne,
    simulate_heterodyne_two_tone,
)
from .doppler import VelocityGrid, doppler_average, make_grid, sigma_v
from .dynamics import (
    DecayBudget,
    EdgeMarker,
    RiseFallResult,
    SquareWaveResult,
    TimeTrace,
    bandwidth_from_tau,
    decay_decomposition,
    extract_rise_fall,
    simulate_square_wave,
)
from .errors import (
    AnalysisError,
    DegenerateSteadyStateError,
    IngestError,
    RydsenseError,
    SchemeError,
    SolverError,
)
from .ingest import ColumnRoles, RawTrace, SnrColumns, SnrRecord, parse_snr_table, parse_trace, write_trace
from .lindblad import (
    DensityMatrix,
    IncoherentTransfer,
    Liouvillian,
    build_hamiltonian,
    build_liouvillian,
    steady_state,
    time_evolve,
)
from .observables import (
    FluorescenceConfig,
    ResponseMap,
    SpectrumTrace,
    apply_parameter,
    default_fluorescence_config,
    fluorescence_rate,
    probe_transmission,
    response_map,
    sweep,
)
from .scheme import (
    BeamParams,
    DecayBranch,
    Drive,
    LadderScheme,
    Level,
    load_scheme,
    load_scheme_file,
    rabi_from_power,
    residual_wavevector,
    scheme_to_yaml,
)
