"""Work extraction from a waveguide-coupled two-level emitter by a single photon.

Subpackages by concern:

* :mod:`photonwork.core`    - exact amplitude, master-equation coefficients
* :mod:`photonwork.thermo`  - cycle work/heat integrals and the detuning sweep
* :mod:`photonwork.field`   - detector signal, interaction energy, spectrogram
* :mod:`photonwork.lattice` - brute-force discretized-continuum oracle
* :mod:`photonwork.verify`  - the acceptance/verification suite
* :mod:`photonwork.cli`     - command-line front end
"""

from .core import (
    AmplitudeTrace,
    CoefficientTrace,
    IntegrationFailureError,
    PoleError,
    RotatingWaveWarning,
    SimParams,
    ValidationError,
    coefficient_trace,
    default_time_grid,
    excited_amplitude_closed,
    excited_amplitude_ode,
    excited_population,
    excited_population_rate,
    frequency_drift,
    heat_flux,
    instantaneous_decay_rate,
    instantaneous_frequency,
    se_coefficient_trace,
    spontaneous_emission_amplitude,
    work_flux,
)
from .field import (
    BoundaryContaminationError,
    DetectorTrace,
    EnergyPartition,
    Spectrogram,
    detector_trace,
    energy_partition,
    interaction_energy,
    stark_shift_ratio,
    time_windowed_spectrum,
)
from .lattice import (
    FieldState,
    LatticeConfig,
    LowFidelityWarning,
    UnitarityError,
    evolve,
    init_excited_tls,
    init_exponential_packet,
    interaction_energy_lattice,
    load_checkpoint,
    realspace_snapshot,
    save_checkpoint,
    state_norm,
)
from .thermo import (
    CycleResult,
    SweepRow,
    SweepTable,
    detuning_sweep,
    monochromatic_limit_check,
    passivity_monitor,
    run_cycle,
    se_cycle,
    thermal_emitter_scaling,
)

__version__ = "0.1.0"
