"""apvsim: simulator and analysis library for an entanglement-based
measurement of a parity-violating vector light shift.

The package evaluates the interference light shift of crossed optical
standing waves, evolves multi-ion entangled spin states under that shift
plus injected parity-conserving systematics, and quantifies how the
phase-swap / decoherence-free-subspace scheme rejects systematics and
scales in precision with ion number.
"""

from .fields import (
    DegenerateSegment,
    FieldConfiguration,
    IonSite,
    Polarization,
    StandingWave,
    apply_misalignment,
    complex_field_at,
    default_configuration,
    find_nodes,
    gradient_at,
    sites_at_successive_nodes,
    superposition_field_at,
    translate_phase,
)
from .protocol import (
    CampaignConfig,
    Distribution,
    PrecisionReport,
    SystematicsBudget,
    ZeroDenominator,
    bsm_reach,
    isotope_ratio,
    precision_projection,
    run_montecarlo,
    run_phase_swap_pair,
)
from .scenario import Scenario, ScenarioError, default_scenario, load_scenario
from .shifts import (
    EtaModel,
    FrequencyMismatch,
    ShiftBudget,
    SystematicsValues,
    ZeroShiftGeometry,
    build_budget,
    calibrate_eta,
    larmor_shift,
    pnc_shift_numeric,
    pnc_shift_vector,
    quad_systematic_shift,
)
from .spins import (
    DimensionTooLarge,
    EffectiveField,
    FitDegenerate,
    NonDiagonalField,
    PureState,
    RamseyOutcome,
    evolve,
    evolve_dense_oracle,
    extract_phase,
    prepare_alternating_ghz,
    ramsey_sequence,
    relative_phase_rate,
)

__version__ = "0.1.0"
