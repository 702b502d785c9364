"""Classical local-hidden-variable simulator for homodyne-detection Bell tests."""
from .detector import DetectorConfig, HomodyneReading, Outcome, digitize, discriminate, read_homodyne
from .decomposition import TwoCurveDecomposition, two_curve_decomposition
from .experiment import (
    ChannelSetting,
    ExperimentConfig,
    Selection,
    SettingsSchedule,
    TrialRecord,
    TrialSet,
    effective_phase,
    run_experiment,
    run_trial,
    scan_phase,
)
from .optics import PortIntensities, homodyne_difference, output_intensities, real_wave_oracle, reduce_phase
from .source import AlphaMode, AmplitudeMode, PairEvent, SourceConfig, event_ready, generate_pair, tap_split
from .statistics import (
    ChshResult,
    CoincidenceTally,
    Estimator,
    analytic_coincidence,
    analytic_correlation,
    analytic_singles,
    chsh,
    chsh_from_tally,
    correlation_fair,
    correlation_postselected,
    diff_histogram,
    tally,
    visibility,
)

__version__ = "0.1.0"
