"""Link-level simulator and analytical BER engine for non-coherent
ambient backscatter under time-selective Rayleigh fading."""

from .analysis import (
    BerMethod,
    BerResult,
    ChannelStats,
    analytical_ber,
    ma_ber,
    ma_ber_asymptotic,
    ma_conditional_ber,
    ma_ook_ber,
    ma_variances,
    ook_ber,
    ook_variances,
    sa_ber_approx,
    sa_ber_asymptotic,
    sa_ber_exact,
    sa_channel_stats,
    sa_cov,
    sa_var0,
    sa_var1,
)
from .channel import (
    DopplerSpec,
    FadingProcess,
    LinkKind,
    complex_normal,
    correlation_factor,
)
from .config import (
    AoaKind,
    AoaModel,
    Detector,
    SystemConfig,
    alpha_from_attenuation_db,
)
from .montecarlo import (
    ExperimentPlan,
    SweepAxis,
    SweepResult,
    measure_snr_gain,
    run_point,
    run_sweep,
)
from .phy import (
    AmbientSource,
    ArrayGeometry,
    Encoding,
    NoiseSpec,
    SourceKind,
    TagParams,
    ma_received_frame,
    sa_received_frame,
    tag_waveform,
)
from .receiver import (
    MmseWeights,
    antenna_gain,
    decide_manchester,
    decide_ook,
    dl_cancel,
    ma_effective_frame,
    mmse_weights,
    ook_threshold,
    test_statistic_ook,
    test_statistics_manchester,
)

__version__ = "0.1.0"
