"""Stacked-autoencoder anomaly detection for rotary-machine telemetry.

Train on windows of healthy sensor data, derive traffic-light
reconstruction-error thresholds, and run a streaming edge detector that
flags anomalies and forwards only the raw samples surrounding them.
"""

from .estimator import StackedAutoencoder
from .io import (
    DataError,
    ModelBundle,
    ModelFormatError,
    export_plot_data,
    load_model,
    read_all_channels,
    read_csv,
    save_model,
    write_csv,
)
from .nn import (
    IDENTITY,
    TANH,
    DenseLayer,
    TrainConfig,
    TrainState,
    backward,
    dense_forward,
    forward_stack,
    init_layer,
    mse,
    sgd_step,
    squared_distance,
    train_epochs,
)
from .signals import (
    ChannelSeries,
    CorrelationMatrix,
    NormStats,
    RestParams,
    Window,
    correlation_matrix,
    default_rest_tolerance,
    denormalize,
    detect_resting,
    fit_norm_stats,
    mark_resting,
    normalize,
    scale_from_unit,
    scale_to_unit,
    segment,
)
from .stack import (
    StackedModel,
    StackSpec,
    default_spec,
    encode,
    fit_stacked_model,
    reconstruct,
    reconstruction_error,
    train_final_decoder,
    train_stack,
)
from .stream import (
    AnomalyEvent,
    DetectorMode,
    StreamDetector,
    TransmissionSegment,
    WindowVerdict,
    bandwidth_report,
    batch_verdicts,
    first_alarm_index,
    raise_alarm,
    window_verdict,
)
from .synth import (
    FaultSpec,
    ScenarioSpec,
    fault_scenarios,
    generate,
    generate_corpus,
    healthy_scenarios,
)
from .thresholds import (
    DEFAULT_PERCENTILE,
    RESTING_SENTINEL,
    ThresholdSet,
    TrafficLight,
    TrafficLightClassifier,
    classify,
    fit_thresholds,
)

__version__ = "0.1.0"
