"""gripforge: grip-force glove analytics.

Measurement-to-model chain for 12-sensor, 50 Hz grip-force gloves: FSR
voltage-divider physics and calibration, a bit-exact stream codec and
session store, an expert/novice session simulator, fixed-window
spatiotemporal profiling, a 7x7 self-organizing map whose quantization
error separates skill levels, and the accompanying inferential statistics.
"""

from .acquisition import (
    BatteryStatus,
    Frame,
    Sample,
    Session,
    battery_check,
    decode_frame,
    encode_frame,
    read_session,
    stream_to_session,
    write_session,
)
from .profiling import (
    SensorSeries,
    SessionStats,
    WindowedProfile,
    descriptive,
    sensor_series,
    session_std,
    task_metrics,
    variability_curve,
    window_amv,
)
from .sensors import (
    CalibrationCurve,
    DividerParams,
    SensorId,
    fsr_to_voltage,
    validate_calibration,
    voltage_to_force,
)
from .simulate import (
    DEFAULT_EXPERT_PROFILE,
    DEFAULT_NOVICE_PROFILE,
    GeneratorConfig,
    SkillProfile,
    interpolate_profile,
    simulate_cohort,
    simulate_session,
)
from .som import (
    SomGrid,
    TrainingSchedule,
    bmu,
    build_inputs,
    neighborhood,
    quantization_error,
    som_qe_curve,
    train,
)
from .stats import anova_2x2, f_cdf, paired_t, t_cdf, two_group_t

__version__ = "0.1.0"
