import math
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SCHEMA_VERSION = 1
METRICS_SCHEMA = "clcp-metrics/1"
SUPPORTED_BANDWIDTHS = (20, 40, 80, 160)

Vec3 = Tuple[float, float, float]


class Mode(str, Enum):
    BASELINE = "baseline"
    CROSSBAND = "crossband"
    CLCP = "clcp"
    ORACLE = "oracle"


class DetectionMethod(str, Enum):
    ZF_SIC = "ZF-SIC"
    MMSE_SIC = "MMSE-SIC"
    ML = "ML"


class Modulation(str, Enum):
    BPSK = "BPSK"
    QPSK = "QPSK"
    QAM16 = "16-QAM"
    QAM64 = "64-QAM"
    QAM256 = "256-QAM"
    QAM1024 = "1024-QAM"


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Versioned(Strict):
    schema_version: int = SCHEMA_VERSION

    @field_validator("schema_version")
    @classmethod
    def _known_version(cls, v: int) -> int:
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {v} (expected {SCHEMA_VERSION})")
        return v


def _check_bandwidth(v: int) -> int:
    if v not in SUPPORTED_BANDWIDTHS:
        raise ValueError(f"bandwidth must be one of {SUPPORTED_BANDWIDTHS} MHz, got {v}")
    return v


# ============ ENVIRONMENT ============

class UserSpec(Strict):
    id: int = Field(ge=0)
    position: Vec3
    antennas: int = Field(default=1, ge=1)
    max_bandwidth_mhz: int = 160
    nlos: bool = False

    @field_validator("max_bandwidth_mhz")
    @classmethod
    def _supported_bandwidth(cls, v: int) -> int:
        return _check_bandwidth(v)


class ReflectorSpec(Strict):
    position: Vec3
    velocity: Vec3 = (0.0, 0.0, 0.0)
    reflectivity: float = Field(default=0.8, gt=0.0, le=1.0)


class RoomSpec(Strict):
    lower: Vec3 = (0.0, 0.0, 0.0)
    upper: Vec3 = (10.0, 8.0, 3.0)

    @model_validator(mode="after")
    def _ordered(self) -> "RoomSpec":
        if any(hi <= lo for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("room upper corner must exceed lower corner on every axis")
        return self


class ImpairmentConfig(Strict):
    timing_jitter_ns: float = Field(default=25.0, ge=0.0)
    amplitude_offset_db: float = Field(default=1.0, ge=0.0)
    cfo_phase_range_rad: float = Field(default=math.pi, ge=0.0, le=math.pi)
    rssi_window: int = Field(default=10, ge=3)
    mad_threshold: float = Field(default=3.0, gt=0.0)


class EnvironmentConfig(Versioned):
    seed: int = 0
    bandwidth_mhz: int = 20
    center_freq_hz: float = Field(default=5.5e9, gt=0.0)
    ap_position: Vec3 = (5.0, 0.5, 2.5)
    ap_antennas: int = Field(default=4, ge=1)
    users: List[UserSpec] = []
    user_count: int = Field(default=0, ge=0)
    user_layout: Literal["random", "clusters"] = "clusters"
    cluster_size: int = Field(default=4, ge=1)
    cluster_radius_m: float = Field(default=1.5, gt=0.0)
    users_nlos: bool = False
    static_paths_per_link: int = Field(default=2, ge=0)
    static_reflectivity: float = Field(default=0.6, gt=0.0, le=1.0)
    reflectors: List[ReflectorSpec] = []
    n_reflectors: int = Field(default=3, ge=0)
    speed_range: Tuple[float, float] = (1.0, 2.0)
    reflectivity_range: Tuple[float, float] = (0.6, 0.9)
    room: RoomSpec = RoomSpec()
    nlos_attenuation_db: float = Field(default=10.0, ge=0.0)
    max_paths: int = Field(default=8, ge=1)
    samples: int = Field(default=100, ge=1)
    sample_period_us: int = Field(default=1000, ge=1)
    impairments: ImpairmentConfig = ImpairmentConfig()
    impair: bool = False

    @field_validator("bandwidth_mhz")
    @classmethod
    def _supported_bandwidth(cls, v: int) -> int:
        return _check_bandwidth(v)

    @field_validator("speed_range", "reflectivity_range")
    @classmethod
    def _range(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if v[0] <= 0 or v[1] < v[0]:
            raise ValueError(f"invalid range {v}")
        return v


# ============ ESTIMATOR / MODEL / TRAINING ============

class EstimatorConfig(Strict):
    l_max: int = Field(default=8, ge=1)
    delay_grid_step_m: Optional[float] = Field(default=None, gt=0.0)
    angle_grid_step_rad: float = Field(default=math.radians(2.0), gt=0.0)
    refine_iters: int = Field(default=20, ge=0)
    residual_stop: float = Field(default=0.01, gt=0.0, lt=1.0)
    max_delay_m: float = Field(default=100.0, gt=0.0)


class ModelConfig(Strict):
    latent_dim: int = Field(default=32, ge=1)
    lstm_hidden: int = Field(default=64, ge=1)
    conv_channels: Tuple[int, int] = (16, 32)
    kernel_size: int = Field(default=3, ge=1)
    fc_hidden: int = Field(default=64, ge=1)
    max_paths: int = Field(default=8, ge=1)
    alpha: float = Field(default=1.0, ge=0.0)
    eta: float = Field(default=0.1, ge=0.0)
    beta: float = Field(default=1e-3, ge=0.0)
    distance_scale_m: float = Field(default=50.0, gt=0.0)
    bn_momentum: float = Field(default=0.9, ge=0.0, lt=1.0)

    @field_validator("kernel_size")
    @classmethod
    def _odd_kernel(cls, v: int) -> int:
        if v % 2 == 0:
            raise ValueError("kernel_size must be odd")
        return v


class TrainConfig(Strict):
    learning_rate: float = Field(default=5e-6, gt=0.0)
    batch_size: int = Field(default=16, ge=1)
    epochs_full: int = Field(default=10, ge=0)
    epochs_partial: int = Field(default=5, ge=0)
    subsets_k: Optional[int] = Field(default=None, ge=0)
    seed: int = 0
    grad_clip: float = Field(default=10.0, gt=0.0)
    partial_views_per_instant: int = Field(default=1, ge=1)
    group_radius_m: float = Field(default=4.0, gt=0.0)


class TrainingRunConfig(Versioned):
    model: ModelConfig = ModelConfig()
    train: TrainConfig = TrainConfig()
    estimator: EstimatorConfig = EstimatorConfig()


# ============ MAC ============

class FrameBudget(Strict):
    bsr_report_bytes: int = 32
    bsr_poll_bytes: int = 21
    csi_poll_bytes: int = 21
    mu_rts_bytes: int = 20
    cts_bytes: int = 14
    tf_base_bytes: int = 28
    tf_per_user_bytes: int = 5
    ba_base_bytes: int = 22
    ba_per_user_bytes: int = 5
    sifs_us: int = 10
    control_rate_bps: float = Field(default=6e6, gt=0.0)
    legacy_preamble_us: int = 20
    he_preamble_us: int = 40
    ndp_ltf_us: int = 8
    pilot_symbols: int = 2

    def tf_bytes(self, users: int) -> int:
        return self.tf_base_bytes + self.tf_per_user_bytes * users

    def ba_bytes(self, users: int) -> int:
        return self.ba_base_bytes + self.ba_per_user_bytes * users

    def control_airtime_us(self, n_bytes: int) -> int:
        return self.legacy_preamble_us + math.ceil(n_bytes * 8 * 1e6 / self.control_rate_bps)


class SimConfig(Versioned):
    mode: Mode = Mode.BASELINE
    bandwidth_mhz: int = 20
    user_count: Optional[int] = Field(default=None, ge=1)
    traffic_bps: float = Field(default=5e6, ge=0.0)
    coherence_ms: float = Field(default=15.0, gt=0.0)
    csi_bits: int = Field(default=8, ge=1)
    grouping: int = Field(default=4, ge=1)
    feedback_period_ms: float = Field(default=15.0, gt=0.0)
    seed: int = 0
    duration_ms: float = Field(default=1000.0, gt=0.0)
    window_ms: float = Field(default=500.0, gt=0.0)
    snr_db: float = 45.0
    measurement_snr_db: float = 30.0
    t_min_ms: float = Field(default=0.5, gt=0.0)
    t_max_ms: float = Field(default=5.484, gt=0.0)
    feedback_mcs: int = Field(default=0, ge=0, le=11)
    mpdu_bytes: int = Field(default=1500, ge=1)
    idle_slot_us: int = Field(default=100, ge=1)
    oracle_predictor: bool = False
    group_radius_m: float = Field(default=4.0, gt=0.0)
    exact_user_limit: int = Field(default=6, ge=0)
    tx_power_w: float = Field(default=0.135, gt=0.0)
    idle_power_w: float = Field(default=600e-6, ge=0.0)
    environment: EnvironmentConfig = EnvironmentConfig()
    estimator: EstimatorConfig = EstimatorConfig()
    budget: FrameBudget = FrameBudget()

    @field_validator("bandwidth_mhz")
    @classmethod
    def _supported_bandwidth(cls, v: int) -> int:
        return _check_bandwidth(v)

    @model_validator(mode="after")
    def _window_fits(self) -> "SimConfig":
        if self.duration_ms < self.window_ms:
            raise ValueError("duration_ms must cover at least one measurement window")
        if self.t_min_ms > self.t_max_ms:
            raise ValueError("t_min_ms exceeds t_max_ms")
        return self


# ============ SCHEDULE ============

class RuRef(BaseModel):
    node_id: str
    level: int
    index: int
    tones: int
    extra: bool = False
    span: Tuple[int, int]


class ScheduleEntry(BaseModel):
    ru: RuRef
    users: List[int] = []
    mcs: Dict[int, int] = {}
    t_k_s: Dict[int, float] = {}
    capacity: float = 0.0


class Schedule(BaseModel):
    bandwidth_mhz: int
    entries: List[ScheduleEntry]
    t_s: Optional[float] = None
    capacity: float = 0.0

    def users(self) -> List[int]:
        return [u for e in self.entries for u in e.users]

    def empty_entries(self) -> List[ScheduleEntry]:
        return [e for e in self.entries if not e.users]


# ============ METRICS ============

class WindowRecord(BaseModel):
    window_start_ms: float
    throughput_bps: float
    sounding_fraction: float


class EvmRecord(BaseModel):
    time_us: int
    link: int
    evm_db: float
    source: str


class PerRecord(BaseModel):
    time_us: int
    user: int
    mcs: int
    rate_bps: float
    per: float
    mpdus: int
    delivered: int


class MacEvent(BaseModel):
    """One frame or gap on the shared medium; ``users`` take part, and transmit iff ``tx``."""

    round: int
    time_us: int
    duration_us: int
    kind: str
    category: Literal["sounding", "control", "data", "sifs", "idle"]
    users: List[int] = []
    tx: bool = False
    size_bytes: int = 0


class SimMetrics(BaseModel):
    schema_id: str = Field(default=METRICS_SCHEMA, alias="schema")
    mode: Mode
    seed: int
    users: int
    bandwidth_mhz: int
    duration_us: int
    throughput_bps: float
    windows: List[WindowRecord]
    offered_bytes: Dict[int, int]
    delivered_bytes: Dict[int, int]
    airtime_us: Dict[str, int]
    sounding_fraction: float
    wake_counts: Dict[int, int]
    sleep_fractions: Dict[int, float]
    energy_j: Dict[int, float]
    evm_records: List[EvmRecord] = []
    per_records: List[PerRecord] = []

    model_config = ConfigDict(populate_by_name=True)


# ============ MANIFEST ============

class RunManifest(BaseModel):
    command: str
    config_path: Optional[str] = None
    seeds: List[int] = []
    output_dir: str
    params: Dict[str, Any] = {}
    artifact_hashes: Dict[str, str] = {}
    version: str


# ============ SERVICE BODIES ============

class CsiPayload(BaseModel):
    real: List[List[float]]
    imag: List[List[float]]
    bandwidth_mhz: int = 20
    center_freq_hz: float = 5.5e9
    observed_mask: Optional[List[bool]] = None
    timestamp_us: int = 0


class PathRow(BaseModel):
    theta: float
    d: float
    a: float
    phi: float


class EstimateRequest(BaseModel):
    csi: CsiPayload
    estimator: EstimatorConfig = EstimatorConfig()


class EstimateResponse(BaseModel):
    paths: List[PathRow]
    residual_power: float


class PredictRequest(BaseModel):
    group_id: int
    observed: Dict[int, List[PathRow]]
    targets: List[int]
    strict: bool = True


class PredictResponse(BaseModel):
    group_id: int
    predictions: Dict[int, CsiPayload]


class ScheduleUser(BaseModel):
    id: int
    bsr_bytes: int = Field(ge=0)
    csi: CsiPayload


class ScheduleRequest(BaseModel):
    bandwidth_mhz: int
    users: List[ScheduleUser]
    ap_antennas: int = 1
    user_antennas: int = 1
    snr_db: float = 45.0
    t_min_ms: float = 0.5


class EvmRequest(BaseModel):
    pred: CsiPayload
    gt: CsiPayload


class EvmResponse(BaseModel):
    evm_db: float
