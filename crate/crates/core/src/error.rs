use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("bit width {0} out of range 1..=64")]
    WidthOutOfRange(u32),
    #[error("width mismatch: {left} vs {right} bits")]
    WidthMismatch { left: u32, right: u32 },
    #[error("cannot discard {discard} bits from a {width}-bit word")]
    TruncateTooWide { discard: u32, width: u32 },

    #[error("operand width mismatch: {0:?}")]
    OperandWidths(Vec<usize>),
    #[error("unknown adder kind `{0}`")]
    UnknownAdderKind(String),
    #[error("bit value {0} is not 0 or 1")]
    NotABit(u8),
    #[error("exhaustive check of {kind} at width {width} exceeds the state-space limit")]
    ExhaustiveTooLarge { kind: String, width: usize },
    #[error("value {value} does not fit in {width} unsigned bits")]
    BitVectorRange { value: u64, width: usize },

    #[error("invalid CIC configuration: {0}")]
    InvalidCic(String),
    #[error("input sample has width {got}, expected {expected}")]
    InputWidth { got: u32, expected: u32 },
    #[error("phase {phase} out of range for ratio {ratio}")]
    PhaseOutOfRange { phase: usize, ratio: usize },
    #[error("ratio must be at least 1")]
    ZeroRatio,
    #[error("decimation ratio {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("invalid modulator configuration: {0}")]
    InvalidSdm(String),
    #[error("modulator unstable at sample {sample}: integrator {stage} reached {magnitude:e}")]
    Unstable { sample: usize, stage: usize, magnitude: f64 },
    #[error("invalid rate: {0}")]
    InvalidRate(String),

    #[error("infeasible filter specification: {0}")]
    InfeasibleFilter(String),
    #[error("filter is not a half-band decimator: {0}")]
    NotHalfBand(String),
    #[error("droop fit deviates {deviation_db:.4} dB from flat (limit {limit_db} dB)")]
    FitResidual { deviation_db: f64, limit_db: f64 },

    #[error("integrator has infinite gain at DC")]
    IntegratorPole,
    #[error("frequency {0} outside the valid range")]
    FrequencyOutOfRange(f64),
    #[error("stage index {index} out of range 1..={max}")]
    StageIndex { index: usize, max: usize },
    #[error("discard list has {got} entries, expected {expected}")]
    DiscardCount { got: usize, expected: usize },
    #[error("stage {stage}: discard of {discard} bits exceeds width {width}")]
    DiscardTooLarge { stage: usize, discard: u32, width: u32 },
    #[error("output width {b_out} exceeds register width {register}")]
    OutputTooWide { b_out: u32, register: u32 },
    #[error("stream too short: {len} samples, need at least {min}")]
    StreamTooShort { len: usize, min: usize },
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("stream rate {got} Hz does not match chain input rate {expected} Hz")]
    RateMismatch { got: f64, expected: f64 },
    #[error("empty stream")]
    EmptyStream,
    #[error("stage {stage}: {reason}")]
    Stage { stage: usize, reason: String },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("missing `# rate_hz=` header")]
    MissingRate,
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
