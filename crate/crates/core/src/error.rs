use crate::joints::Joint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("depth array has {len} samples, expected {width}x{height}")]
    FrameSize { width: usize, height: usize, len: usize },
    #[error("depth value {value} mm at pixel ({u}, {v}) is outside (0, 10000)")]
    DepthOutOfRange { u: usize, v: usize, value: u32 },
    #[error("point is behind the camera (z = {0} mm)")]
    BehindCamera(f64),
    #[error("invalid grid configuration: {0}")]
    InvalidGrid(String),
    #[error("window offset {offset:?} outside [0, {max}]^3")]
    WindowOutOfRange { offset: [usize; 3], max: usize },
    #[error("template crop has {found} occupied columns, need at least {required}")]
    BadCrop { found: usize, required: usize },
    #[error("pose has no visible joints")]
    NoVisibleJoints,
    #[error("joint {0} lies outside the template cube")]
    JointOutsideTemplate(Joint),
    #[error("exemplar database is empty")]
    EmptyDatabase,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("pose sampler rejected {0} consecutive samples")]
    SamplingExhausted(usize),
    #[error("non-finite label for joint {0}")]
    NonFiniteLabel(Joint),
    #[error("need at least {required} known joints, got {found}")]
    TooFewJoints { required: usize, found: usize },
    #[error("hand is entirely outside the view frustum")]
    OutsideFrustum,
    #[error("frame mismatch: {0}")]
    FrameMismatch(String),
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("no frame carries annotations from two annotators")]
    InsufficientAnnotators,
    #[error("unknown joint name {0:?}")]
    UnknownJoint(String),
    #[error("thresholds must be finite and sorted ascending")]
    UnsortedThresholds,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid skeleton table: {0}")]
    Skeleton(String),
}
