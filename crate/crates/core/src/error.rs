use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Rotation angle too close to pi for a unique logarithm.
    #[error("rotation angle {angle} is within 1e-6 of pi; logarithm is not unique")]
    AngleNearPi { angle: f64 },
    #[error("time {t} outside queryable domain [{start}, {end}]")]
    OutOfDomain { t: f64, start: f64, end: f64 },
    #[error("trajectory needs at least {min} knots, got {got}")]
    TooFewKnots { min: usize, got: usize },
    #[error("invalid knot spacing {0}")]
    InvalidSpacing(f64),
    #[error("backward needs a scalar output, got a {rows}x{cols} tensor")]
    NonScalarOutput { rows: usize, cols: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(&'static str),
    #[error("event image norm {norm} below 1e-12")]
    ZeroNorm { norm: f64 },
    #[error("image {width}x{height} smaller than the {window}x{window} window")]
    ImageTooSmall { width: usize, height: usize, window: usize },
    #[error("event {index}: {reason}")]
    InvalidEvent { index: usize, reason: &'static str },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
