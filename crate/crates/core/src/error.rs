use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-manifold mesh: edge ({0}, {1}) is shared by {2} faces")]
    NonManifoldMesh(usize, usize, usize),
    #[error("inconsistent face orientation across edge ({0}, {1})")]
    NonOrientable(usize, usize),
    #[error("degenerate face {0} (area {1:e})")]
    DegenerateFace(usize, f64),
    #[error("non-finite vertex position at index {0}")]
    NonFiniteVertex(usize),
    #[error("face {face} references vertex {vertex} but the mesh has {count} vertices")]
    BadIndex {
        face: usize,
        vertex: usize,
        count: usize,
    },
    #[error("field has {got} entries, mesh has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
    #[error("mesh has {0} connected components")]
    DisconnectedMesh(usize),
    #[error(
        "triangle quality collapsed to {quality:.3e} (threshold {threshold:.3e}) at t = {time}"
    )]
    QualityCollapse {
        quality: f64,
        threshold: f64,
        time: f64,
    },
    #[error("mesh parse error: {0}")]
    Parse(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("generated mesh self-intersects (faces {0} and {1})")]
    SelfIntersecting(usize, usize),
    #[error("history is empty")]
    EmptyHistory,
    #[error("time {t} is not before the base time {t0}")]
    TimeOutOfRange { t: f64, t0: f64 },
    #[error("only {0} vertices inside the fitting ball (need at least {1})")]
    InsufficientSupport(usize, usize),
    #[error("normal covariance is nearly isotropic (ratio {0:.3}); not a neck")]
    DegenerateFit(f64),
    #[error("neck track lost at t = {time}: {reason}")]
    TrackLost { time: f64, reason: String },
    #[error("sequence too short: T = {0}, need T >= 2")]
    TooShort(usize),
    #[error("sequence fails the lemma hypotheses: {0}")]
    HypothesesFail(String),
    #[error("generator {family} produced an invalid sequence at index {index}: {reason}")]
    GeneratorInvalid {
        family: String,
        index: usize,
        reason: String,
    },
    #[error("cylinder gate failed at snapshot {index} (s = {s}): {reason}")]
    GateFailed {
        index: usize,
        s: f64,
        reason: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
