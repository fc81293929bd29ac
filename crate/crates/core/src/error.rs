use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    #[error("malformed word `{word}`: {reason}")]
    MalformedWord { word: String, reason: String },

    #[error("invalid presentation: {0}")]
    InvalidPresentation(String),

    #[error("psi not an automorphism on homology")]
    SingularMonodromy,

    #[error("unit-modulus spectrum (margin {margin:.3e})")]
    UnitModulusSpectrum { margin: f64 },

    #[error("contraction unreachable within p_max = {p_max}")]
    ContractionUnreachable { p_max: u32 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("invalid diffeomorphism: {0}")]
    InvalidDiffeo(String),

    #[error("missing image for generator `{0}`")]
    MissingImage(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("unknown gallery `{0}`")]
    UnknownGallery(String),

    #[error("{0}")]
    Numeric(String),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
