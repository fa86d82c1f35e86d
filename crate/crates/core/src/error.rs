use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("wavelength {wavelength_um} µm is outside the valid range [{min_um}, {max_um}] µm of model `{model}`")]
    OutOfRange {
        model: String,
        wavelength_um: f64,
        min_um: f64,
        max_um: f64,
    },

    #[error("unknown material `{0}`")]
    UnknownMaterial(String),

    #[error("material data: {0}")]
    MaterialData(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("eigensolver did not converge after {iterations} iterations (worst relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("wavelength {wavelength_um} µm is too close to the edge of the sampled range [{min_um}, {max_um}] µm")]
    NearRangeEdge {
        wavelength_um: f64,
        min_um: f64,
        max_um: f64,
    },

    #[error("phase-mismatch denominator k_p - k_s - k_i = {denominator:.6e} rad/µm is not positive; no forward quasi-phase-matching period exists")]
    NonPositiveMismatch { denominator: f64 },

    #[error("grids do not match")]
    GridMismatch,

    #[error("field is identically zero")]
    DegenerateField,

    #[error("tag stream is not sorted at record {index}")]
    UnsortedStream { index: usize },

    #[error("no coincidences in {0}")]
    NoCoincidences(&'static str),

    #[error("tag file: {0}")]
    TagFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of a computation on valid input, as opposed to bad
    /// input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. }
                | Error::Numerical(_)
                | Error::NonPositiveMismatch { .. }
                | Error::DegenerateField
                | Error::NoCoincidences(_)
        )
    }
}
