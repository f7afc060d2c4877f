use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("smoothness component r[{index}] = {value} must be positive and finite")]
    NonPositiveSmoothness { index: usize, value: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite sample {value} at grid point {point:?}")]
    NonFiniteSample { point: Vec<f64>, value: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("exponent {name} = {value} outside {allowed}")]
    InvalidExponent {
        name: &'static str,
        value: f64,
        allowed: &'static str,
    },

    #[error(
        "frequency bound {bound} on axis {axis} exceeds the grid Nyquist limit {nyquist}; \
         use a finer grid (more samples or a smaller box)"
    )]
    Nyquist {
        axis: usize,
        bound: f64,
        nyquist: f64,
    },

    #[error(
        "grid under-resolves spectrum: residual norm {residual:e} exceeds tolerance {tolerance:e}"
    )]
    UnresolvedSpectrum { residual: f64, tolerance: f64 },

    #[error("spectral derivative rejected: high-frequency energy fraction {fraction:e} exceeds {limit:e}")]
    HighFrequency { fraction: f64, limit: f64 },

    #[error(
        "field is not band-limited to the requested box: out-of-band energy fraction {fraction:e}"
    )]
    NotBandLimited { fraction: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("family member n = {n} lies outside the unit ball: block norm {norm}")]
    NotInClass { n: u32, norm: f64 },

    #[error("inequality of different metrics violated: {0}")]
    InequalityViolated(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures raised by a numerical guard (resolution, band-limit,
    /// noise floor, class membership) rather than by invalid input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteSample { .. }
                | Error::Nyquist { .. }
                | Error::UnresolvedSpectrum { .. }
                | Error::HighFrequency { .. }
                | Error::NotBandLimited { .. }
                | Error::DegenerateFit(_)
                | Error::NotInClass { .. }
                | Error::InequalityViolated(_)
        )
    }

    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NonPositiveSmoothness { .. }
                | Error::InvalidGrid(_)
                | Error::GridMismatch(_)
                | Error::InvalidExponent { .. }
                | Error::InvalidArgument(_)
                | Error::Format(_)
                | Error::Json(_)
        )
    }
}

/// Checks `p` lies in (1, ∞].
pub(crate) fn check_lebesgue_exponent(name: &'static str, p: f64) -> Result<()> {
    if p.is_nan() || p <= 1.0 {
        return Err(Error::InvalidExponent {
            name,
            value: p,
            allowed: "(1, ∞]",
        });
    }
    Ok(())
}
