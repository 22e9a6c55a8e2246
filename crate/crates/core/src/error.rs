use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown {kind} '{name}'; available: {}", available.join(", "))]
    NotFound {
        kind: &'static str,
        name: String,
        available: Vec<String>,
    },

    #[error("overlapping slabs: [{0:e}, {1:e}] and [{2:e}, {3:e}]")]
    Overlap(f64, f64, f64, f64),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error(
        "grid spacing {spacing:e} m resolves only {samples_per_wavelength:.2} samples per \
         wavelength ({wavelength:e} m); at least 10 required"
    )]
    Resolution {
        spacing: f64,
        wavelength: f64,
        samples_per_wavelength: f64,
    },

    #[error("quadrature did not converge: achieved relative error {achieved:e}, requested {requested:e}")]
    Accuracy { achieved: f64, requested: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

/// Fails with `InvalidInput` unless `x` is finite and strictly positive.
pub(crate) fn require_positive(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::invalid(format!("{name} must be finite and > 0, got {x}")))
    }
}

pub(crate) fn require_non_negative(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(Error::invalid(format!("{name} must be finite and >= 0, got {x}")))
    }
}

pub(crate) fn require_finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::invalid(format!("{name} must be finite, got {x}")))
    }
}
