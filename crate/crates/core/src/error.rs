use thiserror::Error;

/// Errors raised by the kernels, the analytic observables and the Fock-space oracle.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input outside domain: {0}")]
    Domain(String),

    #[error(
        "{what} did not converge: error estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}"
    )]
    Convergence {
        what: &'static str,
        estimate: f64,
        tolerance: f64,
    },

    #[error("truncation leakage {leak:.3e} in {mode} (limit {limit:.1e}); try at least {suggested} levels")]
    Leakage {
        mode: &'static str,
        leak: f64,
        limit: f64,
        suggested: usize,
    },

    #[error(
        "Poisson tail {tail:.3e} beyond n_max = {n_max} exceeds 1e-12; need n_max >= {required}"
    )]
    Truncation {
        n_max: usize,
        tail: f64,
        required: usize,
    },

    #[error("dimension {dim} exceeds memory budget {budget}")]
    Budget { dim: usize, budget: usize },

    #[error("Wigner grid does not cover the state: integral of W is {integral:.6}")]
    GridCoverage { integral: f64 },

    #[error("step size underflow at tau = {tau}")]
    StepUnderflow { tau: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {value}")))
    }
}

pub(crate) fn ensure_non_negative(name: &str, value: f64) -> Result<()> {
    ensure_finite(name, value)?;
    if value < 0.0 {
        return Err(Error::Domain(format!("{name} must be >= 0, got {value}")));
    }
    Ok(())
}
