use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum CzError {
    /// A physical parameter is outside its admissible domain.
    #[error("parameter domain: {0}")]
    ParameterDomain(String),

    /// IST inputs violate the single-well condition E_L > E_J.
    #[error("single-well violation: E_L = {el} GHz must exceed E_J = {ej} GHz")]
    SingleWell { el: f64, ej: f64 },

    /// Inconsistent model construction input.
    #[error("config error: {0}")]
    Config(String),

    /// A requested dressed state could not be labeled unambiguously.
    #[error("labeling error: {0}")]
    Labeling(String),

    /// The propagator lost unitarity beyond tolerance.
    #[error("integration failure: unitarity defect {defect:.3e} exceeds {tol:.1e}; reduce dt")]
    Integration { defect: f64, tol: f64 },

    /// A phase is undefined because the referenced amplitude vanishes.
    #[error("undefined phase: {0}")]
    PhaseUndefined(String),

    /// An invalid pulse definition.
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    /// A scenario postcondition failed on otherwise valid results.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// Optimization terminated without convergence.
    #[error("optimization did not converge within {iters} iterations (best cost {best:.3e})")]
    Unconverged { iters: usize, best: f64 },

    /// Refusing to overwrite results produced from a different configuration.
    #[error("output {path} was produced from a different config (hash {found} != {expected}); use --force to overwrite")]
    HashMismatch {
        path: String,
        found: String,
        expected: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
