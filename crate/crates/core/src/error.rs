use thiserror::Error;

/// Errors raised by the operator calculus.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("site budget exceeded: {sites} sites requested, budget is {budget}")]
    Budget { sites: usize, budget: usize },

    #[error("singular symbol at frequency index {index}: {detail}")]
    SingularSymbol { index: usize, detail: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("grid does not resolve eps = {eps}: spacing {spacing} > sqrt(eps); need n >= {required_n}")]
    Resolution {
        eps: f64,
        spacing: f64,
        required_n: usize,
    },

    #[error("power iteration did not converge after {iterations} iterations (last gap {gap:e})")]
    PowerIteration { iterations: usize, gap: f64 },

    #[error("Neumann series diverges: empirical contraction ratio {ratio:.4} after {iterations} terms")]
    NeumannDivergence { ratio: f64, iterations: usize },

    #[error("Neumann series did not reach tolerance in {iterations} terms (last term ratio {ratio:e})")]
    NeumannStalled { ratio: f64, iterations: usize },

    #[error("quadrature did not converge at r = {r}, zeta = {zeta}: estimated error {err:e}")]
    Quadrature { r: f64, zeta: f64, err: f64 },

    #[error("representation unavailable: {0}")]
    Representation(String),

    #[error("CFL violation: {0}")]
    Cfl(String),

    #[error("invalid weights: {0}")]
    Weights(String),

    #[error("metadata mismatch: {0}")]
    Metadata(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
