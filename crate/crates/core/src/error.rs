use thiserror::Error;

use crate::trajectory::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("layout mismatch: expected (n={expected_n}, J_max={expected_j}), got (n={got_n}, J_max={got_j})")]
    LayoutMismatch {
        expected_n: usize,
        expected_j: usize,
        got_n: usize,
        got_j: usize,
    },

    #[error("node count {nodes} below exactness threshold {required} for J_max={j_max}")]
    TooFewNodes {
        nodes: usize,
        required: usize,
        j_max: usize,
    },

    #[error("grid has {got} values, transform expects {expected}")]
    NodeCountMismatch { expected: usize, got: usize },

    #[error("field is not supported on a single eigenvalue level (levels {0:?})")]
    NotSingleLevel(Vec<usize>),

    #[error("graph is no longer star-shaped: rho = {rho:.3e} at node {node}")]
    NotStarShaped { node: usize, rho: f64 },

    #[error("escape at s = {s:.4}: sup|u| = {sup_norm:.3e} exceeds {threshold:.3e}")]
    Escape {
        s: f64,
        sup_norm: f64,
        threshold: f64,
        last_valid: Box<Trajectory>,
    },

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("trajectory time grid is not uniform at sample {0}")]
    NonUniformGrid(usize),

    #[error("horizon too short: forcing on level {level} decays at rate {rate:.4}, needs > {needed:.4}")]
    HorizonTooShort { level: usize, rate: f64, needed: f64 },

    #[error("ball too large: Picard difference ratio {ratio:.4} >= 1 for 3 consecutive iterations")]
    NonContraction { ratio: f64, differences: Vec<f64> },

    #[error("Picard iteration did not reach tolerance {tol:.1e} in {iterations} iterations (last difference {last:.3e})")]
    NotConverged {
        iterations: usize,
        tol: f64,
        last: f64,
    },

    #[error("telescoped integral on level {level} does not converge (forcing rate {rate:.4} <= {lambda:.4})")]
    Divergent { level: usize, rate: f64, lambda: f64 },

    #[error("prescription iterate left the ball of radius {radius:.3e} (history {history:?})")]
    LeftBall { radius: f64, history: Vec<f64> },

    #[error("trajectory is not on a stable manifold: {0}")]
    NotOnManifold(String),

    #[error("fit window has too few usable samples ({0})")]
    InsufficientData(usize),

    #[error("arrival-time grid covers only {:.1}% of the annulus (need 95%)", .coverage * 100.0)]
    CoverageGap { coverage: f64 },

    #[error("malformed trajectory file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
