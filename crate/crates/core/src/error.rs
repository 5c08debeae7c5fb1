use thiserror::Error;

/// Errors surfaced by the model and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("phase index {index} out of range for {levels} levels")]
    PhaseIndex { index: u32, levels: u32 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("subproblem infeasible; violated constraints: {0:?}")]
    Infeasible(Vec<String>),

    #[error("no feasible starting point after {restarts} restarts: {detail}")]
    NoFeasibleStart { restarts: usize, detail: String },

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("search space too large: {size} candidate actions (limit {limit})")]
    SearchSpace { size: u128, limit: u128 },

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
