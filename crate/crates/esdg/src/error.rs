use thiserror::Error;

/// Errors surfaced by operator construction, mesh building and RHS evaluation.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("polynomial degree must be at least 1, got {0}")]
    InvalidDegree(usize),

    #[error("quadrature node solve did not converge for node index {index} (degree {degree})")]
    RootSolveFailed { degree: usize, index: usize },

    #[error("duplicate interpolation nodes at indices {0} and {1}")]
    DuplicateNodes(usize, usize),

    #[error("nonpositive Jacobian {value:.6e} in element {element} at node {node}")]
    NonPositiveJacobian {
        element: usize,
        node: usize,
        value: f64,
    },

    #[error("degenerate face geometry: surface element vanishes on element {element}, side {side}, point {point}")]
    DegenerateFace {
        element: usize,
        side: usize,
        point: usize,
    },

    #[error("mesh is not watertight: face mismatch {mismatch:.3e} exceeds tolerance")]
    NotWatertight { mismatch: f64 },

    #[error(
        "invalid state in element {element} at node {node}: rho = {rho:.6e}, p = {pressure:.6e}"
    )]
    InvalidState {
        element: usize,
        node: usize,
        rho: f64,
        pressure: f64,
    },

    #[error("entropy variable w5 = {0:.6e} must be negative")]
    InvalidEntropyState(f64),

    #[error("nonpositive viscosity coefficient b({x}) = {value:.6e}")]
    NonPositiveViscosity { x: f64, value: f64 },

    #[error("time series samples must have strictly increasing time, got {t} after {previous}")]
    NonMonotoneSeries { t: f64, previous: f64 },

    #[error("zero-measure element {0} in time step estimate")]
    ZeroMeasureElement(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("mesh file error: {0}")]
    MeshFormat(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl SolverError {
    /// Process exit code used by the batch driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            SolverError::Config(_) => 2,
            SolverError::InvalidState { .. } | SolverError::InvalidEntropyState(_) => 3,
            SolverError::Io(_) => 4,
            _ => 2,
        }
    }
}
