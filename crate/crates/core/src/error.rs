use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableauError {
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("inconsistent tableau dimensions: {0}")]
    Dimension(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("tree order {order} outside supported range 1..={max}")]
pub struct TreeOrderError {
    pub order: usize,
    pub max: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("stability function is degenerate: P and Q share a root near {root}")]
    Degenerate { root: f64 },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular (zero pivot in column {0})")]
    Singular(usize),
    #[error("matrix structure {found} cannot be handled by solver {solver}")]
    Incompatible { found: String, solver: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("Newton iteration did not converge in stage {stage} after {iterations} iterations (last residual {residual:e})")]
    NewtonFailure {
        stage: usize,
        iterations: usize,
        residual: f64,
    },
    #[error("linear solve failed in stage {stage}: {source}")]
    LinearSolve {
        stage: usize,
        #[source]
        source: LinalgError,
    },
    #[error("tableau `{0}` is not diagonally implicit")]
    NotDirk(String),
    #[error("invalid stepper configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("step {step} (t = {time}) failed: {source}")]
pub struct IntegrationError {
    pub step: usize,
    pub time: f64,
    #[source]
    pub source: StepError,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("unknown problem `{0}`")]
    Unknown(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("slope fit needs at least two points, got {0}")]
    InsufficientData(usize),
    #[error("reference solution not converged: |y(dt) - y(dt/2)| = {difference:e} exceeds {tolerance:e}")]
    ReferenceQuality {
        difference: f64,
        tolerance: f64,
        coarse: Vec<f64>,
        fine: Vec<f64>,
    },
    #[error("no step sizes given")]
    NoStepSizes,
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error("reference cache: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed reference cache file {path}: {message}")]
    Cache { path: String, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefineError {
    #[error("initial residual {residual:e} exceeds the local-refinement basin bound {bound:e}")]
    OutOfBasin { residual: f64, bound: f64 },
    #[error("refinement stagnated at residual {residual:e} after {iterations} iterations")]
    Stagnation {
        residual: f64,
        iterations: usize,
        best: Box<crate::tableau::ButcherTableau<f64>>,
    },
    #[error("invalid refinement spec: {0}")]
    Spec(String),
}
