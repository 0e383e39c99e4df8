use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExteriorError {
    #[error("degree overflow: {0} + {1} > 6")]
    DegreeOverflow(usize, usize),
    #[error("degree {found} is below the minimum {min} for this operation")]
    DegreeUnderflow { found: usize, min: usize },
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("symplectic form is degenerate")]
    DegenerateOmega,
    #[error("metric Gram matrix is not symmetric positive definite")]
    BadMetric,
    #[error("frame check failed: {0}")]
    InvalidFrame(String),
    #[error("cannot parse form: {0}")]
    Parse(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HitchinError {
    #[error("3-form is not positive (lambda = {0})")]
    NotPositive(f64),
    #[error("3-form is not primitive (|omega ^ phi| = {0})")]
    NotPrimitive(f64),
    #[error("3-form is not closed (|d phi| = {0})")]
    NotClosed(f64),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("no ansatz family for preset `{0}`")]
    NoAnsatz(String),
    #[error("expected {expected} parameters, got {found}")]
    ParameterCount { expected: usize, found: usize },
    #[error("ansatz member is not {0}")]
    InvalidAnsatz(&'static str),
    #[error("almost complex structure required")]
    MissingJ,
    #[error("metric is singular or not positive definite")]
    SingularMetric,
    #[error(transparent)]
    Hitchin(#[from] HitchinError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("positivity lost at t = {t}: lambda = {lambda}")]
    PositivityLost { t: f64, lambda: f64 },
    #[error("|phi|^2 = {0} is below the dual Ricci floor")]
    BelowLogFloor(f64),
    #[error("flow velocity leaves the ansatz span (relative residual {0:e})")]
    NotInvariant(f64),
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("invalid flow specification: {0}")]
    InvalidSpec(String),
    #[error("invalid initial data: {0}")]
    InvalidInitial(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Hitchin(#[from] HitchinError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
}

impl FlowError {
    /// `true` for failures of the geometry (as opposed to bad input).
    pub fn is_geometric(&self) -> bool {
        matches!(
            self,
            FlowError::PositivityLost { .. }
                | FlowError::BelowLogFloor(_)
                | FlowError::NotInvariant(_)
                | FlowError::StepUnderflow(_)
                | FlowError::Hitchin(_)
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolError {
    #[error("covector xi vanishes")]
    DegenerateXi,
    #[error("constraint space has dimension {0}, expected 5")]
    ConstraintDimension(usize),
    #[error(transparent)]
    Hitchin(#[from] HitchinError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemiflatError {
    #[error("grid size {0} is below the minimum of 8")]
    GridTooSmall(usize),
    #[error("metric lost positivity at grid point {index:?} (det = {det})")]
    PositivityLost { index: [usize; 3], det: f64 },
    #[error("initial data violates the SPD bound: {0}")]
    InitialData(String),
    #[error("time step {dt} exceeds the stability bound {bound}")]
    Cfl { dt: f64, bound: f64 },
    #[error("trajectory too short for central differences")]
    ShortTrajectory,
    #[error("field shape mismatch")]
    Shape,
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
}
