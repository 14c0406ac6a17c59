use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("empty set: descriptor does not meet the window")]
    EmptySet,
    #[error("not Arakelian: the set has {holes} hole(s)")]
    NotArakelian { holes: usize },
    #[error("window exhausted: disc {index} needs radius {radius:.4} > {limit:.4}")]
    WindowExhausted { index: usize, radius: f64, limit: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("nothing to glue: the set lies inside the inner disc")]
    NothingToGlue,
    #[error("separation failure: closures of A\\B and B\\A are {distance:.4} apart")]
    SeparationFailure { distance: f64 },
    #[error("separation too small for grid: {separation:.4} < {required:.4}")]
    SeparationTooSmall { separation: f64, required: f64 },
    #[error("parameter outside polydisc: |w_{axis}| = {modulus:.4} > {radius:.4}")]
    OutsideParameterDomain { axis: usize, modulus: f64, radius: f64 },
    #[error("chart mismatch: point has |coordinate| = {modulus:.4} in chart {chart}")]
    ChartMismatch { chart: &'static str, modulus: f64 },
    #[error("no chart holds the values on component {component}")]
    ChartSpread { component: usize },
    #[error("points too far: chordal distance {distance:.3e} >= {limit:.3e}")]
    PointsTooFar { distance: f64, limit: f64 },
    #[error("Newton divergence after {iterations} iterations (residual {residual:.3e})")]
    NewtonDivergence { iterations: usize, residual: f64 },
    #[error("at cell {cell}: {source}")]
    AtCell {
        cell: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("dist_to_id too large: splitting not contractive (dist {dist:.3e}, delta {delta:.3e})")]
    NotContractive { dist: f64, delta: f64 },
    #[error("set has holes: polynomial approximation impossible")]
    SetHasHoles,
    #[error("target not reached at max degree {degree}: error {error:.3e} > {target:.3e}")]
    TargetNotReached { degree: usize, error: f64, target: f64 },
    #[error("maps too far apart: chordal distance {distance:.3e} >= {radius:.3e}")]
    MapsTooFar { distance: f64, radius: f64 },
    #[error("no avoiding perturbation found after {draws} draws")]
    NoAvoidingPerturbation { draws: usize },
    #[error("budget violation at step {step}: deviation {deviation:.3e} >= {budget:.3e}")]
    BudgetViolation { step: usize, deviation: f64, budget: f64 },
    #[error("splitting precondition failed at step {step}: dist_to_id {dist:.3e} > delta {delta:.3e}")]
    SplittingPrecondition { step: usize, dist: f64, delta: f64 },
    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("parse: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at_cell(self, cell: usize) -> Self {
        Error::AtCell { cell, source: Box::new(self) }
    }

    pub fn at_step(self, step: usize) -> Self {
        Error::AtStep { step, source: Box::new(self) }
    }

    /// Innermost error, looking through step and cell wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtCell { source, .. } | Error::AtStep { source, .. } => source.root(),
            e => e,
        }
    }
}
