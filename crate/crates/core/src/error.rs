use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate scaling: detuning and nonlinearity must both be nonzero")]
    DegenerateScaling,

    #[error("wrong-sign regime: lambda = {lambda}, beta = {beta} (both must be > 0)")]
    WrongSignRegime { lambda: f64, beta: f64 },

    #[error("beta = {beta} lies outside the undamped bistable window (0, 4/27)")]
    OutsideBistableWindow { beta: f64 },

    #[error("eta = {eta} exceeds 1/sqrt(3): no bistability")]
    OverdampedRegime { eta: f64 },

    #[error("trajectory escaped (|r| > 10) at step {step}")]
    TrajectoryEscaped { step: usize },

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NonHermitianInput { deviation: f64 },

    #[error("Hermite recurrence overflow at n = {n}, x = {x}")]
    RecurrenceOverflow { n: usize, x: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("time step underflow at t = {t} (dt = {dt:e})")]
    StepUnderflow { t: f64, dt: f64 },

    #[error("no dissipation: a stationary state is only unique for kappa > 0")]
    NoDissipation,

    #[error("solver stagnation: residual {residual:e} above target {target:e}")]
    SolverStagnation { residual: f64, target: f64 },

    #[error("singular linear system")]
    Singular,

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("no eigenstate of the stationary state passes the weight floor")]
    NoMetastableStates,

    #[error("the {branch} branch exists for no damping at beta = {beta}")]
    BranchVanishes { branch: &'static str, beta: f64 },

    #[error("matrix dump: {0}")]
    Dump(String),
}

pub type Result<T> = std::result::Result<T, Error>;
