use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("symbol undefined at wavenumber {0}")]
    UndefinedSymbol(i64),

    #[error("not an equilibrium: vector-field residual {residual:e}")]
    NotAnEquilibrium { residual: f64 },

    #[error(
        "zero eigenvalue is not semi-simple: algebraic multiplicity {algebraic}, \
         geometric multiplicity {geometric}"
    )]
    NotSemiSimple { algebraic: usize, geometric: usize },

    #[error("spectral condition fails: stable spectrum reaches Re = {max_re:e} (gap {gap:e})")]
    SpectralCondition { gap: f64, max_re: f64 },

    #[error("invalid manifold parametrization: {reason} (worst residual {worst_residual:e})")]
    InvalidManifold { reason: String, worst_residual: f64 },

    #[error("graph-chart Newton iteration failed at |x| = {norm:e}; try a chart radius below {r0:e}")]
    ChartRadius { norm: f64, r0: f64 },

    #[error("trajectory leaves the chart at t = {time} (|x| = {norm:e} > r0 = {r0:e})")]
    ChartExit { time: f64, norm: f64, r0: f64 },

    #[error("finite-time breakdown at t = {time}: {reason}")]
    Breakdown {
        time: f64,
        reason: String,
        last_state: Vec<f64>,
    },

    #[error("insufficient decay data: {found} samples above the noise floor, at least 10 required")]
    InsufficientDecayData { found: usize },

    #[error("limit not reached: |y(t_end)| = {0:e} exceeds 1e-8")]
    PrematureLimit(f64),

    #[error("quadrature resolution: {0}")]
    Resolution(String),

    #[error("quadrature consistency: cross-mode leakage {leakage:e} at k = {k}")]
    QuadratureConsistency { k: i64, leakage: f64 },

    #[error("exponent constraint violated: {0}")]
    ExponentConstraint(String),

    #[error("diagnostic refused: {0}")]
    NotConverged(String),

    #[error("schema error at `{key}`: {message}")]
    Schema { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short snake-case tag used as a report status.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::Config(_) => "config_error",
            Error::UndefinedSymbol(_) => "undefined_symbol",
            Error::NotAnEquilibrium { .. } => "not_an_equilibrium",
            Error::NotSemiSimple { .. } => "not_semisimple",
            Error::SpectralCondition { .. } => "spectral_condition",
            Error::InvalidManifold { .. } => "invalid_manifold",
            Error::ChartRadius { .. } => "chart_radius",
            Error::ChartExit { .. } => "chart_exit",
            Error::Breakdown { .. } => "breakdown",
            Error::InsufficientDecayData { .. } => "insufficient_decay_data",
            Error::PrematureLimit(_) => "premature_limit",
            Error::Resolution(_) => "resolution",
            Error::QuadratureConsistency { .. } => "quadrature_consistency",
            Error::ExponentConstraint(_) => "exponent_constraint",
            Error::NotConverged(_) => "not_converged",
            Error::Schema { .. } => "schema_error",
            Error::Io(_) => "io_error",
            Error::Json(_) => "json_error",
            Error::Csv(_) => "csv_error",
        }
    }
}
