use thiserror::Error;

/// Every failure the toolkit can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("division by zero")]
    DivisionByZero,

    #[error("pole: {0}")]
    Pole(String),

    #[error("jets are not compatible: {0}")]
    CenterMismatch(String),

    #[error("degenerate problem: f(x0) = 0, the solution is the constant x(t) = {x0}")]
    DegenerateProblem { x0: f64 },

    #[error("order {order} exceeds the supported maximum {max}")]
    OrderTooHigh { order: usize, max: usize },

    #[error("seed argument |t|/2^n = {seed} lies outside V0 = [-{r0}, {r0}]")]
    SeedOutsideV0 { seed: f64, r0: f64 },

    #[error("R iteration {index} failed: {source}")]
    Iteration { index: u32, source: Box<Error> },

    #[error("node t = {t} failed: {source}")]
    Node { t: f64, source: Box<Error> },

    #[error("point ({x}, {y}) lies outside the addition domain")]
    OutsideAdditionDomain { x: f64, y: f64 },

    #[error("sampled function is not strictly monotone near t = {t}")]
    NotMonotone { t: f64 },

    #[error("empty grid")]
    EmptyGrid,

    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),

    #[error("right-hand side failed during the step at t = {t}: {source}")]
    StepDomain { t: f64, source: Box<Error> },

    #[error("minimum step size reached at t = {t}")]
    MinStepReached { t: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),
}

impl Error {
    /// Short machine-readable tag, used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "SyntaxError",
            Error::UnknownIdentifier { .. } => "UnknownIdentifier",
            Error::Domain(_) => "DomainError",
            Error::DivisionByZero => "DivisionByZero",
            Error::Pole(_) => "PoleError",
            Error::CenterMismatch(_) => "CenterMismatch",
            Error::DegenerateProblem { .. } => "DegenerateProblem",
            Error::OrderTooHigh { .. } => "OrderTooHigh",
            Error::SeedOutsideV0 { .. } => "SeedOutsideV0",
            Error::Iteration { .. } => "IterationError",
            Error::Node { .. } => "NodeError",
            Error::OutsideAdditionDomain { .. } => "OutsideAdditionDomain",
            Error::NotMonotone { .. } => "NotMonotone",
            Error::EmptyGrid => "EmptyGrid",
            Error::RootNotBracketed(_) => "RootNotBracketed",
            Error::StepDomain { .. } => "StepDomainError",
            Error::MinStepReached { .. } => "MinStepReached",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::NonFinite(_) => "NonFinite",
        }
    }

    /// True for errors caused by a bad request rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::UnknownIdentifier { .. }
                | Error::InvalidConfig(_)
                | Error::OrderTooHigh { .. }
                | Error::DegenerateProblem { .. }
                | Error::SeedOutsideV0 { .. }
                | Error::EmptyGrid
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
