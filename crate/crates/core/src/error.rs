use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// [`Error::category`] groups them into the three failure classes the command
/// line maps onto exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("constellation order {0} is not a power of two >= 2")]
    InvalidOrder(u32),
    #[error("QAM order {0} is not an even power of two")]
    InvalidQamOrder(u32),
    #[error("invalid labeling: {0}")]
    InvalidLabeling(String),
    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("expected {expected} bits, got {actual}")]
    BitLength { expected: usize, actual: usize },
    #[error("index budget exceeded: k_guest + k_host = {requested} > T - tau = {budget}")]
    BudgetExceeded { requested: u32, budget: u32 },
    #[error("no set of {k_host} label positions selects an edge-contiguous common region under this labeling")]
    NoEdgeRegion { k_host: u32 },
    #[error("{queue} queue underflow")]
    QueueUnderflow { queue: &'static str },
    #[error("encoder role mismatch: expected {expected}")]
    RoleMismatch { expected: &'static str },
    #[error("sum value {0} is odd or outside the relay support")]
    OutOfSupport(i32),
    #[error("no symbol of the other constellation is consistent with PNC symbol {s} and own symbol {own}")]
    NoConsistentSymbol { s: i32, own: i32 },
    #[error("invalid fading parameter: {0}")]
    InvalidFading(String),
    #[error("block length {len} is not a multiple of {block}")]
    LengthMismatch { len: usize, block: usize },
    #[error(
        "timesharing weights must be non-negative, match the point count and sum to 1 (sum = {0})"
    )]
    InvalidWeights(f64),
    #[error("channel outage: |h| = {0} is below the inversion threshold")]
    Outage(f64),
    #[error("intractable enumeration: {0}")]
    Intractable(String),
    #[error("stream {0} is absent from the joint distribution")]
    StreamAbsent(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

/// Coarse failure classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Tractability,
    Runtime,
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            Error::Intractable(_) => Category::Tractability,
            Error::Numeric(_)
            | Error::Io(_)
            | Error::Outage(_)
            | Error::QueueUnderflow { .. }
            | Error::NoConsistentSymbol { .. } => Category::Runtime,
            _ => Category::Config,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
