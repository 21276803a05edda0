use crate::lp::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("coalition is empty")]
    EmptyCoalition,
    #[error("player {player} out of range for a game with {players} players")]
    PlayerOutOfRange { player: usize, players: usize },
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("design space of player {0} is empty")]
    EmptyDesignSpace(usize),
    #[error("design spaces are unbounded (recession direction {0:?})")]
    UnboundedDesignSpace(Vec<f64>),
    #[error("{found} players exceeds the limit of {limit}")]
    TooManyPlayers { found: usize, limit: usize },
    #[error("{found} goods exceeds the limit of {limit}")]
    TooManyGoods { found: usize, limit: usize },
    #[error("multiplicative objections need positive incumbent utilities, player {player} has {value}")]
    NonPositiveIncumbentUtility { player: usize, value: f64 },
    #[error("point is not interior to the utility set (violation {violation:e})")]
    PointNotInterior { violation: f64 },
    #[error("every ray stays inside the utility set; no cut exists")]
    AllRaysInterior,
    #[error("moment curve parameters must be strictly increasing and greater than one")]
    BadMoments,
    #[error("invalid instance: {0}")]
    BadInstance(String),
    #[error("negative distance {0}")]
    NegativeDistance(f64),
    #[error("scenario has no rider with a nonzero valuation")]
    EmptyScenario,
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("parse error in {field}: {message}")]
    Parse { field: String, message: String },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { field: field.into(), message: message.into() }
    }
}
