//! Non-transferable-utility linear production games.
//!
//! The crate covers core membership testing by least objections, cutting
//! plane optimization over the core with intersection cuts, brute-force
//! oracles for small games and generators for the standard instance
//! families.

pub mod error;
pub mod game;
pub mod instances;
pub mod lp;
pub mod cuts;
pub mod membership;
pub mod optimizer;
pub mod oracle;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use game::{
    BalanceCheck, BalanceStatus, BalancednessVerdict, Coalition, ConstraintSystem, DesignPlan, Game, Rational,
    UtilityVector,
};
