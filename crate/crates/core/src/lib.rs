//! Systemic-risk ranking engine for interbank networks.
//!
//! The crate simulates directed interbank exposure networks, derives balance
//! sheets consistent with those exposures, and ranks institutions by a
//! systemic impact index computed with an averaged fixed-point iteration.
//! The iteration is benchmarked against an exact constrained least-squares
//! oracle on the probability simplex, stressed with Monte-Carlo deposit
//! shocks, and the resulting scores are classified into SIFI buckets with
//! distribution-free confidence machinery. An absorbing-Markov-chain
//! baseline (SinkRank) is included for comparison.
//!
//! Module map:
//! - [`netcore`]: graph type, random generators, degrees, centralities
//! - [`balance`]: balance sheets, solvency indices, vulnerability weights
//! - [`impact`]: iteration matrices and the averaged fixed-point solver
//! - [`oracle`]: simplex projection, projected-gradient solver, power method
//! - [`shockmc`]: deposit shocks and Monte-Carlo impact estimation
//! - [`stats`]: ECDF, DKW bands, quantile CIs, SIFI classification
//! - [`sinkrank`]: absorbing-chain baseline ranking
//! - [`pipeline`]: end-to-end experiment assembly shared with the CLI

pub mod balance;
pub mod error;
pub mod impact;
pub mod linalg;
pub mod netcore;
pub mod oracle;
pub mod pipeline;
pub mod rng;
pub mod shockmc;
pub mod sinkrank;
pub mod stats;

pub use error::{Error, Result};
pub use netcore::DirectedFinancialNetwork;
