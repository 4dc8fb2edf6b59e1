//! Branch-and-Benders-cut for survivable network design with adaptive
//! subproblem selection.
//!
//! The solver installs integer capacity modules on the edges of a network so
//! that every demand can be routed in the failure-free base case and under
//! every failure scenario. Scenario feasibility is checked lazily at integer
//! master candidates; infeasible scenarios contribute Benders feasibility cuts
//! derived from Farkas certificates of the multicommodity-flow LP. The order in
//! which scenarios are checked is driven by an online logistic-regression
//! scorer and truncated by configurable stopping criteria.
//!
//! Module map:
//!
//! * [`instance`]: problem data, file formats, scenario construction, the
//!   synthetic instance generator and demand-restricted edge betweenness.
//! * [`lp`]: bounded-variable two-phase simplex with Farkas rays.
//! * [`subproblem`]: the per-scenario flow template and cut extraction.
//! * [`master`]: branch-and-bound with lazy cut rounds and the compact oracle.
//! * [`scoring`]: features, Welford normalization and the logistic model.
//! * [`selection`]: configuration identifiers, round kinds and the round loop.
//! * [`harness`]: solve logs, metrics, reports and the experiment runner.

pub mod error;
pub mod harness;
pub mod instance;
pub mod lp;
pub mod master;
pub mod scoring;
pub mod selection;
pub mod subproblem;

pub use error::{Error, Result};
pub use instance::NetworkInstance;
pub use master::{solve, solve_compact, RunConfig, SolveResult, SolveStatus};
pub use selection::{parse_config_id, StoppingConfig};

// The guide under `book/` is compiled as documentation tests so that every
// snippet there keeps building against the current API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
    #[doc = include_str!("../../../book/src/farkas.md")]
    mod farkas {}
    #[doc = include_str!("../../../book/src/benders.md")]
    mod benders {}
    #[doc = include_str!("../../../book/src/scoring.md")]
    mod scoring {}
    #[doc = include_str!("../../../book/src/selection.md")]
    mod selection {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
}
