//! Content offloading on the network edge.
//!
//! A toolkit for reasoning about how popular content reaches interested
//! mobile nodes (MNs) when an operator pre-places copies on small cells (SCs)
//! and on a few MNs, lets opportunistic contacts spread it, and falls back to
//! the macro base station when a deadline (TTL) expires.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: scenario vocabulary, costs, placements and their validity rules.
//! - [`analytics`]: mean-field closed forms for holders, requesters, delivery
//!   probability, delay and cost, plus a generalized ODE integrator
//!   (content drops, bulk requester arrivals).
//! - [`mctrace`]: synthetic contact traces (heterogeneous Poisson meetings,
//!   community mobility) and trace statistics.
//! - [`sim`]: Monte Carlo dissemination over traces and an exact CTMC oracle.
//! - [`optimizer`]: cost-minimizing initial placement, closed form and numeric.
//! - [`workload`]: popularity sampling and diurnal multi-content scenarios.
//! - [`cli`]: the `edgecache` batch front-end.

pub mod analytics;
pub mod cli;
pub mod error;
pub mod mctrace;
pub mod model;
pub mod numeric;
pub mod optimizer;
pub mod rng;
pub mod sim;
pub mod workload;

pub use error::{Error, Result};
