//! Positivity-preserving time stepping for the mean-reverting CEV process
//!
//! ```text
//! dx_t = (k1 - k2 x_t) dt + k3 x_t^q dW_t,   1/2 < q < 1
//! ```
//!
//! together with the Monte Carlo machinery used to compare the schemes:
//! strong errors against a fine-grid reference driven by the same Brownian
//! path, pairwise scheme distances, least-squares convergence orders, and
//! the two-dimensional stochastic volatility model whose variance follows
//! the CEV dynamics.
//!
//! Module map:
//!
//! - [`model`]: parameter containers and applicability conditions.
//! - [`paths`]: counter-based Brownian increments, coarsening, correlation.
//! - [`schemes`]: SD, HAL, ALF, BIM, BMM, EM and Milstein for the variance.
//! - [`asset`]: log-Euler and IJK integrators for the log-price.
//! - [`harness`]: strong errors, distances, order fits, negativity counts.
//! - `cli` (feature `cli`): config files, experiment drivers and CSV output.

pub mod asset;
#[cfg(feature = "cli")]
pub mod cli;
pub mod error;
pub mod harness;
pub mod model;
pub mod paths;
pub mod schemes;

pub use asset::SvParams;
pub use error::{Error, Result};
pub use harness::{ErrorEstimate, McPlan, OrderFit};
pub use model::{validate, CevParams, GridSpec, SchemeConfig, SchemeId, ValidityReport};
pub use paths::{BrownianLattice, Driver, PathKey};
