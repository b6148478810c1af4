//! Statistical inference and stochastic simulation with reproducible,
//! seed-addressed Monte Carlo.

pub mod concentration;
pub mod distributions;
pub mod error;
pub mod estimation;
pub mod exec;
pub mod glm;
pub mod hypothesis;
pub mod io;
pub mod regression;
pub mod rng;
pub mod special;
pub mod stats;
pub mod stochastic;

pub use distributions::{DistributionSpec, Moments};
pub use error::{Result, StatError};
pub use rng::RandomStream;
