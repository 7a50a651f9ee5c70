//! Sensor scheduling on graphs by balanced node partitioning under a subspace signal prior.

pub mod baselines;
pub mod dictlearn;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod linalg;
pub mod matrix_io;
pub mod partition;
pub mod rng;
pub mod sampling;
pub mod scheduler;
pub mod signals;

pub use error::{Error, Result};
