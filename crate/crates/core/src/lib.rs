pub mod error;
pub mod experiments;
pub mod estimators;
pub mod haar;
pub mod linalg;
pub mod measurement;
pub mod protocol;
pub mod records_io;
pub mod rng;
pub mod state;
pub mod stats;
pub mod weingarten;

pub use error::{Error, Result};
