pub mod error;
pub mod harness;
pub mod hyperopt;
pub mod pipelines;
pub mod readout;
pub mod reservoir;
pub mod tasks;

pub use error::{Error, Result};
