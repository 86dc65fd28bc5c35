pub mod bench;
pub mod datasets;
pub mod energy;
pub mod engine;
pub mod error;
pub mod netsim;
pub mod scenario;
pub mod tuner;

pub use error::{Error, Result};
