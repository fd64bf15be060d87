pub mod confsets;
pub mod error;
pub mod estimators;
pub mod family;
pub mod forecasters;
pub mod harness;
pub mod infogain;
pub mod observations;

pub use error::{Error, Result};
pub use family::GlmFamily;
pub use observations::ObservationLog;
