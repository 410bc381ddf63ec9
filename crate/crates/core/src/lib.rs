//! Simulation and analysis of DAG-based ledger (Tangle-style) consensus under
//! steady and switching network load.

pub mod analytic;
pub mod attack;
pub mod error;
pub mod experiment;
pub mod params;
pub mod sim;
pub mod stats;
pub mod stream;

pub use error::{Error, Result};
pub use params::{validate, ConfirmationThreshold, LoadRegime, NetworkParams, RawParams};
pub use stream::{derive_stream, SeededStream};
