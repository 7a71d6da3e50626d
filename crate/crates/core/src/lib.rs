//! Vehicle-routing QUBO models, an exact statevector simulator for
//! variational circuits, classical optimizers and a small experiment harness.

pub mod encoding;
pub mod error;
pub mod harness;
pub mod instance;
pub mod metrics;
pub mod optimize;
pub mod oracle;
pub mod statevector;
pub mod variational;

pub use error::{Error, Result};
