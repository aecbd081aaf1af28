//! Enhanced action spaces for multi-policy transfer.

pub mod approx;
pub mod error;
pub mod grid;
pub mod harness;
pub mod learning;
pub mod oracle;
pub mod pursuit;
pub mod space;

pub use error::{Error, Result};
pub use space::{EnhancedAction, EnhancedActionSpace, MacroExecutor};
