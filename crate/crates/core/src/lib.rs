//! Deficient perfect numbers: exact arithmetic, classification, exhaustive
//! search and a mechanized case eliminator with checkable traces.

pub mod arith;
pub mod classify;
pub mod eliminator;
pub mod envelope;
pub mod error;
pub mod search;

pub use error::{Error, Result};
