//! Explicit bounds, Baker–Davenport reduction and exhaustive search for the
//! equation `u_{n1} + ... + u_{nt} = p^z`, where `u` is a binary recurrence
//! and `p` a prime.

pub mod bounds;
pub mod cli;
pub mod decimal;
pub mod error;
pub mod pipeline;
pub mod qfield;
pub mod real;
pub mod reduction;
pub mod recurrence;

pub use error::{Error, Result};
