//! Batch front end for the `lexichoice` library: JSON rule and problem
//! documents in, deterministic JSON or text reports out.

pub mod commands;
pub mod input;
pub mod report;
pub mod repro;

pub use input::InputError;
pub use report::{Format, Report};
