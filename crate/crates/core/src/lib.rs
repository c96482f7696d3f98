//! Path systems of high bridge girth.
//!
//! A path system is a ground set of nodes `0..n` together with a list of
//! repeat-free node sequences. This crate builds such systems, rewrites them,
//! decides whether they contain bridges, compiles them into weighted digraph
//! instances and exhaustively searches tiny parameter ranges for extremal ones.

pub mod bridges;
pub mod constructions;
pub mod error;
pub mod gaps;
pub mod graph;
pub mod reductions;
pub mod search;
pub mod system;
pub mod transforms;

pub use error::{Error, Result};
pub use system::{PathSystem, SystemStats};
