//! Evolutionary training of sparse recurrent ReLU networks on procedural
//! grid mazes: maze simulation, population-based search with evolutionary
//! pruning, experiment harness and post-hoc analyses.

pub mod analysis;
pub mod episode;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod io;
pub mod maze;
pub mod network;
pub mod rng;

pub use error::Error;
