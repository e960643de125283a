pub mod autgroup;
pub mod dataset;
pub mod error;
pub mod features;
pub mod graph;
pub mod ml;
pub mod perm;
pub mod pipeline;
pub mod reduced;
pub mod schedule;
pub mod sim;

pub use error::{Error, Result};
