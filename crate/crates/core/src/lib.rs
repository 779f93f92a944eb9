pub mod cli;
pub mod cutset;
pub mod dynamic_forest;
pub mod edge_space;
pub mod error;
pub mod harness;
pub mod layered;
pub mod union_find;

pub use error::{Error, Result};
