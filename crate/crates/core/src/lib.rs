pub mod alt_set;
pub mod cli;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod logspace;
pub mod mre;
pub mod quantum;
pub mod sqprt;

pub use error::{Error, Result};
