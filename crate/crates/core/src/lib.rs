pub mod ambient;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod fixtures;
pub mod flow;
pub mod grid;
pub mod immersion;
pub mod linalg;

pub use error::{Error, Result};
