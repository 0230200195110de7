pub mod catalog;
pub mod chart;
pub mod classify;
pub mod cli;
pub mod engine;
pub mod error;
pub mod forms;
pub mod io;
pub mod tensor;

pub use error::{Error, Result};
