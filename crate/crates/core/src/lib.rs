pub mod error;
pub mod geometry;

pub use error::{Error, Result};
pub mod game;
pub mod strategies;
pub mod simulate;
pub mod scenarios;
pub mod cli;
