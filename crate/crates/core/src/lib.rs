pub mod capacity;
pub mod cell;
pub mod cli;
pub mod config;
pub mod error;
pub mod grid;
pub mod homogenize;
pub mod numerics;
pub mod perforations;
pub mod vi;

pub use error::{Error, Result};
