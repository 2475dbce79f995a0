pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod influence;
pub mod model;
pub mod pipeline;
pub mod stats;

pub use error::{Error, Result};
