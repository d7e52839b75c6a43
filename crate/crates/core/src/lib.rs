//! Cycle decompositions of `K_{u+w} - K_u`.

pub mod error;
pub mod model;
pub(crate) mod search;
pub(crate) mod state;

pub use error::{Error, Result};
pub use model::*;
pub mod subsolvers;
pub mod generate;
pub mod merging;
pub mod switching;
pub mod base;
pub mod driver;
