//! Inference of leadership and coordination strategies from group movement
//! trajectories.

pub mod coordination;
pub mod dirmath;
pub mod error;
pub mod evaluate;
pub mod fit;
pub mod forest;
pub mod io;
pub mod simulate;
pub mod strategies;
pub mod trajectory;

pub use error::{Error, Result};
