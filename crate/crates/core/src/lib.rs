//! Segment-level traffic risk mapping from vehicle trajectories and in-cabin
//! driver monitoring.

pub mod config;
pub mod driver;
pub mod error;
pub mod fusion;
pub mod heatmap;
pub mod learn;
pub mod pipeline;
pub mod risk;
pub mod sim;
pub mod tci;
pub mod trajectory;

pub use error::{Error, Result};
