//! Simulation and learning toolkit for an LCC-S resonant wireless-power
//! converter: a six-mode switched-affine converter model, a frequency-mode
//! PI output-voltage regulator, and a from-scratch TD3/DDPG trainer that
//! tunes the PI gains against the simulated plant.

pub mod agent;
pub mod config;
pub mod error;
pub mod integrator;
pub mod model;
pub mod nn;
pub mod params;
pub mod pi;
pub mod replay;
pub mod report;
pub mod sim;

pub use error::{Error, Result};
