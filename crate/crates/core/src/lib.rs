//! Simulation and analysis of the joint spectral function of photon pairs
//! produced by four-wave mixing in pulse-pumped multi-stage fiber
//! nonlinear interferometers.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod model;
pub mod numeric;

pub use error::{Error, Result};
