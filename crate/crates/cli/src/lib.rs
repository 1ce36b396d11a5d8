//! Command-line driver for the projective dynamics library: configured
//! runs, projections, the verification battery and the orbit exchange.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
