//! Experiment runner around the simulator: sweep configuration, cell
//! execution, CSV output and figure-file generation.

pub mod config;
pub mod figures;
pub mod oracle_check;
pub mod sweep;
