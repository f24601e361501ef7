//! Experiment harness around the `qtorus` library.
//!
//! A single structured config file describes a symbol, a regularity index,
//! time and horizon lists, and a geometric energy grid; each subcommand
//! reruns one family of checks against that data and appends a run directory
//! containing a machine-readable report plus plot-ready tables.  Outputs are
//! a pure function of the config bytes: no clocks, seeds, or thread counts
//! leak into them.

pub mod config;
pub mod report;
pub mod runner;
