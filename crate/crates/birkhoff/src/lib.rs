//! Numerical laboratory for multifractal analysis of piecewise monotone
//! interval maps: topological pressure on Markov models, equilibrium and
//! conformal measures, dimension Birkhoff spectra, hyperbolic dimension, and
//! Moran-type measure constructions, cross-checked against closed-form and
//! brute-force oracles.
//!
//! Each capability has a runnable walkthrough:
//!
//! ```text
//! cargo run --release --example pressure_closed_form
//! cargo run --release --example besicovitch_eggleston
//! cargo run --release --example hyperbolic_dimension
//! cargo run --release --example cvp_oracle
//! cargo run --release --example moran_construction
//! cargo run --release --example manneville_pomeau
//! cargo run --release --example step_sandwich
//! ```
//!
//! The `birkhoff` binary drives the same operations from config files; see
//! the crate README.

pub mod config;
pub mod error;
pub mod expr;
pub mod interval;
pub mod interval_maps;
pub mod markov;
pub mod moran;
pub mod oracle;
pub mod spectrum;
pub mod cli;

pub use error::{Error, Result};
pub use interval::Interval;
