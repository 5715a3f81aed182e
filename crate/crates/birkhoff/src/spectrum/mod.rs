//! Dimension spectrum of Birkhoff averages: the admissible interval of
//! averages, the scaled level-set dimension delta0(a), its parabolic locus,
//! hyperbolic dimension, and shape checks on computed tables.

mod checks;
mod delta;
mod infq;
mod table;

pub use checks::{check_semicontinuity, check_unimodal, SemicontinuityReport, UnimodalViolation};
pub use delta::{delta0_family, delta0_for_level, hyperbolic_dimension, HypDimReport, LevelDelta};
pub use infq::{inf_q_pressure, InfQ};
pub use table::{classify_parabolic_hull, compute_admissible_interval, spectrum_grid, AdmissibleInterval, SpectrumRow, SpectrumTable};

use crate::markov::MarkovSystem;

/// One Markov level with its per-cell observable and geometric potential.
/// Uniformly expanding maps need exactly one; parabolic maps supply a nested
/// truncation family, one entry per level.
#[derive(Debug, Clone)]
pub struct LevelData {
    pub sys: MarkovSystem,
    /// per-cell values of the averaged observable
    pub f: Vec<f64>,
    /// per-cell values of log |T'|, positive on every cell
    pub phi: Vec<f64>,
}

impl LevelData {
    pub fn new(sys: MarkovSystem, f: Vec<f64>, phi: Vec<f64>) -> Self {
        assert_eq!(sys.len(), f.len());
        assert_eq!(sys.len(), phi.len());
        LevelData { sys, f, phi }
    }

    pub fn phi_min(&self) -> f64 {
        self.phi.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumQuery {
    pub levels: Vec<LevelData>,
    /// declared observable values at parabolic points, possibly empty
    pub parabolic_values: Vec<f64>,
    pub a_grid: Vec<f64>,
    pub tol_delta: f64,
    pub tol_q: f64,
}
