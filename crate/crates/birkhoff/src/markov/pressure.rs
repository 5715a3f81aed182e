//! Topological pressure of locally constant and regular potentials.
//!
//! Everything runs in log space. The transition weight from cell i to cell j
//! is e^{psi_i} (source weighting), so the weight matrix is M = A diag-free
//! with M_ij = A_ij e^{psi_i} and P(psi) = log rho(M).

use crate::error::{Error, Result};
use crate::interval_maps::RegularPotential;
use crate::markov::{graph, mean_cycle_bounds, MarkovSystem};

const MAX_ITERS: usize = 100_000;
/// Cap on refined cell count for pressure brackets.
const REFINE_CELL_CAP: usize = 1 << 14;

#[derive(Debug, Clone)]
pub struct PerronData {
    /// log spectral radius, equals the pressure of psi.
    pub log_rho: f64,
    /// log right eigenvector of M, normalized to logsumexp 0.
    pub log_right: Vec<f64>,
    /// log left eigenvector of M, normalized to logsumexp 0.
    pub log_left: Vec<f64>,
    pub period: usize,
    /// sup-norm eigen-equation defect of the returned vectors.
    pub residual: f64,
}

fn logsumexp(xs: impl Iterator<Item = f64>) -> f64 {
    let vals: Vec<f64> = xs.collect();
    let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + vals.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// (M u)_i in log space: psi_i + lse_{j in succ(i)} u_j.
fn log_matvec(succ: &[Vec<usize>], psi: &[f64], u: &[f64]) -> Vec<f64> {
    succ.iter()
        .enumerate()
        .map(|(i, row)| psi[i] + logsumexp(row.iter().map(|&j| u[j])))
        .collect()
}

/// (M^T u)_j in log space: lse_{i in pred(j)} (psi_i + u_i).
fn log_matvec_t(pred: &[Vec<usize>], psi: &[f64], u: &[f64]) -> Vec<f64> {
    pred.iter()
        .map(|row| logsumexp(row.iter().map(|&i| psi[i] + u[i])))
        .collect()
}

fn normalize_max(u: &mut [f64]) -> f64 {
    let m = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for x in u.iter_mut() {
        *x -= m;
    }
    m
}

fn normalize_lse(u: &mut [f64]) {
    let s = logsumexp(u.iter().copied());
    for x in u.iter_mut() {
        *x -= s;
    }
}

/// log rho of the centered weight matrix by power iteration.
///
/// Collatz-Wielandt applied to M^p brackets p log rho between the min and max
/// componentwise growth over a p-step window, so the spread is a rigorous
/// error bound. State vectors are renormalized each step to keep the window
/// differences at full precision.
/// log rho by damped power iteration on M + cI. The diagonal shift keeps the
/// Perron vector and moves the eigenvalue to rho + c, while making the matrix
/// primitive: peripheral oscillation of periodic supports dies at rate
/// |omega + 1|/2 instead of stalling. Karp's bound ln c = max cycle mean of
/// psi pins c <= rho, so the final subtraction log(rho_d - c) never cancels
/// more than one bit.
fn log_spectral_radius(succ: &[Vec<usize>], psi: &[f64]) -> Result<f64> {
    let n = succ.len();
    let scale = psi.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let tol = 2e-14 * (1.0 + scale);
    // small spectral gaps stall above machine precision; the spread is still
    // a certified enclosure, so past the slow-start threshold a midpoint of
    // modest width beats a convergence failure
    let loose = 1e-11 * (1.0 + scale);
    const LOOSE_AFTER: usize = 5_000;

    // damping slows the easy well-mixed cases, so start plain and switch on
    // only when the spread has not closed in time
    const DAMP_AFTER: usize = 300;
    let mut ln_c = f64::NEG_INFINITY;

    let mut u = vec![0.0; n];
    let mut spread = f64::INFINITY;
    for iter in 0..MAX_ITERS {
        if iter == DAMP_AFTER {
            ln_c = mean_cycle_bounds(succ, psi).1;
        }
        let mv = log_matvec(succ, psi, &u);
        let mut v: Vec<f64> = (0..n).map(|i| logaddexp(mv[i], ln_c + u[i])).collect();
        let mut gmin = f64::INFINITY;
        let mut gmax = f64::NEG_INFINITY;
        for i in 0..n {
            let g = v[i] - u[i];
            gmin = gmin.min(g);
            gmax = gmax.max(g);
        }
        normalize_max(&mut v);
        u = v;
        spread = gmax - gmin;
        if spread <= tol || (iter >= LOOSE_AFTER && spread <= loose) {
            let mid = 0.5 * (gmax + gmin);
            return Ok(mid + (-((ln_c - mid).exp())).ln_1p());
        }
    }
    Err(Error::NoConvergence { iterations: MAX_ITERS, residual: spread })
}

/// Eigenvector of the centered matrix at known log rho, via the damped map
/// u -> log((M/rho)e^u + e^u)/2. Its iteration matrix has spectrum
/// (omega/rho + 1)/2, strictly inside the unit circle away from 1, which
/// kills the peripheral oscillation of periodic graphs.
fn eigenvector(
    matvec: impl Fn(&[f64]) -> Vec<f64>,
    n: usize,
    log_rho: f64,
) -> Result<Vec<f64>> {
    let mut u = vec![0.0; n];
    let mut change = f64::INFINITY;
    for _ in 0..MAX_ITERS {
        let mv = matvec(&u);
        let mut v: Vec<f64> = (0..n)
            .map(|i| logaddexp(mv[i] - log_rho, u[i]) - std::f64::consts::LN_2)
            .collect();
        normalize_max(&mut v);
        let scale = v.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        change = v
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        u = v;
        if change <= 1e-14 * scale {
            normalize_lse(&mut u);
            return Ok(u);
        }
    }
    Err(Error::NoConvergence { iterations: MAX_ITERS, residual: change })
}

/// log rho of one irreducible component, eigenvalue only.
fn component_log_rho(succ: &[Vec<usize>], psi: &[f64]) -> Result<f64> {
    let n = succ.len();
    let mean = psi.iter().sum::<f64>() / n as f64;
    let psi_c: Vec<f64> = psi.iter().map(|x| x - mean).collect();
    Ok(mean + log_spectral_radius(succ, &psi_c)?)
}

/// Perron data of an irreducible weighted transition graph.
pub fn perron_data(succ: &[Vec<usize>], psi: &[f64]) -> Result<PerronData> {
    assert_eq!(succ.len(), psi.len());
    debug_assert_eq!(
        graph::strongly_connected_components(succ).len(),
        1,
        "perron_data needs an irreducible graph"
    );
    let n = succ.len();
    // centering by the mean makes constant shifts exact and keeps the
    // iteration well scaled
    let mean = psi.iter().sum::<f64>() / n as f64;
    let psi_c: Vec<f64> = psi.iter().map(|x| x - mean).collect();

    let period = graph::period(succ);
    let log_rho_c = log_spectral_radius(succ, &psi_c)?;

    let mut pred = vec![Vec::new(); n];
    for (i, row) in succ.iter().enumerate() {
        for &j in row {
            pred[j].push(i);
        }
    }

    let log_right = eigenvector(|u| log_matvec(succ, &psi_c, u), n, log_rho_c)?;
    let log_left = eigenvector(|u| log_matvec_t(&pred, &psi_c, u), n, log_rho_c)?;

    let res_r = log_matvec(succ, &psi_c, &log_right)
        .iter()
        .zip(&log_right)
        .map(|(a, b)| (a - log_rho_c - b).abs())
        .fold(0.0_f64, f64::max);
    let res_l = log_matvec_t(&pred, &psi_c, &log_left)
        .iter()
        .zip(&log_left)
        .map(|(a, b)| (a - log_rho_c - b).abs())
        .fold(0.0_f64, f64::max);
    let residual = res_r.max(res_l);
    if residual > 1e-9 {
        return Err(Error::NoConvergence { iterations: MAX_ITERS, residual });
    }

    Ok(PerronData { log_rho: mean + log_rho_c, log_right, log_left, period, residual })
}

/// Pressure of a locally constant potential on an arbitrary transition graph.
/// Reducible graphs take the max over strongly connected components; a graph
/// with no cycles has pressure -inf.
pub fn pressure_locally_constant(succ: &[Vec<usize>], psi: &[f64]) -> Result<f64> {
    let comps = graph::strongly_connected_components(succ);
    if comps.len() == 1 && !succ.is_empty() && succ.iter().any(|r| !r.is_empty()) {
        return component_log_rho(succ, psi);
    }
    let mut best = f64::NEG_INFINITY;
    for comp in &comps {
        let inside: std::collections::HashMap<usize, usize> =
            comp.iter().enumerate().map(|(ni, &v)| (v, ni)).collect();
        let sub_succ: Vec<Vec<usize>> = comp
            .iter()
            .map(|&v| succ[v].iter().filter_map(|j| inside.get(j).copied()).collect())
            .collect();
        if sub_succ.iter().all(|r: &Vec<usize>| r.is_empty()) {
            continue;
        }
        let sub_psi: Vec<f64> = comp.iter().map(|&v| psi[v]).collect();
        best = best.max(component_log_rho(&sub_succ, &sub_psi)?);
    }
    Ok(best)
}

/// Two-sided pressure enclosure for a regular potential.
#[derive(Debug, Clone, Copy)]
pub struct PressureBracket {
    pub lower: f64,
    pub upper: f64,
    /// cylinder depth of the final refinement (0 = the input partition)
    pub depth: usize,
    pub cells: usize,
}

impl PressureBracket {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Pressure of a regular potential, bracketed by step potentials constant on
/// refined cylinders. Pressure is monotone and 1-Lipschitz in the sup norm,
/// so cellwise range bounds give a rigorous enclosure that shrinks with the
/// cylinder oscillation.
pub fn pressure_regular(sys: &MarkovSystem, pot: &RegularPotential, tol: f64) -> Result<PressureBracket> {
    assert!(tol > 0.0);
    let mut current = sys.clone();
    let mut depth = 0usize;
    loop {
        let mut lo = Vec::with_capacity(current.len());
        let mut hi = Vec::with_capacity(current.len());
        for c in &current.cells {
            let (a, b) = pot.bounds_on(c);
            lo.push(a);
            hi.push(b);
        }
        let p_lo = pressure_locally_constant(&current.succ, &lo)?;
        let p_hi = pressure_locally_constant(&current.succ, &hi)?;
        let bracket = PressureBracket { lower: p_lo, upper: p_hi, depth, cells: current.len() };
        if bracket.width() <= tol {
            return Ok(bracket);
        }
        if current.edge_count() > REFINE_CELL_CAP {
            return Err(Error::UnreachableTolerance {
                requested: tol,
                achieved: bracket.width(),
                cells: current.len(),
            });
        }
        current = current.refine();
        depth += 1;
    }
}
