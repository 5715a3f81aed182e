//! Markov models of piecewise monotone maps.
//!
//! A Markov system is a cell partition refining the branch domains together
//! with the 0/1 transition structure "T(Y_i) covers Y_j". Construction prunes
//! to the maximal irreducible core with positive entropy, so every downstream
//! operation may assume strong connectivity.

mod conformal;
mod cycle;
pub(crate) mod graph;
mod measure;
mod pressure;

pub use conformal::{conformality_residual, log_conformal_mass};
pub use cycle::{ergodic_average_range, mean_cycle_bounds, min_mean_cycle};
pub use measure::{equilibrium_measure, MarkovMeasure};
pub use pressure::{perron_data, pressure_locally_constant, pressure_regular, PerronData, PressureBracket};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::interval_maps::{PiecewiseMonotoneMap, RegularPotential};

/// Endpoint tolerance for the covering test T(Y_i) ⊇ Y_j.
pub const COVER_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct MarkovSystem {
    pub cells: Vec<Interval>,
    /// Sorted successor lists: j ∈ succ[i] iff T(Y_i) ⊇ Y_j.
    pub succ: Vec<Vec<usize>>,
    /// Branch of the source map containing each cell.
    pub cell_branch: Vec<usize>,
    pub map: Arc<PiecewiseMonotoneMap>,
}

/// How a potential collapses to one number per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueConvention {
    /// Value at the cell midpoint; exact for potentials constant on cells.
    Midpoint,
    /// Sampled lower bound over the cell.
    LowerBound,
}

impl MarkovSystem {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn is_transition(&self, i: usize, j: usize) -> bool {
        self.succ[i].binary_search(&j).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// One number per cell for a potential.
    pub fn cell_values(&self, pot: &RegularPotential, conv: ValueConvention) -> Vec<f64> {
        self.cells
            .iter()
            .map(|c| match conv {
                ValueConvention::Midpoint => pot.eval(c.mid()),
                ValueConvention::LowerBound => pot.bounds_on(c).0,
            })
            .collect()
    }

    /// Realized interval of a cell itinerary, via inverse branches.
    pub fn cylinder_interval(&self, word: &[usize]) -> Option<Interval> {
        let mut iv = *self.cells.get(*word.last()?)?;
        for &c in word[..word.len() - 1].iter().rev() {
            let br = &self.map.branches[self.cell_branch[c]];
            iv = br.pull_back(&iv)?.intersect(&self.cells[c])?;
        }
        Some(iv)
    }

    /// Forward image interval of a cell, exact for monotone branches.
    pub fn cell_image(&self, i: usize) -> Interval {
        let br = &self.map.branches[self.cell_branch[i]];
        let (a, b) = (br.apply(self.cells[i].lo), br.apply(self.cells[i].hi));
        if a <= b {
            Interval::new(a, b)
        } else {
            Interval::new(b, a)
        }
    }

    /// Check T(C_w) ⊇ C_{σw} on every admissible word up to `depth`.
    pub fn verify_markov(&self, depth: usize) -> Result<()> {
        let mut words: Vec<Vec<usize>> = (0..self.len()).map(|i| vec![i]).collect();
        for _ in 1..depth {
            let mut next = Vec::new();
            for w in &words {
                for &j in &self.succ[*w.last().unwrap()] {
                    let mut v = w.clone();
                    v.push(j);
                    next.push(v);
                }
            }
            for w in &next {
                let cw = match self.cylinder_interval(w) {
                    Some(iv) => iv,
                    None => continue,
                };
                let shifted = self.cylinder_interval(&w[1..]).expect("admissible tail");
                let br = &self.map.branches[self.cell_branch[w[0]]];
                let (a, b) = (br.apply(cw.lo), br.apply(cw.hi));
                let image = if a <= b { Interval::new(a, b) } else { Interval::new(b, a) };
                if !image.covers(&shifted, COVER_TOL) {
                    return Err(Error::NotMarkov {
                        from: w[0],
                        to: w[1],
                        overlap: image.overlap_len(&shifted) / shifted.len(),
                    });
                }
            }
            words = next;
        }
        Ok(())
    }

    /// Split every cell along preimages of its successors. Preserves
    /// irreducibility; cells come back sorted by position.
    pub fn refine(&self) -> MarkovSystem {
        let mut pieces: Vec<(usize, usize, Interval)> = Vec::with_capacity(self.edge_count());
        for i in 0..self.len() {
            let br = &self.map.branches[self.cell_branch[i]];
            for &j in &self.succ[i] {
                let pulled = br
                    .pull_back(&self.cells[j])
                    .and_then(|iv| iv.intersect(&self.cells[i]))
                    .expect("transition edge must pull back into its source cell");
                pieces.push((i, j, pulled));
            }
        }
        pieces.sort_by(|a, b| a.2.lo.partial_cmp(&b.2.lo).unwrap());
        let by_edge: std::collections::HashMap<(usize, usize), usize> = pieces
            .iter()
            .enumerate()
            .map(|(pos, &(i, j, _))| ((i, j), pos))
            .collect();
        let index_of = |i: usize, j: usize| by_edge[&(i, j)];
        let mut succ = Vec::with_capacity(pieces.len());
        let mut cells = Vec::with_capacity(pieces.len());
        let mut cell_branch = Vec::with_capacity(pieces.len());
        for &(i, j, iv) in &pieces {
            let mut row: Vec<usize> = self.succ[j].iter().map(|&k| index_of(j, k)).collect();
            row.sort_unstable();
            succ.push(row);
            cells.push(iv);
            cell_branch.push(self.cell_branch[i]);
        }
        MarkovSystem { cells, succ, cell_branch, map: Arc::clone(&self.map) }
    }

    /// Restrict to a vertex subset (sorted), used by truncation families.
    /// The result is pruned to its maximal irreducible positive-entropy core.
    pub fn restrict(&self, keep: &[usize]) -> Result<MarkovSystem> {
        let mut new_index = vec![usize::MAX; self.len()];
        for (ni, &old) in keep.iter().enumerate() {
            new_index[old] = ni;
        }
        let cells: Vec<Interval> = keep.iter().map(|&i| self.cells[i]).collect();
        let cell_branch: Vec<usize> = keep.iter().map(|&i| self.cell_branch[i]).collect();
        let succ: Vec<Vec<usize>> = keep
            .iter()
            .map(|&i| {
                self.succ[i]
                    .iter()
                    .filter_map(|&j| (new_index[j] != usize::MAX).then(|| new_index[j]))
                    .collect()
            })
            .collect();
        prune_to_core(MarkovSystem { cells, succ, cell_branch, map: Arc::clone(&self.map) })
    }

    /// Minimal span of B ∩ T^{|w|}(C_w) over admissible words |w| <= depth,
    /// where the span after |w| steps is the hull of the successor cells of
    /// the final symbol.
    pub fn big_image_constant(&self, depth: usize) -> f64 {
        let span_after = |last: usize| -> f64 {
            let lo = self.succ[last].iter().map(|&j| self.cells[j].lo).fold(f64::INFINITY, f64::min);
            let hi = self.succ[last]
                .iter()
                .map(|&j| self.cells[j].hi)
                .fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        };
        let mut best = f64::INFINITY;
        let mut frontier: Vec<usize> = (0..self.len()).collect();
        let mut visited_budget = 1_000_000usize;
        for _ in 0..depth.max(1) {
            for &last in &frontier {
                best = best.min(span_after(last));
            }
            let mut next = Vec::new();
            for &last in &frontier {
                for &j in &self.succ[last] {
                    if visited_budget == 0 {
                        return best;
                    }
                    visited_budget -= 1;
                    next.push(j);
                }
            }
            frontier = next;
        }
        best
    }

    pub fn diameter(&self) -> usize {
        graph::diameter(&self.succ)
    }
}

/// Build the Markov system of a map over a breakpoint partition.
///
/// The partition must refine the branch domains. Cells falling into gaps are
/// dropped. An image that cuts a cell strictly (neither covers it nor misses
/// it, up to tolerance) makes the partition non-Markov.
pub fn build_markov_system(map: Arc<PiecewiseMonotoneMap>, partition: &[f64]) -> Result<MarkovSystem> {
    let mut points: Vec<f64> = partition.to_vec();
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();
    if points.len() < 2 {
        return Err(Error::Config("partition needs at least two points".into()));
    }
    for bp in &map.breakpoints {
        if !points.iter().any(|p| (p - bp).abs() <= 1e-12) {
            return Err(Error::Config(format!(
                "partition must contain the branch breakpoint {bp}"
            )));
        }
    }

    let mut cells = Vec::new();
    let mut cell_branch = Vec::new();
    for w in points.windows(2) {
        let iv = Interval::new(w[0], w[1]);
        let owner = map
            .branches
            .iter()
            .position(|b| b.domain.covers(&iv, 1e-12));
        match owner {
            Some(b) => {
                cells.push(iv);
                cell_branch.push(b);
            }
            None => {
                // in a gap, or straddling a branch edge; the breakpoint check
                // above rules out straddling
                continue;
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::TrivialCore);
    }

    let mut succ = vec![Vec::new(); cells.len()];
    for i in 0..cells.len() {
        let br = &map.branches[cell_branch[i]];
        let (a, b) = (br.apply(cells[i].lo), br.apply(cells[i].hi));
        let image = if a <= b { Interval::new(a, b) } else { Interval::new(b, a) };
        for (j, cj) in cells.iter().enumerate() {
            if image.covers(cj, COVER_TOL) {
                succ[i].push(j);
            } else {
                let cut = image.overlap_len(cj);
                if cut > COVER_TOL {
                    return Err(Error::NotMarkov { from: i, to: j, overlap: cut / cj.len() });
                }
            }
        }
    }

    let sys = prune_to_core(MarkovSystem { cells, succ, cell_branch, map })?;
    sys.verify_markov(3)?;
    Ok(sys)
}

/// Keep the positive-entropy irreducible component with the most edges
/// (ties to the earliest cells).
fn prune_to_core(sys: MarkovSystem) -> Result<MarkovSystem> {
    let comps = graph::strongly_connected_components(&sys.succ);
    let mut best: Option<&Vec<usize>> = None;
    let mut best_edges = 0usize;
    for c in &comps {
        if !graph::positive_entropy(&sys.succ, c) {
            continue;
        }
        let inside: std::collections::HashSet<usize> = c.iter().copied().collect();
        let edges: usize = c.iter().map(|&u| sys.succ[u].iter().filter(|v| inside.contains(v)).count()).sum();
        if edges > best_edges {
            best_edges = edges;
            best = Some(c);
        }
    }
    let keep = best.ok_or(Error::TrivialCore)?;
    if keep.len() == sys.len() {
        return Ok(sys);
    }
    let mut new_index = vec![usize::MAX; sys.len()];
    for (ni, &old) in keep.iter().enumerate() {
        new_index[old] = ni;
    }
    Ok(MarkovSystem {
        cells: keep.iter().map(|&i| sys.cells[i]).collect(),
        succ: keep
            .iter()
            .map(|&i| {
                let mut row: Vec<usize> = sys.succ[i]
                    .iter()
                    .filter_map(|&j| (new_index[j] != usize::MAX).then(|| new_index[j]))
                    .collect();
                row.sort_unstable();
                row
            })
            .collect(),
        cell_branch: keep.iter().map(|&i| sys.cell_branch[i]).collect(),
        map: sys.map,
    })
}

/// Increasing family of uniformly expanding subsystems: level k refines the
/// full partition k times and drops every cell whose closure meets a
/// parabolic point. Deeper levels trim a smaller neighbourhood, so the
/// families grow and their dimensions are monotone in k.
pub fn truncation_family(sys: &MarkovSystem, levels: usize) -> Result<Vec<MarkovSystem>> {
    if levels == 0 {
        return Err(Error::Config("truncation family needs at least one level".into()));
    }
    let parabolic = sys.map.parabolic_points.clone();
    if parabolic.is_empty() {
        return Err(Error::Config("truncation family needs a parabolic point to cut out".into()));
    }
    let mut full = sys.clone();
    let mut family = Vec::with_capacity(levels);
    for _ in 0..levels {
        full = full.refine();
        let keep: Vec<usize> = (0..full.len())
            .filter(|&i| {
                let c = &full.cells[i];
                !parabolic.iter().any(|&p| p >= c.lo - COVER_TOL && p <= c.hi + COVER_TOL)
            })
            .collect();
        family.push(full.restrict(&keep)?);
    }
    Ok(family)
}
