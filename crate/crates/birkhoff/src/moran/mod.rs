//! Moran-type measure constructions at finite depth.
//!
//! A construction plan chains Gibbs stages. Each stage selects cylinders of
//! its Markov system whose Birkhoff sums of `f` and `phi` and whose log
//! measure stay inside windows of width O(m eps), equidistributes mass over
//! the selection, and hands off to the next stage through a short bridge
//! word ending in a cell the two stages share. The realized tree carries
//! enough data to estimate the dimension of the limit set and to sample
//! points whose finite averages approach the target.

mod estimate;
mod tree;

pub use estimate::{estimate_dimension, sample_points, BirkhoffSnapshot, SamplePoint};
pub use tree::{build_tree, MoranLevel, MoranPiece, MoranTree};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::interval_maps::RegularPotential;
use crate::markov::{equilibrium_measure, MarkovMeasure, MarkovSystem, ValueConvention, COVER_TOL};

/// Hard cap on any stage's window length.
const M_CAP: usize = 1_000_000;
/// Most trajectories drawn per coverage estimate.
const COVERAGE_SAMPLES: usize = 2_000;
/// Chain-step budget of one coverage estimate; long windows get fewer draws.
const COVERAGE_BUDGET: usize = 4_000_000;
/// Refinement budget (edges) while pushing cell variation under eps.
const VAR_REFINE_CAP: usize = 1 << 14;
/// Most stages a plan may expand to.
const STAGE_CAP: usize = 64;
/// Most intervals kept per tree level.
pub(crate) const LEVEL_CAP: usize = 100_000;

/// One stage of raw input: a Markov system, the potential whose equilibrium
/// state drives the stage, the two observables, and the window half-width.
#[derive(Debug, Clone)]
pub struct StageSpec {
    pub sys: MarkovSystem,
    pub gibbs: RegularPotential,
    pub f: RegularPotential,
    pub phi: RegularPotential,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct MoranSpec {
    pub stages: Vec<StageSpec>,
    /// When the given stages end short of this symbolic depth, the last one
    /// repeats with eps halved each time until the planned depth reaches it.
    pub target_depth: usize,
    /// Representatives kept per level once exact enumeration is too large.
    pub reps_per_level: usize,
    pub seed: u64,
}

/// A fully planned stage. `m` is the cumulative iterate count through this
/// stage's block (bridges of earlier stages included, its own excluded),
/// so consecutive stages satisfy m' eps' > 4 m eps + j' (sup|f| + sup|phi|).
#[derive(Debug, Clone)]
pub struct PlannedStage {
    pub sys: MarkovSystem,
    pub gibbs: MarkovMeasure,
    pub f: Vec<f64>,
    pub phi: Vec<f64>,
    pub a: f64,
    pub lambda: f64,
    pub h: f64,
    pub eps: f64,
    /// window length of this stage's own block
    pub n: usize,
    /// cumulative iterates through this block
    pub m: usize,
    /// bridge time estimate under the stationary law; realized per word
    pub j: usize,
    /// return-time cap: twice the transition graph diameter
    pub l: usize,
    /// cell of the next stage the bridge lands on
    pub bridge_cell: Option<usize>,
    /// cell of this stage whose interval contains the bridge target
    pub landing_cell: Option<usize>,
    /// estimated Gibbs mass of the cylinders passing the windows at n
    pub coverage: f64,
    pub sup_f: f64,
    pub sup_phi: f64,
}

#[derive(Debug, Clone)]
pub struct ConstructionPlan {
    pub stages: Vec<PlannedStage>,
    pub target_a: f64,
    pub reps_per_level: usize,
    pub seed: u64,
}

struct Prepared {
    sys: MarkovSystem,
    gibbs: MarkovMeasure,
    f: Vec<f64>,
    phi: Vec<f64>,
    a: f64,
    lambda: f64,
    h: f64,
    sup_f: f64,
    sup_phi: f64,
}

fn refine_to_variation(sys: &MarkovSystem, pots: [&RegularPotential; 2], eps: f64) -> Result<MarkovSystem> {
    let mut s = sys.clone();
    loop {
        let worst = s
            .cells
            .iter()
            .map(|c| {
                pots.iter()
                    .map(|p| {
                        let (lo, hi) = p.bounds_on(c);
                        hi - lo
                    })
                    .fold(0.0_f64, f64::max)
            })
            .fold(0.0_f64, f64::max);
        if worst < eps {
            return Ok(s);
        }
        if s.edge_count() > VAR_REFINE_CAP {
            return Err(Error::UnreachableTolerance { requested: eps, achieved: worst, cells: s.len() });
        }
        s = s.refine();
    }
}

fn prepare_stage(spec: &StageSpec, eps: f64, stage: usize, target_a: f64) -> Result<Prepared> {
    let sys = refine_to_variation(&spec.sys, [&spec.f, &spec.phi], eps)?;
    let psi = sys.cell_values(&spec.gibbs, ValueConvention::Midpoint);
    let gibbs = equilibrium_measure(&sys.succ, &psi)?;
    let f = sys.cell_values(&spec.f, ValueConvention::Midpoint);
    let phi = sys.cell_values(&spec.phi, ValueConvention::Midpoint);
    let a = gibbs.integrate(&f);
    let lambda = gibbs.integrate(&phi);
    if lambda <= 0.0 {
        return Err(Error::Config(format!(
            "stage {stage}: Lyapunov exponent {lambda} of the Gibbs measure must be positive"
        )));
    }
    if (a - target_a).abs() > eps {
        return Err(Error::Config(format!(
            "stage {stage}: Gibbs average {a} misses the target {target_a} by more than eps = {eps}"
        )));
    }
    let sup = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    Ok(Prepared { sup_f: sup(&f), sup_phi: sup(&phi), h: gibbs.entropy(), sys, gibbs, f, phi, a, lambda })
}

/// Edge-reversed adjacency.
fn reversed(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut rev = vec![Vec::new(); succ.len()];
    for (u, row) in succ.iter().enumerate() {
        for &v in row {
            rev[v].push(u);
        }
    }
    rev
}

/// Shortest-path router toward a fixed landing cell.
pub(crate) struct BridgeRouter {
    pub dist: Vec<usize>,
    next: Vec<usize>,
}

impl BridgeRouter {
    pub fn new(succ: &[Vec<usize>], landing: usize) -> Self {
        let dist = crate::markov::graph::bfs_distances(&reversed(succ), landing);
        let mut next = vec![usize::MAX; succ.len()];
        for (v, row) in succ.iter().enumerate() {
            if v == landing || dist[v] == usize::MAX {
                continue;
            }
            // smallest qualifying successor keeps paths deterministic
            next[v] = *row
                .iter()
                .find(|&&u| dist[u] + 1 == dist[v])
                .expect("BFS distance must decrease along some edge");
        }
        BridgeRouter { dist, next }
    }

    /// Cells after `from` on the shortest path, ending at the landing cell.
    pub fn path(&self, from: usize) -> Vec<usize> {
        let mut p = Vec::with_capacity(self.dist[from]);
        let mut v = from;
        while self.dist[v] > 0 {
            v = self.next[v];
            p.push(v);
        }
        p
    }
}

/// Bridge pair between consecutive stages: a cell of `next` whose interval
/// sits inside a cell of `cur`.
fn find_bridge(cur: &MarkovSystem, next: &MarkovSystem) -> Result<(usize, usize)> {
    for (jn, jc) in next.cells.iter().enumerate() {
        for (bi, bc) in cur.cells.iter().enumerate() {
            if bc.covers(jc, COVER_TOL) {
                return Ok((bi, jn));
            }
        }
    }
    Err(Error::Config(
        "consecutive stages share no bridge cell: no cell of the next stage lies inside a cell of the current one"
            .into(),
    ))
}

/// Most likely bridge time under the stationary law; ties take the shorter.
fn estimate_majority_j(sys: &MarkovSystem, landing: usize, gibbs: &MarkovMeasure) -> usize {
    let router = BridgeRouter::new(&sys.succ, landing);
    let pi = gibbs.stationary();
    let mut weight = std::collections::BTreeMap::new();
    for (c, &d) in router.dist.iter().enumerate() {
        *weight.entry(d).or_insert(0.0) += pi[c];
    }
    weight
        .into_iter()
        .fold((usize::MAX, f64::NEG_INFINITY), |best, (j, w)| if w > best.1 { (j, w) } else { best })
        .0
}

/// Window test for one stage-local word (block length = word length - 1).
///
/// The first stage checks the Birkhoff sums of f and phi and the log mass of
/// the full word at the block endpoint, width 2 n eps. Later stages check
/// every prefix with the inherited grace m_prev eps_prev on top of 2 k eps.
pub(crate) fn word_passes(st: &PlannedStage, word: &[usize], grace: f64, first_stage: bool) -> bool {
    let n = word.len() - 1;
    let nf = n as f64;
    if first_stage {
        let mut sf = 0.0;
        let mut sp = 0.0;
        for &c in &word[..n] {
            sf += st.f[c];
            sp += st.phi[c];
        }
        let w = 2.0 * nf * st.eps;
        (sf - nf * st.a).abs() < w
            && (sp - nf * st.lambda).abs() < w
            && (st.gibbs.log_cylinder_mass(word) + nf * st.h).abs() < w
    } else {
        let mut sf = 0.0;
        let mut sp = 0.0;
        let mut lm = 0.0;
        for k in 1..=n {
            let c = word[k - 1];
            sf += st.f[c];
            sp += st.phi[c];
            lm = if k == 1 {
                st.gibbs.log_stationary[c]
            } else {
                match st.gibbs.succ[word[k - 2]].binary_search(&c) {
                    Ok(pos) => lm + st.gibbs.log_kernel[word[k - 2]][pos],
                    Err(_) => return false,
                }
            };
            let kf = k as f64;
            let w = grace + 2.0 * kf * st.eps;
            if (sf - kf * st.a).abs() > w
                || (sp - kf * st.lambda).abs() > w
                || (lm + kf * st.h).abs() > w
            {
                return false;
            }
        }
        true
    }
}

/// Seeded sampler for the Gibbs Markov chain.
pub(crate) struct ChainSampler {
    start_cdf: Vec<f64>,
    step_cdf: Vec<Vec<f64>>,
    succ: Vec<Vec<usize>>,
}

impl ChainSampler {
    pub fn new(gibbs: &MarkovMeasure) -> Self {
        fn cdf(ps: Vec<f64>) -> Vec<f64> {
            let mut run = 0.0;
            ps.into_iter()
                .map(|p| {
                    run += p;
                    run
                })
                .collect()
        }
        ChainSampler {
            start_cdf: cdf(gibbs.stationary()),
            step_cdf: (0..gibbs.succ.len()).map(|i| cdf(gibbs.kernel_row(i))).collect(),
            succ: gibbs.succ.clone(),
        }
    }

    fn pick(cdf: &[f64], u: f64) -> usize {
        cdf.partition_point(|&c| c < u).min(cdf.len() - 1)
    }

    pub fn word(&self, start: Option<usize>, len: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut w = Vec::with_capacity(len);
        w.push(start.unwrap_or_else(|| Self::pick(&self.start_cdf, rng.gen())));
        while w.len() < len {
            let c = *w.last().unwrap();
            let k = Self::pick(&self.step_cdf[c], rng.gen());
            w.push(self.succ[c][k]);
        }
        w
    }
}

fn estimated_coverage(
    st: &PlannedStage,
    n: usize,
    grace: f64,
    first_stage: bool,
    start: Option<usize>,
    sampler: &ChainSampler,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let samples = (COVERAGE_BUDGET / (n + 1)).clamp(20, COVERAGE_SAMPLES);
    let mut pass = 0usize;
    for _ in 0..samples {
        let w = sampler.word(start, n + 1, rng);
        if word_passes(st, &w, grace, first_stage) {
            pass += 1;
        }
    }
    pass as f64 / samples as f64
}

/// Standard deviation of one window increment under the stationary law,
/// worst over the three windows; chains are treated as independent steps,
/// which only seeds the search since coverage is still sampled.
fn window_sd(st: &PlannedStage) -> f64 {
    let pi = st.gibbs.stationary();
    let mut vf = 0.0;
    let mut vp = 0.0;
    let mut vs = 0.0;
    for (c, &p) in pi.iter().enumerate() {
        vf += p * (st.f[c] - st.a).powi(2);
        vp += p * (st.phi[c] - st.lambda).powi(2);
        for &lk in &st.gibbs.log_kernel[c] {
            vs += p * lk.exp() * (-lk - st.h).powi(2);
        }
    }
    vf.max(vp).max(vs).sqrt()
}

/// Double block i's length so the next stage inherits twice the grace, then
/// refresh its bookkeeping; the stage after block i recomputes its own floor
/// from the new cumulative depth.
fn grow_previous_block(planned: &mut [PlannedStage], i: usize, rng: &mut ChaCha8Rng) {
    let (grace, base_m, start) = if i == 0 {
        (0.0, 0usize, None)
    } else {
        let p = &planned[i - 1];
        (p.m as f64 * p.eps, p.m + p.j, p.bridge_cell)
    };
    let st = &mut planned[i];
    st.n *= 2;
    st.m = base_m + st.n;
    rng.set_stream(i as u64);
    let sampler = ChainSampler::new(&st.gibbs);
    st.coverage = estimated_coverage(st, st.n, grace, i == 0, start, &sampler, rng);
}

/// Plan the stage schedule: refine partitions until cell variation sits
/// under eps, size each block for window coverage above 1 - eps and for the
/// inductive inequality against the previous block, link consecutive stages
/// through bridge cells, and repeat the last stage (eps halved) until the
/// planned depth reaches the requested target.
pub fn plan_construction(spec: &MoranSpec, target_a: f64) -> Result<ConstructionPlan> {
    if spec.stages.is_empty() {
        return Err(Error::Config("a construction needs at least one stage".into()));
    }
    if spec.reps_per_level == 0 || spec.reps_per_level > LEVEL_CAP {
        return Err(Error::Config(format!(
            "reps_per_level must lie in 1..={LEVEL_CAP}"
        )));
    }
    for (i, st) in spec.stages.iter().enumerate() {
        if !(st.eps > 0.0) {
            return Err(Error::Config(format!("stage {i}: eps must be positive")));
        }
        if i > 0 && st.eps >= spec.stages[i - 1].eps {
            return Err(Error::Config("stage eps values must decrease strictly".into()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut planned: Vec<PlannedStage> = Vec::new();
    let mut k = 0usize;
    loop {
        if k >= spec.stages.len() {
            let depth = planned.last().map(|s| s.m).unwrap_or(0);
            if depth >= spec.target_depth {
                break;
            }
        }
        if k >= STAGE_CAP {
            return Err(Error::Config(format!("stage schedule exceeded {STAGE_CAP} stages")));
        }
        let src = if k < spec.stages.len() { &spec.stages[k] } else { spec.stages.last().unwrap() };
        let eps = if k < spec.stages.len() { src.eps } else { planned.last().unwrap().eps * 0.5 };

        let prep = prepare_stage(src, eps, k, target_a)?;
        let l = 2 * prep.sys.diameter();
        let mut st = PlannedStage {
            sys: prep.sys,
            gibbs: prep.gibbs,
            f: prep.f,
            phi: prep.phi,
            a: prep.a,
            lambda: prep.lambda,
            h: prep.h,
            eps,
            n: 0,
            m: 0,
            j: 0,
            l,
            bridge_cell: None,
            landing_cell: None,
            coverage: 1.0,
            sup_f: prep.sup_f,
            sup_phi: prep.sup_phi,
        };

        let start = if k == 0 {
            None
        } else {
            let (landing, bridge) = find_bridge(&planned[k - 1].sys, &st.sys)?;
            let prev = &mut planned[k - 1];
            prev.landing_cell = Some(landing);
            prev.bridge_cell = Some(bridge);
            prev.j = estimate_majority_j(&prev.sys, landing, &prev.gibbs);
            Some(bridge)
        };

        rng.set_stream(k as u64);
        let sampler = ChainSampler::new(&st.gibbs);
        // CLT crossover: the windows beat the fluctuations past (3 sd / 2 eps)^2
        let sd = window_sd(&st);
        let n_clt = ((3.0 * sd / (2.0 * eps)).powi(2).ceil() as usize).min(2 * M_CAP);
        let mut best_cov = 0.0_f64;
        let mut bumps = 0usize;
        let (n, m, cov) = 'sizing: loop {
            let (grace, m_prev, j_prev) = if k == 0 {
                (0.0, 0usize, 0usize)
            } else {
                let prev = &planned[k - 1];
                (prev.m as f64 * prev.eps, prev.m, prev.j)
            };
            // block floor from m' eps' > 4 m eps + l (sup|f| + sup|phi|)
            let n_min = if k == 0 {
                1
            } else {
                let need = (4.0 * grace + st.l as f64 * (st.sup_f + st.sup_phi)) / eps
                    - (m_prev + j_prev) as f64;
                if need.is_sign_positive() { need.floor() as usize + 1 } else { 1 }
            };
            let mut n = n_min.max(1).max(n_clt / 4);
            let mut last_cov = -1.0_f64;
            let mut estimated_any = false;
            loop {
                if n <= M_CAP {
                    estimated_any = true;
                    let cov = estimated_coverage(&st, n, grace, k == 0, start, &sampler, &mut rng);
                    best_cov = best_cov.max(cov);
                    if cov > 1.0 - eps {
                        break 'sizing (n, m_prev + j_prev + n, cov);
                    }
                    if cov > last_cov + 0.05 * eps {
                        last_cov = cov;
                        n *= 2;
                        continue;
                    }
                    // coverage stalled: the prefix windows fail at small k,
                    // where the inherited grace m_prev eps_prev, not this
                    // block's length, sets the crossing probability
                }
                if k > 0 && estimated_any && bumps < 40 && planned[k - 1].n <= M_CAP / 2 {
                    bumps += 1;
                    grow_previous_block(&mut planned, k - 1, &mut rng);
                    rng.set_stream(k as u64);
                    continue 'sizing;
                }
                return Err(Error::InfeasibleSchedule { stage: k, coverage: best_cov });
            }
        };
        st.n = n;
        st.m = m;
        st.coverage = cov;
        planned.push(st);
        k += 1;
    }

    Ok(ConstructionPlan {
        stages: planned,
        target_a,
        reps_per_level: spec.reps_per_level,
        seed: spec.seed,
    })
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::expr::Expr;
    use crate::interval::Interval;

    pub fn constant_pot(c: f64) -> RegularPotential {
        RegularPotential::constant(c)
    }

    /// 0 on [0, 1/2), 1 on [1/2, 1]: the binary digit observable.
    pub fn digit_pot() -> RegularPotential {
        RegularPotential::new(vec![
            (Interval::new(0.0, 0.5), Expr::Const(0.0)),
            (Interval::new(0.5, 1.0), Expr::Const(1.0)),
        ])
        .unwrap()
    }

    /// log-weights (w0 on the left half, w1 on the right); the equilibrium
    /// state on the full 2-shift is Bernoulli(w0, w1).
    pub fn bernoulli_pot(w0: f64, w1: f64) -> RegularPotential {
        RegularPotential::new(vec![
            (Interval::new(0.0, 0.5), Expr::Const(w0.ln())),
            (Interval::new(0.5, 1.0), Expr::Const(w1.ln())),
        ])
        .unwrap()
    }
}
