//! Dimension estimates and point samples from a realized tree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MoranLevel, MoranTree};

/// Most points one call may sample.
const SAMPLE_CAP: usize = 10_000;

/// Frostman-style dimension estimate from the finest realized level.
///
/// The point estimate divides the accumulated log piece count by the mean
/// symbolic log diameter at the finest level; the lower bound subtracts the
/// window slack 4 eps / (lambda - 4 eps), taken at its worst over levels.
/// Returns (lower, point).
pub fn estimate_dimension(tree: &MoranTree) -> (f64, f64) {
    assert!(tree.levels.len() >= 2, "dimension estimate needs at least two realized levels");
    let cum: f64 = tree.levels.iter().map(|l| l.log_count).sum();
    let last = tree.levels.last().unwrap();
    assert!(!last.pieces.is_empty());
    let mean_scale =
        last.pieces.iter().map(|p| -p.log_diam).sum::<f64>() / last.pieces.len() as f64;
    let point = cum / mean_scale;
    let slack = tree
        .levels
        .iter()
        .map(|l| {
            let d = l.lambda - 4.0 * l.eps;
            if d > 0.0 {
                4.0 * l.eps / d
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0_f64, f64::max);
    (point - slack, point)
}

/// Birkhoff data of one sampled point at one realized depth.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BirkhoffSnapshot {
    pub depth: usize,
    pub avg_f: f64,
    pub avg_phi: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SamplePoint {
    pub x: f64,
    /// averages at every realized level, coarsest first
    pub trace: Vec<BirkhoffSnapshot>,
}

/// Deviation of the final f-average the level windows allow.
fn window_slack(levels: &[MoranLevel], target: f64) -> f64 {
    let depth = levels.last().unwrap().depth_end as f64;
    let mut dev = 0.0;
    for l in levels {
        let block = l.n as f64;
        dev += l.grace + 2.0 * block * l.eps; // window at the block endpoint
        dev += l.j as f64 * (l.sup_f + target.abs()); // bridge contamination
        dev += block * (l.a - target).abs(); // stage drift
    }
    dev / depth + 1e-9
}

/// Draw points of the realized limit set, one seeded stream per point.
/// Each point descends the tree through a uniformly chosen leaf, records
/// the Birkhoff averages at every level boundary, and is asserted to land
/// inside the window slack of the target average at the final depth.
pub fn sample_points(tree: &MoranTree, count: usize, seed: u64) -> Vec<SamplePoint> {
    assert!(count <= SAMPLE_CAP, "at most {SAMPLE_CAP} samples per call");
    let slack = window_slack(&tree.levels, tree.target_a);
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            // pick a leaf uniformly, then read its ancestor chain
            let mut idx = rng.gen_range(0..tree.levels.last().unwrap().pieces.len());
            let mut trace = Vec::with_capacity(tree.levels.len());
            let mut x = f64::NAN;
            for (li, lvl) in tree.levels.iter().enumerate().rev() {
                let piece = &lvl.pieces[idx];
                let d = lvl.depth_end as f64;
                trace.push(BirkhoffSnapshot {
                    depth: lvl.depth_end,
                    avg_f: piece.sum_f / d,
                    avg_phi: piece.sum_phi / d,
                });
                if li + 1 == tree.levels.len() {
                    x = piece.interval.mid();
                }
                match piece.parent {
                    Some(p) => idx = p,
                    None => break,
                }
            }
            trace.reverse();
            let final_avg = trace.last().unwrap().avg_f;
            assert!(
                (final_avg - tree.target_a).abs() <= slack,
                "sampled average {final_avg} misses target {} beyond slack {slack}",
                tree.target_a
            );
            SamplePoint { x, trace }
        })
        .collect()
}
