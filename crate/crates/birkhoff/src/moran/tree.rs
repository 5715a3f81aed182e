//! Realizing a construction plan as a finite tree of nested intervals.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{word_passes, BridgeRouter, ChainSampler, ConstructionPlan, PlannedStage, LEVEL_CAP};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::markov::MarkovSystem;

/// Largest admissible-word count still enumerated exhaustively.
const EXACT_WORD_BUDGET: u128 = 1 << 21;
/// Candidates drawn per sampling batch.
const BATCH: usize = 1024;

/// One interval of the realized tree. `word` lists the stage-local symbols
/// this piece lays on the global itinerary; for bridged levels the trailing
/// landing symbol is dropped because the next level starts on it.
#[derive(Debug, Clone, Serialize)]
pub struct MoranPiece {
    pub word: Vec<usize>,
    pub parent: Option<usize>,
    pub interval: Interval,
    /// log of the equidistributed w-mass of this piece
    pub log_mass: f64,
    /// symbolic log diameter of the cylinder this piece represents
    pub log_diam: f64,
    /// Birkhoff sum of f over the whole chain down to this piece
    pub sum_f: f64,
    pub sum_phi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MoranLevel {
    /// index into the plan's stage list
    pub stage: usize,
    pub n: usize,
    /// realized majority bridge time, 0 on the final level
    pub j: usize,
    /// cumulative symbols through this level
    pub depth_end: usize,
    /// log of this stage's selection count (exact or window-estimated)
    pub log_count: f64,
    /// whether the selection was enumerated exhaustively
    pub exact: bool,
    /// fraction of candidate words the windows and majority class kept
    pub retained: f64,
    pub a: f64,
    pub lambda: f64,
    pub h: f64,
    pub eps: f64,
    /// prefix-window grace inherited from the previous block
    pub grace: f64,
    pub sup_f: f64,
    pub pieces: Vec<MoranPiece>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MoranTree {
    pub levels: Vec<MoranLevel>,
    /// total symbolic depth
    pub depth: usize,
    pub target_a: f64,
}

/// Number of admissible words of the given length, None above the budget.
fn path_count(succ: &[Vec<usize>], start: Option<usize>, len: usize) -> Option<u64> {
    let mut counts = vec![0u128; succ.len()];
    match start {
        Some(s) => counts[s] = 1,
        None => counts.fill(1),
    }
    for _ in 1..len {
        let mut next = vec![0u128; succ.len()];
        for (v, row) in succ.iter().enumerate() {
            if counts[v] == 0 {
                continue;
            }
            for &u in row {
                next[u] = (next[u] + counts[v]).min(EXACT_WORD_BUDGET + 1);
            }
        }
        counts = next;
    }
    let total: u128 = counts.iter().sum();
    (total <= EXACT_WORD_BUDGET).then_some(total as u64)
}

/// Depth-first walk over admissible words; the visitor returns false to stop.
fn enumerate_words(
    succ: &[Vec<usize>],
    start: Option<usize>,
    len: usize,
    visit: &mut dyn FnMut(&[usize]) -> bool,
) {
    fn dfs(
        succ: &[Vec<usize>],
        word: &mut Vec<usize>,
        len: usize,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if word.len() == len {
            return visit(word);
        }
        let c = *word.last().unwrap();
        for i in 0..succ[c].len() {
            word.push(succ[c][i]);
            let go = dfs(succ, word, len, visit);
            word.pop();
            if !go {
                return false;
            }
        }
        true
    }
    let starts: Vec<usize> = match start {
        Some(s) => vec![s],
        None => (0..succ.len()).collect(),
    };
    let mut word = Vec::with_capacity(len);
    for s in starts {
        word.clear();
        word.push(s);
        if !dfs(succ, &mut word, len, visit) {
            return;
        }
    }
}

fn majority<K: Copy + Ord>(tally: &BTreeMap<K, u64>) -> (K, u64, u64) {
    let total: u64 = tally.values().sum();
    let (k, c) = tally
        .iter()
        .fold(None, |best: Option<(K, u64)>, (&k, &c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((k, c)),
        })
        .expect("tally is nonempty");
    (k, c, total)
}

/// Pull an interval back through a stage-local word, last symbol first.
/// When float cancellation collapses the preimage the midpoint survives as a
/// degenerate interval clamped into the cell, so nesting is preserved.
fn pull_word(sys: &MarkovSystem, word: &[usize], mut iv: Interval) -> Interval {
    for &c in word.iter().rev() {
        let br = &sys.map.branches[sys.cell_branch[c]];
        let cell = &sys.cells[c];
        iv = match br.pull_back(&iv).and_then(|p| p.intersect(cell)) {
            Some(p) => p,
            None => {
                let x = br.invert(iv.mid()).clamp(cell.lo, cell.hi);
                Interval::new(x, x)
            }
        };
    }
    iv
}

struct Selection {
    words: Vec<Vec<usize>>,
    log_count: f64,
    exact: bool,
    retained: f64,
    jstar: usize,
}

fn select_exact(
    st: &PlannedStage,
    start: Option<usize>,
    grace: f64,
    first: bool,
    router: Option<&BridgeRouter>,
    stage: usize,
    total_words: u64,
) -> Result<Selection> {
    let n = st.n;
    let mut tally: BTreeMap<usize, u64> = BTreeMap::new();
    enumerate_words(&st.sys.succ, start, n + 1, &mut |w| {
        if word_passes(st, w, grace, first) {
            let class = router.map_or(0, |r| r.dist[w[n]]);
            *tally.entry(class).or_insert(0) += 1;
        }
        true
    });
    if tally.is_empty() {
        return Err(Error::EmptySelection { stage });
    }
    let (jstar, count, _) = majority(&tally);
    let mut words = Vec::new();
    enumerate_words(&st.sys.succ, start, n + 1, &mut |w| {
        if word_passes(st, w, grace, first) && router.map_or(0, |r| r.dist[w[n]]) == jstar {
            words.push(w.to_vec());
            words.len() < LEVEL_CAP
        } else {
            true
        }
    });
    Ok(Selection {
        words,
        log_count: (count as f64).ln(),
        exact: true,
        retained: count as f64 / total_words as f64,
        jstar,
    })
}

fn select_sampled(
    st: &PlannedStage,
    start: Option<usize>,
    grace: f64,
    first: bool,
    router: Option<&BridgeRouter>,
    stage: usize,
    seed: u64,
    target: usize,
) -> Result<Selection> {
    let n = st.n;
    let sampler = ChainSampler::new(&st.gibbs);
    let base = (stage as u64 + 1) << 40;
    let mut accepted: Vec<Vec<usize>> = Vec::new();
    let mut attempts = 0u64;
    let max_attempts = 200 * target as u64 + 10_000;
    while accepted.len() < 2 * target && attempts < max_attempts {
        let batch: Vec<Vec<usize>> = (0..BATCH)
            .into_par_iter()
            .filter_map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(base + attempts + t as u64);
                let w = sampler.word(start, n + 1, &mut rng);
                word_passes(st, &w, grace, first).then_some(w)
            })
            .collect();
        attempts += BATCH as u64;
        accepted.extend(batch);
    }
    if accepted.is_empty() {
        return Err(Error::EmptySelection { stage });
    }
    let rate = accepted.len() as f64 / attempts as f64;
    let (jstar, frac) = match router {
        Some(r) => {
            let mut tally: BTreeMap<usize, u64> = BTreeMap::new();
            for w in &accepted {
                *tally.entry(r.dist[w[n]]).or_insert(0) += 1;
            }
            let (j, c, total) = majority(&tally);
            accepted.retain(|w| r.dist[w[n]] == j);
            (j, c as f64 / total as f64)
        }
        None => (0, 1.0),
    };
    accepted.truncate(target);
    Ok(Selection {
        words: accepted,
        log_count: (rate * frac).ln() + n as f64 * st.h,
        exact: false,
        retained: rate * frac,
        jstar,
    })
}

/// Realize a plan down to `max_depth` symbols. Levels are built in order;
/// each either enumerates its stage's admissible words exhaustively (below
/// a fixed budget) or draws seeded Gibbs samples, filters them through the
/// stage windows, keeps the majority bridge-time class, and equidistributes
/// mass. A stage whose block does not fit the remaining depth is dropped,
/// and the last realized level keeps its closing symbol instead of bridging.
pub fn build_tree(plan: &ConstructionPlan, max_depth: usize) -> Result<MoranTree> {
    if plan.stages.is_empty() {
        return Err(Error::Config("cannot build a tree from an empty plan".into()));
    }
    let mut levels: Vec<MoranLevel> = Vec::new();
    let mut depth = 0usize;
    let mut cum_log_count = 0.0_f64;
    let mut prev_block = (0usize, f64::INFINITY); // (realized m, eps) of previous block
    let mut pair_rng = ChaCha8Rng::seed_from_u64(plan.seed);

    for (k, st) in plan.stages.iter().enumerate() {
        let n = st.n;
        if depth + n + 1 > max_depth {
            break;
        }
        let has_next =
            k + 1 < plan.stages.len() && depth + n + st.l + plan.stages[k + 1].n + 1 <= max_depth;
        let bridge = if has_next {
            let landing = st.landing_cell.expect("planned stage with a successor is linked");
            Some((BridgeRouter::new(&st.sys.succ, landing), landing))
        } else {
            None
        };
        let router = bridge.as_ref().map(|(r, _)| r);

        let first = k == 0;
        let start = if first { None } else { Some(plan.stages[k - 1].bridge_cell.unwrap()) };
        let grace = if first { 0.0 } else { prev_block.0 as f64 * prev_block.1 };

        let sel = match path_count(&st.sys.succ, start, n + 1) {
            Some(total) => select_exact(st, start, grace, first, router, k, total)?,
            None => select_sampled(st, start, grace, first, router, k, plan.seed, plan.reps_per_level)?,
        };
        cum_log_count += sel.log_count;

        // pair each kept word with a parent piece
        let parents = levels.last().map(|l| l.pieces.len()).unwrap_or(0);
        let pairs: Vec<(Option<usize>, usize)> = if levels.is_empty() {
            (0..sel.words.len()).map(|s| (None, s)).collect()
        } else if sel.exact {
            let total = parents * sel.words.len();
            if total <= LEVEL_CAP {
                (0..total).map(|t| (Some(t / sel.words.len()), t % sel.words.len())).collect()
            } else {
                pair_rng.set_stream((k as u64 + 1) << 40 | 1 << 39);
                (0..LEVEL_CAP)
                    .map(|_| {
                        (Some(pair_rng.gen_range(0..parents)), pair_rng.gen_range(0..sel.words.len()))
                    })
                    .collect()
            }
        } else {
            (0..sel.words.len()).map(|t| (Some(t % parents), t)).collect()
        };

        let mut pieces = Vec::with_capacity(pairs.len());
        for (p, s) in pairs {
            let mut stored = sel.words[s].clone();
            let end_cell = match &bridge {
                Some((r, landing)) => {
                    stored.extend(r.path(stored[n]));
                    let last = stored.pop().expect("bridged word is nonempty");
                    debug_assert_eq!(last, *landing);
                    *landing
                }
                None => *stored.last().unwrap(),
            };
            let (mut sum_f, mut sum_phi) = p
                .map(|i| {
                    let pp = &levels.last().unwrap().pieces[i];
                    (pp.sum_f, pp.sum_phi)
                })
                .unwrap_or((0.0, 0.0));
            for &c in &stored {
                sum_f += st.f[c];
                sum_phi += st.phi[c];
            }
            let chain_phi = if bridge.is_some() { sum_phi } else { sum_phi - st.phi[end_cell] };
            let log_diam = st.sys.cells[end_cell].len().ln() - chain_phi;

            let mut iv = st.sys.cells[end_cell];
            if bridge.is_some() {
                iv = pull_word(&st.sys, &stored, iv);
            } else {
                iv = pull_word(&st.sys, &stored[..stored.len() - 1], iv);
            }
            let mut anc = p.map(|i| (levels.len() - 1, i));
            while let Some((li, pi)) = anc {
                let lp = &levels[li].pieces[pi];
                iv = pull_word(&plan.stages[levels[li].stage].sys, &lp.word, iv);
                anc = lp.parent.map(|q| (li - 1, q));
            }

            pieces.push(MoranPiece {
                word: stored,
                parent: p,
                interval: iv,
                log_mass: -cum_log_count,
                log_diam,
                sum_f,
                sum_phi,
            });
        }

        let stored_len = if bridge.is_some() { n + sel.jstar } else { n + 1 };
        depth += stored_len;
        prev_block = (depth.saturating_sub(sel.jstar) , st.eps);
        levels.push(MoranLevel {
            stage: k,
            n,
            j: if bridge.is_some() { sel.jstar } else { 0 },
            depth_end: depth,
            log_count: sel.log_count,
            exact: sel.exact,
            retained: sel.retained,
            a: st.a,
            lambda: st.lambda,
            h: st.h,
            eps: st.eps,
            grace,
            sup_f: st.sup_f,
            pieces,
        });
        if bridge.is_none() {
            break;
        }
    }

    if levels.is_empty() {
        return Err(Error::Config(format!(
            "max depth {max_depth} cannot fit the first stage block"
        )));
    }
    Ok(MoranTree { depth, target_a: plan.target_a, levels })
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::super::{plan_construction, MoranSpec, StageSpec};
    use super::*;
    use crate::interval_maps::RegularPotential;
    use crate::markov::fixtures::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn quarter_plan(eps: f64, target_depth: usize, seed: u64) -> ConstructionPlan {
        let spec = MoranSpec {
            stages: vec![StageSpec {
                sys: doubling_system(),
                gibbs: bernoulli_pot(0.25, 0.75),
                f: digit_pot(),
                phi: RegularPotential::constant(LN2),
                eps,
            }],
            target_depth,
            reps_per_level: 2048,
            seed,
        };
        plan_construction(&spec, 0.75).unwrap()
    }

    #[test]
    fn symmetric_level_keeps_every_word() {
        let spec = MoranSpec {
            stages: vec![StageSpec {
                sys: doubling_system(),
                gibbs: constant_pot(0.0),
                f: digit_pot(),
                phi: RegularPotential::constant(LN2),
                eps: 0.3,
            }],
            target_depth: 0,
            reps_per_level: 4096,
            seed: 2,
        };
        let mut plan = plan_construction(&spec, 0.5).unwrap();
        plan.stages[0].n = 10;
        plan.stages[0].m = 10;
        let tree = build_tree(&plan, 11).unwrap();
        assert_eq!(tree.levels.len(), 1);
        let lvl = &tree.levels[0];
        assert!(lvl.exact);
        assert_eq!(lvl.pieces.len(), 2048, "all 2^11 words pass the loose windows");
        assert!((lvl.log_count - 2048f64.ln()).abs() < 1e-12);

        let mass: f64 = lvl.pieces.iter().map(|p| p.log_mass.exp()).sum();
        assert!((mass - 1.0).abs() < 1e-10, "mass sum {mass}");
        let total_len: f64 = lvl.pieces.iter().map(|p| p.interval.len()).sum();
        assert!((total_len - 1.0).abs() < 1e-9, "dyadic intervals tile the line");
        for p in &lvl.pieces {
            assert_eq!(p.word.len(), 11);
            assert!((p.log_diam - p.interval.len().ln()).abs() < 1e-9);
            assert!((p.log_diam + 11.0 * LN2).abs() < 1e-9);
        }
    }

    #[test]
    fn quarter_gibbs_exact_selection_matches_brute_force() {
        let mut plan = quarter_plan(0.1, 0, 7);
        plan.stages[0].n = 14;
        plan.stages[0].m = 14;
        let tree = build_tree(&plan, 15).unwrap();
        let lvl = &tree.levels[0];
        assert!(lvl.exact);

        // independent recount straight from the window definitions
        let st = &plan.stages[0];
        let mut count = 0u64;
        let mut retained_mass = 0.0;
        for bits in 0..(1u32 << 15) {
            let word: Vec<usize> = (0..15).map(|t| ((bits >> t) & 1) as usize).collect();
            let s: f64 = word[..14].iter().map(|&c| st.f[c]).sum();
            let lm = st.gibbs.log_cylinder_mass(&word);
            let w = 2.0 * 14.0 * st.eps;
            if (s - 14.0 * st.a).abs() < w
                && (lm + 14.0 * st.h).abs() < w
                && (14.0 * LN2 - 14.0 * st.lambda).abs() < w
            {
                count += 1;
                retained_mass += lm.exp();
            }
        }
        assert_eq!(lvl.pieces.len(), count as usize);
        assert!((lvl.log_count - (count as f64).ln()).abs() < 1e-12);
        assert!(retained_mass > 1.0 - 2.0 * st.eps, "windows keep {retained_mass}");

        for p in &lvl.pieces {
            assert_eq!(p.word.len(), 15);
            assert!((p.log_diam + 15.0 * LN2).abs() < 1e-9);
            assert!((p.interval.len().ln() - p.log_diam).abs() < 1e-6);
            assert!((p.log_mass - (-(count as f64).ln())).abs() < 1e-12);
        }
    }

    #[test]
    fn two_stage_bridge_lands_in_the_shared_cell() {
        let spec = MoranSpec {
            stages: vec![
                StageSpec {
                    sys: doubling_system(),
                    gibbs: constant_pot(0.0),
                    f: digit_pot(),
                    phi: RegularPotential::constant(LN2),
                    eps: 0.5,
                },
                StageSpec {
                    sys: golden_mean_system(),
                    gibbs: constant_pot(0.0),
                    f: digit_pot(),
                    phi: RegularPotential::constant(LN2),
                    eps: 0.25,
                },
            ],
            target_depth: 0,
            reps_per_level: 256,
            seed: 9,
        };
        let plan = plan_construction(&spec, 0.4).unwrap();
        let st0 = &plan.stages[0];
        assert!(st0.bridge_cell.is_some());
        let tree = build_tree(&plan, 200).unwrap();
        assert_eq!(tree.levels.len(), 2);

        let (l0, l1) = (&tree.levels[0], &tree.levels[1]);
        assert!(l0.j <= st0.l);
        assert_eq!(l0.depth_end, l0.n + l0.j);
        let bridge = st0.bridge_cell.unwrap();
        let golden = &plan.stages[1].sys;
        for p in &l1.pieces {
            assert_eq!(p.word[0], bridge, "level 2 words start on the bridge cell");
            for w in p.word.windows(2) {
                assert!(golden.is_transition(w[0], w[1]), "inadmissible step {w:?}");
            }
            let parent = &l0.pieces[p.parent.unwrap()];
            assert!(
                parent.interval.covers(&p.interval, 1e-9),
                "child {:?} escapes parent {:?}",
                p.interval,
                parent.interval
            );
            assert!(p.log_diam <= parent.log_diam + 1e-12);
        }

        // equidistribution: every level's masses sum to 1 while uncapped
        for lvl in &tree.levels {
            let mass: f64 = lvl.pieces.iter().map(|p| p.log_mass.exp()).sum();
            if lvl.exact {
                assert!((mass - 1.0).abs() < 1e-10, "level mass {mass}");
            }
        }
    }

    #[test]
    fn unreachable_average_empties_the_selection() {
        let mut plan = quarter_plan(0.1, 0, 3);
        plan.stages[0].n = 10;
        plan.stages[0].m = 10;
        plan.stages[0].a = 0.0;
        match build_tree(&plan, 11) {
            Err(Error::EmptySelection { stage: 0 }) => {}
            other => panic!("expected EmptySelection, got {other:?}"),
        }
    }

    #[test]
    fn same_seed_rebuild_is_identical() {
        let plan = quarter_plan(0.1, 0, 13);
        let t1 = build_tree(&plan, 400).unwrap();
        let t2 = build_tree(&plan, 400).unwrap();
        assert_eq!(
            serde_json::to_string(&t1).unwrap(),
            serde_json::to_string(&t2).unwrap()
        );
    }
}
