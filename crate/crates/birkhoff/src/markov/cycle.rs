//! Extremal cycle means: the endpoints of the set of ergodic averages.

use crate::markov::MarkovSystem;

/// Minimum mean over all cycles, vertex-weighted: the mean of a cycle is the
/// average of `weight` over its vertices. Karp dynamic program with walks of
/// exactly k edges from any start (all-zero initialization).
pub fn min_mean_cycle(succ: &[Vec<usize>], weight: &[f64]) -> f64 {
    let n = succ.len();
    assert!(n > 0);
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    table.push(vec![0.0; n]);
    for k in 1..=n {
        let prev = &table[k - 1];
        let mut cur = vec![f64::INFINITY; n];
        for u in 0..n {
            if prev[u].is_finite() {
                let through = prev[u] + weight[u];
                for &v in &succ[u] {
                    if through < cur[v] {
                        cur[v] = through;
                    }
                }
            }
        }
        table.push(cur);
    }
    let mut best = f64::INFINITY;
    for v in 0..n {
        if !table[n][v].is_finite() {
            continue;
        }
        let mut worst = f64::NEG_INFINITY;
        for k in 0..n {
            if table[k][v].is_finite() {
                worst = worst.max((table[n][v] - table[k][v]) / (n - k) as f64);
            }
        }
        best = best.min(worst);
    }
    best
}

/// (min, max) cycle mean of a vertex weight.
pub fn mean_cycle_bounds(succ: &[Vec<usize>], weight: &[f64]) -> (f64, f64) {
    let lo = min_mean_cycle(succ, weight);
    let negated: Vec<f64> = weight.iter().map(|x| -x).collect();
    let hi = -min_mean_cycle(succ, &negated);
    (lo, hi)
}

/// Range of ergodic averages of a cellwise observable over the system, the
/// closure of its Birkhoff spectrum.
pub fn ergodic_average_range(sys: &MarkovSystem, values: &[f64]) -> (f64, f64) {
    mean_cycle_bounds(&sys.succ, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::fixtures::*;

    /// min/max cycle mean by enumerating simple cycles; every cycle mean is a
    /// convex combination of simple cycle means, so this is exhaustive.
    fn brute_bounds(succ: &[Vec<usize>], weight: &[f64]) -> (f64, f64) {
        let n = succ.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        fn walk(
            succ: &[Vec<usize>],
            weight: &[f64],
            start: usize,
            u: usize,
            sum: f64,
            len: usize,
            seen: &mut Vec<bool>,
            lo: &mut f64,
            hi: &mut f64,
        ) {
            for &v in &succ[u] {
                if v == start {
                    let mean = (sum + weight[u]) / (len + 1) as f64;
                    *lo = lo.min(mean);
                    *hi = hi.max(mean);
                } else if v > start && !seen[v] {
                    seen[v] = true;
                    walk(succ, weight, start, v, sum + weight[u], len + 1, seen, lo, hi);
                    seen[v] = false;
                }
            }
        }
        for s in 0..n {
            let mut seen = vec![false; n];
            seen[s] = true;
            walk(succ, weight, s, s, 0.0, 0, &mut seen, &mut lo, &mut hi);
        }
        (lo, hi)
    }

    #[test]
    fn golden_mean_indicator_range() {
        let sys = golden_mean_system();
        let (lo, hi) = ergodic_average_range(&sys, &[0.0, 1.0]);
        assert!((lo - 0.0).abs() < 1e-14 && (hi - 0.5).abs() < 1e-14);
        let (lo, hi) = ergodic_average_range(&sys, &[1.0, 0.0]);
        assert!((lo - 0.5).abs() < 1e-14 && (hi - 1.0).abs() < 1e-14);
    }

    #[test]
    fn full_shift_range_is_weight_hull() {
        let sys = full_shift(3);
        let (lo, hi) = ergodic_average_range(&sys, &[0.4, -1.2, 0.3]);
        assert!((lo + 1.2).abs() < 1e-14 && (hi - 0.4).abs() < 1e-14);
    }

    #[test]
    fn two_cycle_single_mean() {
        let succ = vec![vec![1], vec![0]];
        let (lo, hi) = mean_cycle_bounds(&succ, &[3.0, 5.0]);
        assert!((lo - 4.0).abs() < 1e-14 && (hi - 4.0).abs() < 1e-14);
    }

    #[test]
    fn matches_simple_cycle_enumeration() {
        // 5-vertex graph with mixed cycle structure
        let succ: Vec<Vec<usize>> = vec![
            vec![1, 2],
            vec![0, 3],
            vec![3],
            vec![0, 4],
            vec![1],
        ];
        let weight = [0.7, -0.3, 1.9, 0.1, -1.1];
        let (klo, khi) = mean_cycle_bounds(&succ, &weight);
        let (blo, bhi) = brute_bounds(&succ, &weight);
        assert!((klo - blo).abs() < 1e-12, "karp {klo} brute {blo}");
        assert!((khi - bhi).abs() < 1e-12, "karp {khi} brute {bhi}");
    }
}
