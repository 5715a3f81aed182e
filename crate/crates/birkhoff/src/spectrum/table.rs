//! Spectrum tables over a grid of target averages.

use rayon::prelude::*;

use crate::error::Result;
use crate::interval::Interval;
use crate::markov::mean_cycle_bounds;
use crate::spectrum::delta::{delta0_family, hyperbolic_dimension};
use crate::spectrum::{LevelData, SpectrumQuery};

/// Membership tolerance for the closed admissible interval.
const H_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct AdmissibleInterval {
    pub interval: Interval,
    /// declared parabolic values that fell outside the cycle-mean hull and
    /// were adjoined to it
    pub parabolic_outside: Vec<f64>,
}

/// Attainable averages: union-hull of per-level extremal cycle means,
/// extended by declared parabolic values. Hull shape is justified by joining
/// subsystems; parabolic values enter because orbits trapped near a neutral
/// point realize them in the limit.
pub fn compute_admissible_interval(levels: &[LevelData], parabolic_values: &[f64]) -> AdmissibleInterval {
    assert!(!levels.is_empty());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for level in levels {
        let (l, h) = mean_cycle_bounds(&level.sys.succ, &level.f);
        lo = lo.min(l);
        hi = hi.max(h);
    }
    let mut outside = Vec::new();
    for &v in parabolic_values {
        if v < lo - H_TOL || v > hi + H_TOL {
            outside.push(v);
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    AdmissibleInterval { interval: Interval::new(lo, hi), parabolic_outside: outside }
}

/// Convex hull of the declared parabolic values intersected with the
/// admissible interval; None when no values are declared. Degenerate
/// (single-point) hulls are legitimate.
pub fn classify_parabolic_hull(parabolic_values: &[f64], h: &Interval) -> Option<Interval> {
    if parabolic_values.is_empty() {
        return None;
    }
    let lo = parabolic_values.iter().copied().fold(f64::INFINITY, f64::min).max(h.lo);
    let hi = parabolic_values.iter().copied().fold(f64::NEG_INFINITY, f64::max).min(h.hi);
    (lo <= hi).then(|| Interval::new(lo, hi))
}

/// Relative interior test: open interval for a genuine hull, the point
/// itself for a degenerate one.
fn in_relative_interior(a: f64, hull: &Interval) -> bool {
    if hull.len() <= 1e-12 {
        (a - hull.lo).abs() <= 1e-12
    } else {
        a > hull.lo + 1e-12 && a < hull.hi - 1e-12
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumRow {
    pub a: f64,
    /// NEG_INFINITY off the admissible interval (empty level set)
    pub delta0: f64,
    pub q_star: f64,
    pub inf_p: f64,
    pub in_h: bool,
    pub in_hp: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SpectrumTable {
    pub rows: Vec<SpectrumRow>,
    pub hyp_dim: f64,
    pub h: Interval,
    pub hp: Option<Interval>,
    pub tol_delta: f64,
}

/// Evaluate delta0 over the grid. Rows are independent and run in parallel;
/// output order follows the grid.
pub fn spectrum_grid(query: &SpectrumQuery) -> Result<SpectrumTable> {
    let h_info = compute_admissible_interval(&query.levels, &query.parabolic_values);
    let h = h_info.interval;
    let hp = classify_parabolic_hull(&query.parabolic_values, &h);
    let hyp = hyperbolic_dimension(&query.levels)?;

    let rows: Result<Vec<SpectrumRow>> = query
        .a_grid
        .par_iter()
        .map(|&a| -> Result<SpectrumRow> {
            let in_h = a >= h.lo - H_TOL && a <= h.hi + H_TOL;
            if !in_h {
                return Ok(SpectrumRow {
                    a,
                    delta0: f64::NEG_INFINITY,
                    q_star: 0.0,
                    inf_p: f64::NEG_INFINITY,
                    in_h: false,
                    in_hp: false,
                    note: None,
                });
            }
            let (ld, level_idx) = delta0_family(&query.levels, a, query.tol_delta, query.tol_q)?;
            let in_hp = hp.as_ref().is_some_and(|hull| in_relative_interior(a, hull));
            let (delta0, note) = if in_hp {
                (hyp.family, Some("set to family hyperbolic dimension on the parabolic hull".to_string()))
            } else if ld.delta0 == f64::NEG_INFINITY {
                (f64::NEG_INFINITY, Some("no level admits this average".to_string()))
            } else if query.levels.len() > 1 {
                (ld.delta0, Some(format!("level {level_idx}")))
            } else {
                (ld.delta0, None)
            };
            Ok(SpectrumRow { a, delta0, q_star: ld.q_star, inf_p: ld.inf_p, in_h, in_hp, note })
        })
        .collect();

    Ok(SpectrumTable { rows: rows?, hyp_dim: hyp.family, h, hp, tol_delta: query.tol_delta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::fixtures::*;
    use crate::oracle;
    use crate::spectrum::LevelData;

    const LN2: f64 = std::f64::consts::LN_2;

    fn digit_level() -> LevelData {
        LevelData::new(doubling_system(), vec![0.0, 1.0], vec![LN2, LN2])
    }

    #[test]
    fn admissible_interval_shapes() {
        let h = compute_admissible_interval(&[digit_level()], &[]);
        assert!((h.interval.lo - 0.0).abs() < 1e-12 && (h.interval.hi - 1.0).abs() < 1e-12);
        assert!(h.parabolic_outside.is_empty());

        let gm = LevelData::new(golden_mean_system(), vec![0.0, 1.0], vec![LN2, LN2]);
        let h = compute_admissible_interval(&[gm.clone()], &[]);
        assert!((h.interval.hi - 0.5).abs() < 1e-12);

        // family hull joins ranges; a declared parabolic value extends it
        let h = compute_admissible_interval(&[gm], &[0.8]);
        assert!((h.interval.hi - 0.8).abs() < 1e-12);
        assert_eq!(h.parabolic_outside, vec![0.8]);
    }

    #[test]
    fn parabolic_hull_classification() {
        let h = Interval::new(0.0, 1.0);
        assert!(classify_parabolic_hull(&[], &h).is_none());
        let hull = classify_parabolic_hull(&[0.3], &h).unwrap();
        assert_eq!((hull.lo, hull.hi), (0.3, 0.3));
        let hull = classify_parabolic_hull(&[0.2, 0.6], &h).unwrap();
        assert_eq!((hull.lo, hull.hi), (0.2, 0.6));
        let hull = classify_parabolic_hull(&[0.9, 1.4], &h).unwrap();
        assert_eq!((hull.lo, hull.hi), (0.9, 1.0));

        assert!(in_relative_interior(0.3, &Interval::new(0.3, 0.3)));
        assert!(!in_relative_interior(0.2, &Interval::new(0.2, 0.6)));
        assert!(in_relative_interior(0.4, &Interval::new(0.2, 0.6)));
    }

    #[test]
    fn digit_frequency_grid_matches_analytic_spectrum() {
        let query = SpectrumQuery {
            levels: vec![digit_level()],
            parabolic_values: vec![],
            a_grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            tol_delta: 1e-4,
            tol_q: 1e-6,
        };
        let table = spectrum_grid(&query).unwrap();
        let expect = [0.0, 0.811_278_124_459_132_8, 1.0, 0.811_278_124_459_132_8, 0.0];
        for (row, e) in table.rows.iter().zip(expect) {
            assert!(row.in_h && !row.in_hp);
            assert!((row.delta0 - e).abs() < 1e-3, "a={} got {} expect {e}", row.a, row.delta0);
        }
        assert!((table.hyp_dim - 1.0).abs() < 1e-9);
        assert!(table.hp.is_none());
    }

    #[test]
    fn constant_observable_grid() {
        let level = LevelData::new(doubling_system(), vec![0.3, 0.3], vec![LN2, LN2]);
        let query = SpectrumQuery {
            levels: vec![level],
            parabolic_values: vec![],
            a_grid: vec![0.2, 0.3, 0.4],
            tol_delta: 1e-6,
            tol_q: 1e-8,
        };
        let table = spectrum_grid(&query).unwrap();
        assert_eq!(table.rows[0].delta0, f64::NEG_INFINITY);
        assert!(!table.rows[0].in_h);
        assert!((table.rows[1].delta0 - table.hyp_dim).abs() < 1e-5);
        assert_eq!(table.rows[2].delta0, f64::NEG_INFINITY);
    }

    #[test]
    fn finite_rows_dominated_by_hyperbolic_dimension() {
        let sys = cookie_cutter_system(2.0, 4.0);
        let phi = vec![2.0_f64.ln(), 4.0_f64.ln()];
        let level = LevelData::new(sys, phi.clone(), phi);
        let a_grid: Vec<f64> = (0..=16)
            .map(|k| 2.0_f64.ln() + (4.0_f64.ln() - 2.0_f64.ln()) * k as f64 / 16.0)
            .collect();
        let query = SpectrumQuery {
            levels: vec![level],
            parabolic_values: vec![],
            a_grid,
            tol_delta: 1e-4,
            tol_q: 1e-6,
        };
        let table = spectrum_grid(&query).unwrap();
        let dim = oracle::moran_root(&[2.0, 4.0]);
        assert!((table.hyp_dim - dim).abs() < 1e-6);
        for row in &table.rows {
            if row.delta0.is_finite() {
                assert!(row.delta0 <= table.hyp_dim + query.tol_delta, "row {row:?}");
            }
        }
        let peak = table.rows.iter().map(|r| r.delta0).fold(f64::NEG_INFINITY, f64::max);
        assert!((peak - dim).abs() < 5e-3, "peak {peak} dim {dim}");
    }
}
