//! Shape checks on computed spectrum tables: no interior dips below the
//! flanks, and continuity consistent with a refined grid.

use crate::spectrum::table::SpectrumTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnimodalViolation {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// min(delta(a1), delta(a3)) - delta(a2), positive by more than the
    /// allowed slack
    pub defect: f64,
}

/// Every interior value must reach at least the smaller flank value:
/// delta(a2) >= min(delta(a1), delta(a3)) - 2 tol for all a1 < a2 < a3.
/// Rows off the admissible interval carry -inf and never charge a violation
/// as flanks. Flagged parabolic-hull rows hold the family hyperbolic
/// dimension, not the per-level estimator, and stay out of the triples.
pub fn check_unimodal(table: &SpectrumTable) -> Vec<UnimodalViolation> {
    let tol = 2.0 * table.tol_delta;
    let rows: Vec<&crate::spectrum::table::SpectrumRow> = table
        .rows
        .iter()
        .filter(|r| !(r.in_hp && r.note.is_some()))
        .collect();
    let mut out = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            for k in j + 1..rows.len() {
                let flank = rows[i].delta0.min(rows[k].delta0);
                let defect = flank - rows[j].delta0;
                if defect > tol {
                    out.push(UnimodalViolation {
                        a1: rows[i].a,
                        a2: rows[j].a,
                        a3: rows[k].a,
                        defect,
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct SemicontinuityReport {
    /// (a, |value - interpolation|, allowed modulus)
    pub continuity_violations: Vec<(f64, f64, f64)>,
    /// (a, side sign, observed one-sided limit estimate, required floor)
    pub lsc_violations: Vec<(f64, i8, f64, f64)>,
    pub checked_continuity: usize,
    pub checked_lsc: usize,
}

impl SemicontinuityReport {
    pub fn pass(&self) -> bool {
        self.continuity_violations.is_empty() && self.lsc_violations.is_empty()
    }
}

/// Compare a coarse table against a refinement of its grid. Points on the
/// hyperbolic part must match the refined neighbor interpolation within the
/// local oscillation of the refined table; points on the parabolic hull are
/// only required to dominate the one-sided limits (lower semicontinuity).
pub fn check_semicontinuity(coarse: &SpectrumTable, refined: &SpectrumTable) -> SemicontinuityReport {
    let tol = 2.0 * coarse.tol_delta.max(refined.tol_delta);
    let fine: Vec<(f64, f64)> = refined
        .rows
        .iter()
        .filter(|r| r.delta0.is_finite())
        .map(|r| (r.a, r.delta0))
        .collect();

    let mut report = SemicontinuityReport {
        continuity_violations: Vec::new(),
        lsc_violations: Vec::new(),
        checked_continuity: 0,
        checked_lsc: 0,
    };

    for (i, row) in coarse.rows.iter().enumerate() {
        if !row.in_h {
            continue;
        }
        if row.in_hp {
            // a clamped row quotes the family hyperbolic dimension, which a
            // refined grid of per-level values cannot be held against
            if row.note.is_some() {
                continue;
            }
            report.checked_lsc += 1;
            let floor = row.delta0 - tol;
            let left = fine.iter().rev().find(|&&(x, _)| x < row.a - 1e-12);
            let right = fine.iter().find(|&&(x, _)| x > row.a + 1e-12);
            if let Some(&(_, v)) = left {
                if v < floor {
                    report.lsc_violations.push((row.a, -1, v, floor));
                }
            }
            if let Some(&(_, v)) = right {
                if v < floor {
                    report.lsc_violations.push((row.a, 1, v, floor));
                }
            }
            continue;
        }
        if !row.delta0.is_finite() {
            continue;
        }
        let left = fine.iter().rev().find(|&&(x, _)| x < row.a - 1e-12);
        let right = fine.iter().find(|&&(x, _)| x > row.a + 1e-12);
        let (l, r) = match (left, right) {
            (Some(&l), Some(&r)) => (l, r),
            // one-sided coarse endpoints carry no interpolation claim
            _ => continue,
        };
        report.checked_continuity += 1;
        let interp = l.1 + (r.1 - l.1) * (row.a - l.0) / (r.0 - l.0);

        // local oscillation of the refined table around this point
        let window_lo = if i > 0 { coarse.rows[i - 1].a } else { f64::NEG_INFINITY };
        let window_hi = if i + 1 < coarse.rows.len() { coarse.rows[i + 1].a } else { f64::INFINITY };
        let mut modulus = tol;
        let mut prev: Option<f64> = None;
        for &(x, v) in &fine {
            if x < window_lo - 1e-12 || x > window_hi + 1e-12 {
                continue;
            }
            if let Some(p) = prev {
                modulus = modulus.max((v - p).abs() + tol);
            }
            prev = Some(v);
        }
        let defect = (row.delta0 - interp).abs();
        if defect > modulus {
            report.continuity_violations.push((row.a, defect, modulus));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::Interval;
    use crate::markov::fixtures::doubling_system;
    use crate::spectrum::table::{spectrum_grid, SpectrumRow};
    use crate::spectrum::{LevelData, SpectrumQuery};

    const LN2: f64 = std::f64::consts::LN_2;

    fn digit_table(points: usize, tol_delta: f64) -> SpectrumTable {
        let level = LevelData::new(doubling_system(), vec![0.0, 1.0], vec![LN2, LN2]);
        let a_grid: Vec<f64> = (0..points).map(|k| k as f64 / (points - 1) as f64).collect();
        spectrum_grid(&SpectrumQuery {
            levels: vec![level],
            parabolic_values: vec![],
            a_grid,
            tol_delta,
            tol_q: 1e-6,
        })
        .unwrap()
    }

    fn synthetic(values: &[f64]) -> SpectrumTable {
        let rows = values
            .iter()
            .enumerate()
            .map(|(i, &v)| SpectrumRow {
                a: i as f64,
                delta0: v,
                q_star: 0.0,
                inf_p: 0.1,
                in_h: true,
                in_hp: false,
                note: None,
            })
            .collect();
        SpectrumTable {
            rows,
            hyp_dim: 1.0,
            h: Interval::new(0.0, values.len() as f64),
            hp: None,
            tol_delta: 1e-4,
        }
    }

    #[test]
    fn concave_table_has_no_dips() {
        let table = digit_table(17, 1e-4);
        assert!(check_unimodal(&table).is_empty());
    }

    #[test]
    fn synthetic_dip_is_reported() {
        let table = synthetic(&[0.5, 0.2, 0.5]);
        let v = check_unimodal(&table);
        assert_eq!(v.len(), 1);
        assert!((v[0].defect - 0.3).abs() < 1e-12);

        assert!(check_unimodal(&synthetic(&[0.5, 0.2])).is_empty());
    }

    #[test]
    fn clamped_hull_rows_stay_out_of_the_triples() {
        let mut table = synthetic(&[0.9, 0.4, 0.6, 0.5]);
        assert!(!check_unimodal(&table).is_empty());
        table.rows[0].in_hp = true;
        table.rows[0].note = Some("set to family hyperbolic dimension".into());
        assert!(check_unimodal(&table).is_empty());
    }

    #[test]
    fn refinement_consistency_on_smooth_spectrum() {
        let coarse = digit_table(9, 1e-4);
        let refined = digit_table(33, 1e-4);
        let report = check_semicontinuity(&coarse, &refined);
        assert!(report.pass(), "{report:?}");
        assert!(report.checked_continuity >= 7);
    }

    #[test]
    fn artificial_spike_fails_continuity() {
        let mut coarse = digit_table(9, 1e-4);
        let refined = digit_table(33, 1e-4);
        coarse.rows[4].delta0 = 0.2;
        let report = check_semicontinuity(&coarse, &refined);
        assert_eq!(report.continuity_violations.len(), 1);
        assert!(!report.pass());
    }
}
