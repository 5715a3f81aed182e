//! Piecewise regular potentials and their step sandwiches.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::interval::Interval;
use crate::interval_maps::PiecewiseMonotoneMap;

/// Samples per cell when estimating inf/sup of a piece on a subinterval.
const OSC_SAMPLES: usize = 64;
/// Hard cap on step approximation cells.
const CELL_CAP: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    /// Constant on every piece.
    Step,
    /// At least one piece varies.
    SmoothPiecewise,
}

/// A potential given by finitely many expression pieces on closed intervals
/// with disjoint interiors. Each piece is continuous up to its endpoints, so
/// one-sided limits exist everywhere; at a breakpoint shared by two pieces
/// the potential takes the midpoint of the two limits.
#[derive(Debug, Clone)]
pub struct RegularPotential {
    pieces: Vec<(Interval, Expr)>,
    kind: PotentialKind,
}

impl RegularPotential {
    pub fn new(mut pieces: Vec<(Interval, Expr)>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Config("potential needs at least one piece".into()));
        }
        pieces.sort_by(|a, b| a.0.lo.partial_cmp(&b.0.lo).unwrap());
        for i in 0..pieces.len() {
            let iv = pieces[i].0;
            if iv.lo >= iv.hi {
                return Err(Error::Config(format!("potential piece {i} is degenerate")));
            }
            if i + 1 < pieces.len() && pieces[i + 1].0.lo < iv.hi - 1e-15 {
                return Err(Error::Config(format!("potential pieces {i} and {} overlap", i + 1)));
            }
            for s in 0..=OSC_SAMPLES {
                let x = iv.lo + iv.len() * (s as f64) / (OSC_SAMPLES as f64);
                let v = pieces[i].1.eval(x);
                if !v.is_finite() {
                    return Err(Error::Config(format!(
                        "potential piece {i} is not finite at x = {x}"
                    )));
                }
            }
        }
        let kind = if pieces.iter().all(|(_, e)| e.is_constant()) {
            PotentialKind::Step
        } else {
            PotentialKind::SmoothPiecewise
        };
        Ok(RegularPotential { pieces, kind })
    }

    pub fn constant(c: f64) -> Self {
        RegularPotential {
            pieces: vec![(Interval::new(0.0, 1.0), Expr::Const(c))],
            kind: PotentialKind::Step,
        }
    }

    /// log|T'| assembled from the symbolic branch derivatives.
    pub fn log_derivative(map: &PiecewiseMonotoneMap) -> Result<Self> {
        let pieces = map
            .branches
            .iter()
            .map(|b| {
                let d = b.derivative_expr();
                let e = Expr::Call(
                    crate::expr::Func::Log,
                    Box::new(Expr::Call(crate::expr::Func::Abs, Box::new(d))),
                );
                (b.domain, e)
            })
            .collect();
        RegularPotential::new(pieces)
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn pieces(&self) -> &[(Interval, Expr)] {
        &self.pieces
    }

    /// One-sided limit from the left (`+false`) or right (`true`) at x.
    fn one_sided(&self, x: f64, from_right: bool) -> Option<f64> {
        for (iv, e) in &self.pieces {
            if from_right && iv.lo <= x && x < iv.hi {
                return Some(e.eval(x));
            }
            if !from_right && iv.lo < x && x <= iv.hi {
                return Some(e.eval(x));
            }
        }
        None
    }

    /// Value at x. Interior points use their piece; a point shared by two
    /// pieces gets the midpoint of the one-sided limits; outside every piece
    /// the value is NaN (gap of a repeller).
    pub fn eval(&self, x: f64) -> f64 {
        let mut holders: Vec<&Expr> = Vec::new();
        for (iv, e) in &self.pieces {
            if iv.contains(x) {
                holders.push(e);
            }
        }
        match holders.len() {
            0 => f64::NAN,
            1 => holders[0].eval(x),
            _ => {
                let l = self.one_sided(x, false).unwrap();
                let r = self.one_sided(x, true).unwrap();
                0.5 * (l + r)
            }
        }
    }

    /// Supremum of |pot| over the pieces (dense sample).
    pub fn sup_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for (iv, e) in &self.pieces {
            for s in 0..=OSC_SAMPLES {
                let x = iv.lo + iv.len() * (s as f64) / (OSC_SAMPLES as f64);
                m = m.max(e.eval(x).abs());
            }
        }
        m
    }

    /// Enclosure of the range over a cell, intersected with each piece.
    pub fn bounds_on(&self, cell: &Interval) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (iv, e) in &self.pieces {
            if let Some(part) = iv.intersect(cell) {
                let (a, b) = Self::sampled_bounds(e, &part);
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        (lo, hi)
    }

    /// Enclosure of the range of expr on the cell: sampled min/max widened by
    /// a curvature term, so interior extrema between samples stay inside.
    /// The widening is exactly zero for affine and constant pieces.
    fn sampled_bounds(expr: &Expr, cell: &Interval) -> (f64, f64) {
        let mut v = [0.0; OSC_SAMPLES + 1];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in 0..=OSC_SAMPLES {
            let x = cell.lo + cell.len() * (s as f64) / (OSC_SAMPLES as f64);
            v[s] = expr.eval(x);
            lo = lo.min(v[s]);
            hi = hi.max(v[s]);
        }
        let mut second: f64 = 0.0;
        for s in 1..OSC_SAMPLES {
            second = second.max((v[s + 1] - 2.0 * v[s] + v[s - 1]).abs());
        }
        // |g''| h^2 / 8 bounds the sample-vs-true gap; the second difference
        // is |g''| h^2 up to higher order, so a quarter of it is a safe pad
        let pad = 0.25 * second;
        (lo - pad, hi + pad)
    }

    /// Step sandwich: constants per cell with lower <= pot <= upper and
    /// sup(upper - lower) <= eps, refining each piece uniformly as needed.
    pub fn step_approximation(&self, eps: f64) -> Result<StepApproximation> {
        assert!(eps > 0.0, "eps must be positive");
        let mut cells: Vec<(Interval, usize)> = Vec::new();
        for (pi, (iv, expr)) in self.pieces.iter().enumerate() {
            let (lo, hi) = Self::sampled_bounds(expr, iv);
            let mut parts = ((hi - lo) / eps).ceil() as usize;
            parts = parts.max(1);
            for p in 0..parts {
                let a = iv.lo + iv.len() * (p as f64) / (parts as f64);
                let b = iv.lo + iv.len() * ((p + 1) as f64) / (parts as f64);
                cells.push((Interval::new(a, b), pi));
            }
        }
        // curvature can leave some cells above eps; split those again
        loop {
            let mut next: Vec<(Interval, usize)> = Vec::with_capacity(cells.len());
            let mut worst: f64 = 0.0;
            let mut split_any = false;
            for (cell, pi) in &cells {
                let (lo, hi) = Self::sampled_bounds(&self.pieces[*pi].1, cell);
                let osc = hi - lo;
                worst = worst.max(osc);
                if osc > eps * (1.0 + 1e-9) && cells.len() < CELL_CAP {
                    split_any = true;
                    let m = cell.mid();
                    next.push((Interval::new(cell.lo, m), *pi));
                    next.push((Interval::new(m, cell.hi), *pi));
                } else {
                    next.push((*cell, *pi));
                }
            }
            if !split_any {
                if worst > eps * (1.0 + 1e-9) {
                    return Err(Error::UnreachableTolerance {
                        requested: eps,
                        achieved: worst,
                        cells: cells.len(),
                    });
                }
                break;
            }
            cells = next;
            if cells.len() >= CELL_CAP {
                // one final measurement pass decides success below
                let worst = cells
                    .iter()
                    .map(|(c, pi)| {
                        let (lo, hi) = Self::sampled_bounds(&self.pieces[*pi].1, c);
                        hi - lo
                    })
                    .fold(0.0f64, f64::max);
                if worst > eps * (1.0 + 1e-9) {
                    return Err(Error::UnreachableTolerance {
                        requested: eps,
                        achieved: worst,
                        cells: cells.len(),
                    });
                }
                break;
            }
        }

        let mut breakpoints = Vec::with_capacity(cells.len() + 1);
        let mut lower = Vec::with_capacity(cells.len());
        let mut upper = Vec::with_capacity(cells.len());
        let mut gap: f64 = 0.0;
        for (cell, pi) in &cells {
            let (lo, hi) = Self::sampled_bounds(&self.pieces[*pi].1, cell);
            breakpoints.push(cell.lo);
            lower.push(lo);
            upper.push(hi);
            gap = gap.max(hi - lo);
        }
        breakpoints.push(cells.last().unwrap().0.hi);
        Ok(StepApproximation { breakpoints, lower, upper, gap })
    }
}

/// Step sandwich of a potential: cell i is [breakpoints[i], breakpoints[i+1]].
#[derive(Debug, Clone)]
pub struct StepApproximation {
    pub breakpoints: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub gap: f64,
}

impl StepApproximation {
    pub fn cells(&self) -> usize {
        self.lower.len()
    }

    /// Index of the cell holding x, breaking ties to the left cell.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        if x < self.breakpoints[0] || x > *self.breakpoints.last().unwrap() {
            return None;
        }
        let i = self.breakpoints.partition_point(|&b| b < x);
        Some(i.saturating_sub(1).min(self.lower.len() - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr;

    fn digit_indicator() -> RegularPotential {
        RegularPotential::new(vec![
            (Interval::new(0.0, 0.5), expr::parse("0").unwrap()),
            (Interval::new(0.5, 1.0), expr::parse("1").unwrap()),
        ])
        .unwrap()
    }

    #[test]
    fn midpoint_convention() {
        let p = digit_indicator();
        assert_eq!(p.kind(), PotentialKind::Step);
        assert_eq!(p.eval(0.25), 0.0);
        assert_eq!(p.eval(0.75), 1.0);
        assert!((p.eval(0.5) - 0.5).abs() <= 1e-12);
        assert_eq!(p.eval(0.0), 0.0);
        assert_eq!(p.eval(1.0), 1.0);
    }

    #[test]
    fn identity_steps_into_quarters() {
        let p = RegularPotential::new(vec![(Interval::new(0.0, 1.0), expr::parse("x").unwrap())])
            .unwrap();
        let s = p.step_approximation(0.25).unwrap();
        assert_eq!(s.breakpoints, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(s.lower, vec![0.0, 0.25, 0.5, 0.75]);
        assert_eq!(s.upper, vec![0.25, 0.5, 0.75, 1.0]);
        assert!((s.gap - 0.25).abs() < 1e-12);
    }

    #[test]
    fn step_potential_needs_no_refinement() {
        let p = digit_indicator();
        let s = p.step_approximation(0.01).unwrap();
        assert_eq!(s.cells(), 2);
        assert_eq!(s.gap, 0.0);
        assert_eq!(s.lower, s.upper);
    }

    #[test]
    fn sandwich_holds_pointwise() {
        let p = RegularPotential::new(vec![(
            Interval::new(0.0, 1.0),
            expr::parse("sin(pi*x)*0.8 + 0.1*x").unwrap(),
        )])
        .unwrap();
        let s = p.step_approximation(0.05).unwrap();
        assert!(s.gap <= 0.05);
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..1000 {
            // cheap deterministic pseudo-random points
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = (state >> 11) as f64 / (1u64 << 53) as f64;
            if s.breakpoints.contains(&x) {
                continue;
            }
            let c = s.cell_of(x).unwrap();
            let v = p.eval(x);
            assert!(
                s.lower[c] <= v + 1e-12 && v <= s.upper[c] + 1e-12,
                "sandwich broken at {x}"
            );
        }
    }

    #[test]
    fn unreachable_tolerance_reports_gap() {
        // steep spike forces more than 2^14 cells at eps = 1e-6
        let p = RegularPotential::new(vec![(
            Interval::new(0.0, 1.0),
            expr::parse("sin(200*x)").unwrap(),
        )])
        .unwrap();
        match p.step_approximation(1e-6) {
            Err(Error::UnreachableTolerance { requested, achieved, cells }) => {
                assert_eq!(requested, 1e-6);
                assert!(achieved > 1e-6);
                assert!(cells >= 1 << 13);
            }
            other => panic!("expected UnreachableTolerance, got {other:?}"),
        }
    }

    #[test]
    fn log_derivative_of_affine_map_is_step() {
        let m = crate::interval_maps::tests::doubling();
        let phi = RegularPotential::log_derivative(&m).unwrap();
        assert_eq!(phi.kind(), PotentialKind::Step);
        assert!((phi.eval(0.3) - 2f64.ln()).abs() < 1e-15);
    }
}
