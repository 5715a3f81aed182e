//! Piecewise monotone maps of the unit interval.
//!
//! A map is a finite list of strictly monotone branches with pairwise
//! disjoint domain interiors. When the `repeller` flag is set the domains may
//! leave gaps: points falling into a gap have escaped and the dynamics lives
//! on the survivor set. Branch formulas carry symbolic derivatives, so
//! log-derivative potentials never rely on numerical differentiation.

mod potential;

pub use potential::{RegularPotential, StepApproximation};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::interval::Interval;

/// Sample count per branch for the monotonicity scan.
const MONOTONE_SAMPLES: usize = 10_000;
/// Endpoint tolerance for image containment in [0,1].
const RANGE_TOL: f64 = 1e-9;
/// Fixed points must match to this accuracy to count as parabolic.
pub const PARABOLIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub enum BranchKind {
    Affine { slope: f64, intercept: f64 },
    /// x + scale * x^(1+exponent) + offset, the parabolic normal form.
    Power { scale: f64, exponent: f64, offset: f64 },
    General { forward: Expr, derivative: Expr },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub domain: Interval,
    pub kind: BranchKind,
    pub orientation: Orientation,
    pub image: Interval,
}

impl Branch {
    pub fn apply(&self, x: f64) -> f64 {
        match &self.kind {
            BranchKind::Affine { slope, intercept } => slope * x + intercept,
            BranchKind::Power { scale, exponent, offset } => {
                x + scale * x.powf(1.0 + exponent) + offset
            }
            BranchKind::General { forward, .. } => forward.eval(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match &self.kind {
            BranchKind::Affine { slope, .. } => *slope,
            BranchKind::Power { scale, exponent, .. } => {
                1.0 + scale * (1.0 + exponent) * x.powf(*exponent)
            }
            BranchKind::General { derivative, .. } => derivative.eval(x),
        }
    }

    /// Symbolic derivative, used to assemble log|T'| potentials.
    pub fn derivative_expr(&self) -> Expr {
        match &self.kind {
            BranchKind::Affine { slope, .. } => Expr::Const(*slope),
            BranchKind::Power { scale, exponent, .. } => Expr::Add(
                Box::new(Expr::Const(1.0)),
                Box::new(Expr::Mul(
                    Box::new(Expr::Const(scale * (1.0 + exponent))),
                    Box::new(Expr::Pow(Box::new(Expr::Var), Box::new(Expr::Const(*exponent)))),
                )),
            ),
            BranchKind::General { derivative, .. } => derivative.clone(),
        }
    }

    /// Preimage of y under this branch, clamped to the domain.
    ///
    /// Affine branches invert exactly; the others bisect on the domain, which
    /// is safe because the branch is strictly monotone.
    pub fn invert(&self, y: f64) -> f64 {
        if let BranchKind::Affine { slope, intercept } = self.kind {
            let x = (y - intercept) / slope;
            return x.clamp(self.domain.lo, self.domain.hi);
        }
        let (mut lo, mut hi) = (self.domain.lo, self.domain.hi);
        let increasing = self.orientation == Orientation::Increasing;
        let y = y.clamp(self.image.lo, self.image.hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let v = self.apply(mid);
            if (v < y) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Preimage interval of target ∩ image.
    pub fn pull_back(&self, target: &Interval) -> Option<Interval> {
        let t = target.intersect(&self.image)?;
        let (a, b) = (self.invert(t.lo), self.invert(t.hi));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if lo < hi {
            Some(Interval::new(lo, hi))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone)]
pub struct PiecewiseMonotoneMap {
    pub branches: Vec<Branch>,
    /// Sorted branch endpoints, 0 and 1 included when reached.
    pub breakpoints: Vec<f64>,
    pub parabolic_points: Vec<f64>,
    pub repeller: bool,
}

/// Where a point sits relative to the branch structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Site {
    /// Inside exactly one branch domain (possibly at an unshared endpoint).
    Branch(usize),
    /// A breakpoint shared by two branches; the symbol is ambiguous there.
    SharedBreakpoint(f64),
    /// In a gap between branch domains (repeller maps only).
    Gap,
}

pub struct BranchSpec {
    pub domain: Interval,
    pub kind: BranchKind,
}

/// Validate branch specs and assemble a map.
///
/// Checks domain ordering and disjointness, strict monotonicity on a dense
/// sample, image containment in [0,1], and records parabolic fixed points.
pub fn build_map(specs: Vec<BranchSpec>, repeller: bool) -> Result<PiecewiseMonotoneMap> {
    if specs.is_empty() {
        return Err(Error::Config("map needs at least one branch".into()));
    }
    let mut order: Vec<usize> = (0..specs.len()).collect();
    order.sort_by(|&i, &j| specs[i].domain.lo.partial_cmp(&specs[j].domain.lo).unwrap());
    let specs: Vec<BranchSpec> = order.into_iter().map(|i| BranchSpec { domain: specs[i].domain, kind: specs[i].kind.clone() }).collect();

    for i in 0..specs.len() {
        let d = specs[i].domain;
        if !(0.0..=1.0).contains(&d.lo) || !(0.0..=1.0).contains(&d.hi) || d.lo >= d.hi {
            return Err(Error::Config(format!("branch {i} has bad domain [{}, {}]", d.lo, d.hi)));
        }
        if i + 1 < specs.len() && specs[i + 1].domain.lo < d.hi - 1e-15 {
            return Err(Error::OverlappingDomains { i, j: i + 1 });
        }
        if !repeller {
            if i + 1 < specs.len() && specs[i + 1].domain.lo > d.hi + 1e-12 {
                return Err(Error::Config(format!(
                    "gap after branch {i} but the repeller flag is off"
                )));
            }
        }
    }
    if !repeller {
        if specs[0].domain.lo > 1e-12 || specs.last().unwrap().domain.hi < 1.0 - 1e-12 {
            return Err(Error::Config("branches do not cover [0,1]".into()));
        }
    }

    let mut branches = Vec::with_capacity(specs.len());
    for (b, spec) in specs.iter().enumerate() {
        let d = spec.domain;
        let probe = Branch {
            domain: d,
            kind: spec.kind.clone(),
            orientation: Orientation::Increasing,
            image: Interval::new(0.0, 1.0),
        };
        let mut prev = probe.apply(d.lo);
        let mut dir = 0i8;
        for s in 1..=MONOTONE_SAMPLES {
            let x = d.lo + d.len() * (s as f64) / (MONOTONE_SAMPLES as f64);
            let v = probe.apply(x);
            let step = if v > prev { 1 } else if v < prev { -1 } else { 0 };
            if step == 0 || (dir != 0 && step != dir) {
                return Err(Error::NonMonotoneBranch { branch: b, at: x });
            }
            dir = step;
            prev = v;
        }
        let orientation = if dir >= 0 { Orientation::Increasing } else { Orientation::Decreasing };
        let (ia, ib) = (probe.apply(d.lo), probe.apply(d.hi));
        let (img_lo, img_hi) = if ia <= ib { (ia, ib) } else { (ib, ia) };
        if img_lo < -RANGE_TOL || img_hi > 1.0 + RANGE_TOL {
            let value = if img_lo < -RANGE_TOL { img_lo } else { img_hi };
            return Err(Error::RangeEscape { branch: b, value });
        }
        branches.push(Branch {
            domain: d,
            kind: spec.kind.clone(),
            orientation,
            image: Interval::new(img_lo.clamp(0.0, 1.0), img_hi.clamp(0.0, 1.0)),
        });
    }

    let mut breakpoints = Vec::new();
    for b in &branches {
        breakpoints.push(b.domain.lo);
        breakpoints.push(b.domain.hi);
    }
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breakpoints.dedup();

    let parabolic_points = detect_parabolic(&branches);

    Ok(PiecewiseMonotoneMap { branches, breakpoints, parabolic_points, repeller })
}

fn detect_parabolic(branches: &[Branch]) -> Vec<f64> {
    let mut out = Vec::new();
    for br in branches {
        let mut candidates = vec![br.domain.lo, br.domain.hi];
        // interior fixed points: sign changes of T(x) - x on a coarse scan
        let n = 1024;
        let g = |x: f64| br.apply(x) - x;
        let mut prev_x = br.domain.lo;
        let mut prev_g = g(prev_x);
        for s in 1..=n {
            let x = br.domain.lo + br.domain.len() * (s as f64) / (n as f64);
            let gx = g(x);
            if prev_g == 0.0 {
                candidates.push(prev_x);
            } else if prev_g.signum() != gx.signum() {
                let (mut lo, mut hi) = (prev_x, x);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if g(mid).signum() == g(lo).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-16 {
                        break;
                    }
                }
                candidates.push(0.5 * (lo + hi));
            }
            prev_x = x;
            prev_g = gx;
        }
        for p in candidates {
            if (br.apply(p) - p).abs() <= PARABOLIC_TOL
                && (br.derivative(p).abs() - 1.0).abs() <= PARABOLIC_TOL
            {
                out.push(p);
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    out
}

impl PiecewiseMonotoneMap {
    pub fn locate(&self, x: f64) -> Site {
        let mut owner = None;
        for (b, br) in self.branches.iter().enumerate() {
            if br.domain.contains(x) {
                match owner {
                    None => owner = Some(b),
                    Some(_) => return Site::SharedBreakpoint(x),
                }
            }
        }
        match owner {
            Some(b) => Site::Branch(b),
            None => Site::Gap,
        }
    }

    /// Minimum absolute slope over all branches (dense sample).
    pub fn min_slope(&self) -> f64 {
        let mut m = f64::INFINITY;
        for br in &self.branches {
            for s in 0..=256 {
                let x = br.domain.lo + br.domain.len() * (s as f64) / 256.0;
                m = m.min(br.derivative(x).abs());
            }
        }
        m
    }

    /// Interval of the cylinder with the given branch itinerary, or None
    /// when no point follows it. Computed by inverse-branch composition.
    pub fn cylinder_interval(&self, word: &[usize]) -> Option<Interval> {
        let last = *word.last()?;
        let mut iv = self.branches.get(last)?.domain;
        for &b in word[..word.len() - 1].iter().rev() {
            iv = self.branches.get(b)?.pull_back(&iv)?;
        }
        Some(iv)
    }

    /// Sum of pot over the forward orbit x, Tx, ..., T^{n-1}x.
    ///
    /// Landing exactly on a breakpoint shared by two branches is an error:
    /// the itinerary is ambiguous there. Escaping into a gap is too.
    pub fn birkhoff_sum(&self, pot: &RegularPotential, x: f64, n: usize) -> Result<f64> {
        let mut sum = 0.0;
        let mut x = x;
        for step in 0..n {
            match self.locate(x) {
                Site::Branch(b) => {
                    sum += pot.eval(x);
                    if step + 1 < n {
                        x = self.branches[b].apply(x);
                    }
                }
                Site::SharedBreakpoint(x) => {
                    return Err(Error::OrbitHitsBreakpoint { step, x });
                }
                Site::Gap => return Err(Error::OrbitEscapes { step, x }),
            }
        }
        Ok(sum)
    }
}
