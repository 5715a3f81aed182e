use serde::{Deserialize, Serialize};

/// Closed subinterval of the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Containment up to an endpoint tolerance.
    pub fn covers(&self, other: &Interval, tol: f64) -> bool {
        self.lo <= other.lo + tol && other.hi <= self.hi + tol
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo < hi {
            Some(Interval { lo, hi })
        } else {
            None
        }
    }

    /// Length of the overlap, zero when disjoint.
    pub fn overlap_len(&self, other: &Interval) -> f64 {
        (self.hi.min(other.hi) - self.lo.max(other.lo)).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_ops() {
        let a = Interval::new(0.0, 0.5);
        let b = Interval::new(0.25, 1.0);
        assert_eq!(a.intersect(&b), Some(Interval::new(0.25, 0.5)));
        assert_eq!(a.overlap_len(&b), 0.25);
        assert!(a.covers(&Interval::new(0.1, 0.4), 0.0));
        assert!(!a.covers(&b, 1e-9));
        assert!(Interval::new(0.0, 0.25).intersect(&Interval::new(0.25, 0.5)).is_none());
    }
}
