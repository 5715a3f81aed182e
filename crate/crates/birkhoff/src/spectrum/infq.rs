//! Infimum over q of the convex map q -> P(q(f - a) - delta phi).

use crate::error::{Error, Result};
use crate::markov::{mean_cycle_bounds, pressure_locally_constant};

const GOLDEN_STEP: f64 = 0.381_966_011_250_105_2;
const GOLDEN_CAP: usize = 200;
const EXPANSION_CAP: u32 = 60;
/// Slack around the cycle-mean hull of f when deciding that the infimum is
/// -inf without probing the tails.
const HULL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct InfQ {
    pub q_star: f64,
    pub value: f64,
    /// Some(-1) when the infimum is a limit at q -> -inf, Some(1) on the
    /// other side (endpoint of the admissible interval); None when the
    /// minimum is interior.
    pub tail: Option<i8>,
}

pub(crate) enum MinOutcome {
    /// interior minimum located to tolerance
    Interior { q: f64, value: f64 },
    /// monotone tail flattened out: infimum is a limit on this side
    Tail { side: i8, q: f64, value: f64 },
    /// a bracketed evaluation fell at or below the sign threshold
    Below { q: f64, value: f64 },
    /// convex lower bound rose above the sign threshold
    ProvenAbove { q: f64, value: f64 },
    /// still descending after the expansion cap: no coercivity
    Diverging,
}

/// Minimize a convex function over the line. `sign_threshold` enables the
/// early exits used by predicates that only need the sign of the infimum.
/// Those exits fire only once the minimum is certified finite (a bracket or
/// a flattened tail): a threshold crossing during open-ended descent says
/// nothing about whether the infimum is finite or -inf.
pub(crate) fn minimize_convex(
    g: &mut dyn FnMut(f64) -> Result<f64>,
    tol_q: f64,
    sign_threshold: Option<f64>,
) -> Result<MinOutcome> {
    let g0 = g(0.0)?;
    let g_pos = g(1.0)?;
    let g_neg = g(-1.0)?;

    let tie = 1e-12 * g0.abs().max(g_pos.abs()).max(g_neg.abs()).max(1.0);
    if g_pos < g0 - tie && g_pos <= g_neg {
        expand(g, 1, (0.0, g0), (1.0, g_pos), tol_q, sign_threshold)
    } else if g_neg < g0 - tie {
        expand(g, -1, (0.0, g0), (-1.0, g_neg), tol_q, sign_threshold)
    } else {
        golden(g, (-1.0, g_neg), (0.0, g0), (1.0, g_pos), tol_q, sign_threshold)
    }
}

/// Double outward until the function turns (bracket found), flattens (tail
/// limit), or keeps a nonvanishing slope past the cap (divergence).
fn expand(
    g: &mut dyn FnMut(f64) -> Result<f64>,
    side: i8,
    mut prev2: (f64, f64),
    mut prev: (f64, f64),
    tol_q: f64,
    sign_threshold: Option<f64>,
) -> Result<MinOutcome> {
    for _ in 0..EXPANSION_CAP {
        let q = prev.0 * 2.0;
        let v = g(q)?;
        let tie = 1e-12 * v.abs().max(prev.1.abs()).max(1.0);
        if v >= prev.1 - tie {
            // turned: minimum sits between prev2 and q
            return if side > 0 {
                golden(g, prev2, prev, (q, v), tol_q, sign_threshold)
            } else {
                golden(g, (q, v), prev, prev2, tol_q, sign_threshold)
            };
        }
        let slope = (prev.1 - v) / (q - prev.0).abs();
        if slope < tol_q {
            return Ok(MinOutcome::Tail { side, q, value: v });
        }
        prev2 = prev;
        prev = (q, v);
    }
    Ok(MinOutcome::Diverging)
}

/// Golden-section contraction of a bracket l < m < r with g(m) <= g(l), g(r).
/// Convexity gives the lower bound g(m) - max(|chord slopes|) * width, which
/// powers the ProvenAbove early exit.
fn golden(
    g: &mut dyn FnMut(f64) -> Result<f64>,
    mut left: (f64, f64),
    mut mid: (f64, f64),
    mut right: (f64, f64),
    tol_q: f64,
    sign_threshold: Option<f64>,
) -> Result<MinOutcome> {
    let below = |v: f64| sign_threshold.is_some_and(|t| v <= t);
    for _ in 0..GOLDEN_CAP {
        if below(mid.1) {
            return Ok(MinOutcome::Below { q: mid.0, value: mid.1 });
        }
        if let Some(t) = sign_threshold {
            let s_lm = (mid.1 - left.1) / (mid.0 - left.0);
            let s_mr = (right.1 - mid.1) / (right.0 - mid.0);
            let dip = (s_lm.abs() * (right.0 - mid.0)).max(s_mr.abs() * (mid.0 - left.0));
            if mid.1 - dip > t {
                return Ok(MinOutcome::ProvenAbove { q: mid.0, value: mid.1 });
            }
        }
        if right.0 - left.0 < tol_q {
            break;
        }
        let probe_right = right.0 - mid.0 > mid.0 - left.0;
        let x = if probe_right {
            mid.0 + GOLDEN_STEP * (right.0 - mid.0)
        } else {
            mid.0 - GOLDEN_STEP * (mid.0 - left.0)
        };
        let gx = g(x)?;
        if gx < mid.1 {
            if probe_right {
                left = mid;
            } else {
                right = mid;
            }
            mid = (x, gx);
        } else if probe_right {
            right = (x, gx);
        } else {
            left = (x, gx);
        }
    }
    Ok(MinOutcome::Interior { q: mid.0, value: mid.1 })
}

/// inf over q of P(q(f - a) - delta phi) on one level. Interior minima come
/// from golden-section search over an exponentially expanded bracket;
/// endpoint values of a yield tail limits instead. A residual descent slope
/// past the expansion cap means a lies outside the admissible interval.
pub fn inf_q_pressure(
    succ: &[Vec<usize>],
    f: &[f64],
    phi: &[f64],
    a: f64,
    delta: f64,
    tol_q: f64,
) -> Result<InfQ> {
    let (m_lo, m_hi) = mean_cycle_bounds(succ, f);
    if a < m_lo - HULL_TOL || a > m_hi + HULL_TOL {
        return Err(Error::BracketOverflow { a });
    }
    let mut g = |q: f64| -> Result<f64> {
        let psi: Vec<f64> = f
            .iter()
            .zip(phi)
            .map(|(fv, pv)| q * (fv - a) - delta * pv)
            .collect();
        pressure_locally_constant(succ, &psi)
    };
    match minimize_convex(&mut g, tol_q, None)? {
        MinOutcome::Interior { q, value } => Ok(InfQ { q_star: q, value, tail: None }),
        MinOutcome::Tail { side, q, value } => Ok(InfQ { q_star: q, value, tail: Some(side) }),
        MinOutcome::Diverging => Err(Error::BracketOverflow { a }),
        MinOutcome::Below { .. } | MinOutcome::ProvenAbove { .. } => unreachable!("no threshold"),
    }
}

/// Sign of the infimum: Some(true) iff inf > 0, None when a is outside the
/// level's admissible interval (the infimum is -inf). The returned pair is
/// the witnessing (q, value).
pub(crate) fn inf_q_positive(
    succ: &[Vec<usize>],
    f: &[f64],
    phi: &[f64],
    a: f64,
    delta: f64,
    tol_q: f64,
) -> Result<Option<(bool, f64, f64)>> {
    let (m_lo, m_hi) = mean_cycle_bounds(succ, f);
    if a < m_lo - HULL_TOL || a > m_hi + HULL_TOL {
        return Ok(None);
    }
    let mut g = |q: f64| -> Result<f64> {
        let psi: Vec<f64> = f
            .iter()
            .zip(phi)
            .map(|(fv, pv)| q * (fv - a) - delta * pv)
            .collect();
        pressure_locally_constant(succ, &psi)
    };
    Ok(match minimize_convex(&mut g, tol_q, Some(0.0))? {
        MinOutcome::Below { q, value } => Some((false, q, value)),
        MinOutcome::ProvenAbove { q, value } => Some((true, q, value)),
        MinOutcome::Interior { q, value } | MinOutcome::Tail { q, value, .. } => {
            Some((value > 0.0, q, value))
        }
        MinOutcome::Diverging => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::fixtures::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn symmetric_minimum_at_zero() {
        let sys = full_shift(2);
        let r = inf_q_pressure(&sys.succ, &[0.0, 1.0], &[LN2, LN2], 0.5, 0.0, 1e-8).unwrap();
        assert!(r.tail.is_none());
        assert!(r.q_star.abs() < 1e-4, "q* = {}", r.q_star);
        assert!((r.value - LN2).abs() < 1e-10, "value = {}", r.value);
    }

    #[test]
    fn legendre_point_vanishes() {
        // at delta = binary entropy of 1/4 over log 2 the infimum is 0
        let sys = full_shift(2);
        let delta = 0.811_278_124_459_132_8;
        let r = inf_q_pressure(&sys.succ, &[0.0, 1.0], &[LN2, LN2], 0.25, delta, 1e-8).unwrap();
        assert!(r.value.abs() < 1e-5, "value = {}", r.value);
        // the optimal tilt is log(p/(1-p)) shifted by the delta term
        assert!(r.tail.is_none());
    }

    #[test]
    fn constant_observable_is_flat() {
        let sys = full_shift(2);
        let r = inf_q_pressure(&sys.succ, &[0.3, 0.3], &[LN2, LN2], 0.3, 0.0, 1e-8).unwrap();
        assert!((r.value - LN2).abs() < 1e-12);
    }

    #[test]
    fn endpoint_gives_tail_limit() {
        let sys = full_shift(2);
        let r = inf_q_pressure(&sys.succ, &[0.0, 1.0], &[LN2, LN2], 0.0, 0.0, 1e-6).unwrap();
        assert_eq!(r.tail, Some(-1));
        assert!(r.value.abs() < 1e-6, "value = {}", r.value);
        let r = inf_q_pressure(&sys.succ, &[0.0, 1.0], &[LN2, LN2], 1.0, 0.0, 1e-6).unwrap();
        assert_eq!(r.tail, Some(1));
        assert!(r.value.abs() < 1e-6);
    }

    #[test]
    fn outside_admissible_interval_overflows() {
        let sys = full_shift(2);
        let r = inf_q_pressure(&sys.succ, &[0.0, 1.0], &[LN2, LN2], 1.5, 0.0, 1e-6);
        assert!(matches!(r, Err(Error::BracketOverflow { .. })), "got {r:?}");
        let r = inf_q_positive(&sys.succ, &[0.0, 1.0], &[LN2, LN2], -0.2, 0.0, 1e-6).unwrap();
        assert!(r.is_none());
    }

    #[test]
    fn sign_shortcut_agrees_with_full_minimum() {
        let sys = golden_mean_system();
        let f = [0.0, 1.0];
        let phi = [LN2, LN2];
        for &(a, delta) in &[(0.25, 0.1), (0.25, 0.9), (0.4, 0.3), (0.1, 0.68)] {
            let full = inf_q_pressure(&sys.succ, &f, &phi, a, delta, 1e-8).unwrap();
            let (positive, _, _) =
                inf_q_positive(&sys.succ, &f, &phi, a, delta, 1e-8).unwrap().unwrap();
            assert_eq!(positive, full.value > 0.0, "a={a} delta={delta} full={full:?}");
        }
    }
}

