//! delta0(a) by bisection of the sign of inf_q P(q(f-a) - delta phi), and
//! the hyperbolic dimension as the zero of delta -> P(-delta phi).

use crate::error::{Error, Result};
use crate::markov::pressure_locally_constant;
use crate::spectrum::infq::inf_q_positive;
use crate::spectrum::LevelData;

#[derive(Debug, Clone, Copy)]
pub struct LevelDelta {
    /// NEG_INFINITY when a is outside the level's admissible interval
    pub delta0: f64,
    pub q_star: f64,
    pub inf_p: f64,
}

/// delta0 on a single level: the last delta with inf_q P > 0, found by
/// bisection over [0, h_top / min phi], a bracket whose upper end is
/// guaranteed nonpositive. At an endpoint of the admissible interval the
/// predicate can fail already at delta = 0; the level set is nonempty there,
/// so the value is 0, not -inf.
pub fn delta0_for_level(level: &LevelData, a: f64, tol_delta: f64, tol_q: f64) -> Result<LevelDelta> {
    let phi_min = level.phi_min();
    if phi_min <= 0.0 {
        return Err(Error::Config("geometric potential must be positive on cells".into()));
    }
    let succ = &level.sys.succ;
    let h_top = pressure_locally_constant(succ, &vec![0.0; level.sys.len()])?;

    let mut last_true = match inf_q_positive(succ, &level.f, &level.phi, a, 0.0, tol_q)? {
        None => {
            return Ok(LevelDelta {
                delta0: f64::NEG_INFINITY,
                q_star: 0.0,
                inf_p: f64::NEG_INFINITY,
            })
        }
        Some((false, q, v)) => return Ok(LevelDelta { delta0: 0.0, q_star: q, inf_p: v }),
        Some((true, q, v)) => (q, v),
    };

    let mut lo = 0.0_f64;
    let mut hi = h_top / phi_min;
    while hi - lo > tol_delta {
        let mid = 0.5 * (lo + hi);
        match inf_q_positive(succ, &level.f, &level.phi, a, mid, tol_q)? {
            Some((true, q, v)) => {
                lo = mid;
                last_true = (q, v);
            }
            _ => hi = mid,
        }
    }
    // the root is a dimension: the bracket start is exact at 0 and the value
    // cannot exceed 1 except by bisection slack
    let delta0 = (0.5 * (lo + hi)).min(1.0);
    Ok(LevelDelta { delta0, q_star: last_true.0, inf_p: last_true.1 })
}

/// Family value: sup over levels, with the witnessing level index.
pub fn delta0_family(
    levels: &[LevelData],
    a: f64,
    tol_delta: f64,
    tol_q: f64,
) -> Result<(LevelDelta, usize)> {
    assert!(!levels.is_empty());
    let mut best: Option<(LevelDelta, usize)> = None;
    for (idx, level) in levels.iter().enumerate() {
        let d = delta0_for_level(level, a, tol_delta, tol_q)?;
        if best.map_or(true, |(b, _)| d.delta0 > b.delta0) {
            best = Some((d, idx));
        }
    }
    Ok(best.unwrap())
}

#[derive(Debug, Clone)]
pub struct HypDimReport {
    /// sup over the family
    pub family: f64,
    pub per_level: Vec<f64>,
}

/// Root of P(-delta phi) = 0 per level (strictly decreasing in delta since
/// phi > 0), maximized over the family.
pub fn hyperbolic_dimension(levels: &[LevelData]) -> Result<HypDimReport> {
    assert!(!levels.is_empty());
    let mut per_level = Vec::with_capacity(levels.len());
    for level in levels {
        let phi_min = level.phi_min();
        if phi_min <= 0.0 {
            return Err(Error::Config("geometric potential must be positive on cells".into()));
        }
        let succ = &level.sys.succ;
        let pressure_at = |delta: f64| -> Result<f64> {
            let psi: Vec<f64> = level.phi.iter().map(|p| -delta * p).collect();
            pressure_locally_constant(succ, &psi)
        };
        let h_top = pressure_at(0.0)?;
        let mut lo = 0.0_f64;
        let mut hi = h_top / phi_min;
        if pressure_at(hi)? > 0.0 {
            hi += 1.0;
        }
        for _ in 0..100 {
            if hi - lo < 1e-13 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if pressure_at(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        per_level.push(0.5 * (lo + hi));
    }
    let family = per_level.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(HypDimReport { family, per_level })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval_maps::RegularPotential;
    use crate::markov::fixtures::*;
    use crate::markov::{equilibrium_measure, ValueConvention};
    use crate::oracle;

    const LN2: f64 = std::f64::consts::LN_2;

    fn digit_level() -> LevelData {
        let sys = doubling_system();
        LevelData::new(sys, vec![0.0, 1.0], vec![LN2, LN2])
    }

    #[test]
    fn digit_frequency_interior_matches_oracle() {
        let level = digit_level();
        let d = delta0_for_level(&level, 0.25, 1e-5, 1e-7).unwrap();
        let exact = oracle::besicovitch_eggleston(&[0.0, 1.0], 0.25).unwrap();
        assert!((d.delta0 - exact).abs() < 5e-5, "got {} expect {exact}", d.delta0);
        assert!(d.inf_p > 0.0);

        let d = delta0_for_level(&level, 0.5, 1e-5, 1e-7).unwrap();
        assert!((d.delta0 - 1.0).abs() < 1e-4, "got {}", d.delta0);
    }

    #[test]
    fn digit_frequency_endpoints_and_outside() {
        let level = digit_level();
        let d = delta0_for_level(&level, 0.0, 1e-5, 1e-7).unwrap();
        assert!(d.delta0.abs() <= 1e-5, "got {}", d.delta0);
        let d = delta0_for_level(&level, 1.0, 1e-5, 1e-7).unwrap();
        assert!(d.delta0.abs() <= 1e-5, "got {}", d.delta0);
        let d = delta0_for_level(&level, 1.5, 1e-5, 1e-7).unwrap();
        assert_eq!(d.delta0, f64::NEG_INFINITY);
    }

    #[test]
    fn lyapunov_spectrum_peaks_at_repeller_dimension() {
        let sys = cookie_cutter_system(2.0, 4.0);
        let phi_pot = RegularPotential::log_derivative(&sys.map).unwrap();
        let phi = sys.cell_values(&phi_pot, ValueConvention::Midpoint);
        let level = LevelData::new(sys, phi.clone(), phi.clone());

        let dim = oracle::moran_root(&[2.0, 4.0]);
        let psi: Vec<f64> = phi.iter().map(|v| -dim * v).collect();
        let mu = equilibrium_measure(&level.sys.succ, &psi).unwrap();
        let a_star = mu.integrate(&phi);

        let d = delta0_for_level(&level, a_star, 1e-6, 1e-8).unwrap();
        assert!((d.delta0 - dim).abs() < 1e-5, "got {} expect {dim}", d.delta0);
    }

    #[test]
    fn hyperbolic_dimension_closed_forms() {
        let full = LevelData::new(doubling_system(), vec![0.0, 1.0], vec![LN2, LN2]);
        let r = hyperbolic_dimension(&[full]).unwrap();
        assert!((r.family - 1.0).abs() < 1e-10, "got {}", r.family);

        let thirds = cookie_cutter_system(3.0, 3.0);
        let phi = vec![3.0_f64.ln(); 2];
        let r = hyperbolic_dimension(&[LevelData::new(thirds, phi.clone(), phi)]).unwrap();
        assert!((r.family - 2.0_f64.ln() / 3.0_f64.ln()).abs() < 1e-6, "got {}", r.family);

        let cc = cookie_cutter_system(2.0, 4.0);
        let phi = vec![2.0_f64.ln(), 4.0_f64.ln()];
        let r = hyperbolic_dimension(&[LevelData::new(cc, phi.clone(), phi)]).unwrap();
        let expect = oracle::moran_root(&[2.0, 4.0]);
        assert!((r.family - expect).abs() < 1e-5, "got {} expect {expect}", r.family);
    }

    #[test]
    fn delta_monotone_in_delta_with_slope_bound() {
        let sys = cookie_cutter_system(2.0, 4.0);
        let f = vec![2.0_f64.ln(), 4.0_f64.ln()];
        let phi = f.clone();
        let phi_min = phi[0];
        // deterministic pseudo-random pairs
        let mut state = 0x9e3779b97f4a7c15_u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..50 {
            let a = 2.0_f64.ln() + next() * (4.0_f64.ln() - 2.0_f64.ln());
            let d1 = next() * 0.5;
            let d2 = d1 + 0.05 + next() * 0.3;
            let v1 = crate::spectrum::inf_q_pressure(&sys.succ, &f, &phi, a, d1, 1e-7)
                .unwrap()
                .value;
            let v2 = crate::spectrum::inf_q_pressure(&sys.succ, &f, &phi, a, d2, 1e-7)
                .unwrap()
                .value;
            assert!(
                v2 <= v1 - (d2 - d1) * phi_min + 1e-6,
                "a={a} d1={d1} d2={d2} v1={v1} v2={v2}"
            );
        }
    }

    #[test]
    fn tangency_of_equilibrium_at_solution() {
        // at (q*, delta0) the equilibrium state of q*(f-a) - delta0 phi has
        // mean close to a and dimension ratio close to delta0
        let level = digit_level();
        let a = 0.25;
        let d = delta0_for_level(&level, a, 1e-6, 1e-8).unwrap();
        let psi: Vec<f64> = level
            .f
            .iter()
            .zip(&level.phi)
            .map(|(fv, pv)| d.q_star * (fv - a) - d.delta0 * pv)
            .collect();
        let mu = equilibrium_measure(&level.sys.succ, &psi).unwrap();
        let mean = mu.integrate(&level.f);
        assert!((mean - a).abs() < 1e-3, "mean {mean}");
        let ratio = mu.entropy() / mu.integrate(&level.phi);
        assert!((ratio - d.delta0).abs() < 2e-3, "ratio {ratio} delta {}", d.delta0);
    }
}
