//! Conformal measures: the fixed point of the dual transfer operator,
//! materialized as cylinder masses.

use crate::markov::pressure::PerronData;

/// Word-enumeration budget for residual scans.
const WORD_CAP: usize = 2_000_000;

/// log nu of a cylinder: masses are rho^{-(k-1)} e^{psi_{w_0}+...+psi_{w_{k-2}}}
/// r_{w_{k-1}} with r the normalized Perron vector, so level-one masses are
/// exactly r and every level sums to 1.
pub fn log_conformal_mass(
    succ: &[Vec<usize>],
    data: &PerronData,
    psi: &[f64],
    word: &[usize],
) -> f64 {
    if word.is_empty() {
        return 0.0;
    }
    for w in word.windows(2) {
        if succ[w[0]].binary_search(&w[1]).is_err() {
            return f64::NEG_INFINITY;
        }
    }
    let k = word.len();
    let mut lm = data.log_right[word[k - 1]] - (k as f64 - 1.0) * data.log_rho;
    for &c in &word[..k - 1] {
        lm += psi[c];
    }
    lm
}

/// Max conformality defect over admissible words up to `depth`:
/// |nu(T C_w) - e^{P - psi_{w_0}} nu(C_w)|, where T C_w is the shifted
/// cylinder for |w| >= 2 and the union of successor cylinders for |w| = 1.
/// Enumeration stops at a fixed word budget.
pub fn conformality_residual(
    succ: &[Vec<usize>],
    data: &PerronData,
    psi: &[f64],
    depth: usize,
) -> f64 {
    let nu = |w: &[usize]| log_conformal_mass(succ, data, psi, w).exp();
    let mut worst = 0.0_f64;
    let mut budget = WORD_CAP;

    for i in 0..succ.len() {
        let image: f64 = succ[i].iter().map(|&j| nu(&[j])).sum();
        worst = worst.max((image - (data.log_rho - psi[i]).exp() * nu(&[i])).abs());
    }

    let mut words: Vec<Vec<usize>> = (0..succ.len()).map(|i| vec![i]).collect();
    for _ in 2..=depth {
        let mut next = Vec::new();
        for w in &words {
            for &j in &succ[*w.last().unwrap()] {
                if budget == 0 {
                    return worst;
                }
                budget -= 1;
                let mut v = w.clone();
                v.push(j);
                let defect = nu(&v[1..]) - (data.log_rho - psi[v[0]]).exp() * nu(&v);
                worst = worst.max(defect.abs());
                next.push(v);
            }
        }
        words = next;
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::fixtures::*;
    use crate::markov::pressure::perron_data;

    #[test]
    fn bernoulli_conformal_is_product() {
        let sys = full_shift(2);
        let psi = [0.3_f64.ln(), 0.7_f64.ln()];
        let data = perron_data(&sys.succ, &psi).unwrap();
        let nu0 = log_conformal_mass(&sys.succ, &data, &psi, &[0]).exp();
        assert!((nu0 - 0.3).abs() < 1e-12);
        let nu01 = log_conformal_mass(&sys.succ, &data, &psi, &[0, 1]).exp();
        assert!((nu01 - 0.21).abs() < 1e-12);
        assert!(conformality_residual(&sys.succ, &data, &psi, 8) < 1e-12);
    }

    #[test]
    fn golden_mean_levels_sum_to_one() {
        let sys = golden_mean_system();
        let psi = [0.0, 0.0];
        let data = perron_data(&sys.succ, &psi).unwrap();
        let phi = 0.5 * (1.0 + 5.0_f64.sqrt());
        let nu0 = log_conformal_mass(&sys.succ, &data, &psi, &[0]).exp();
        assert!((nu0 - phi / (phi + 1.0)).abs() < 1e-12);
        assert_eq!(log_conformal_mass(&sys.succ, &data, &psi, &[1, 1]), f64::NEG_INFINITY);

        for depth in 1..=6 {
            let mut words: Vec<Vec<usize>> = (0..sys.len()).map(|i| vec![i]).collect();
            for _ in 1..depth {
                let mut next = Vec::new();
                for w in &words {
                    for &j in &sys.succ[*w.last().unwrap()] {
                        let mut v = w.clone();
                        v.push(j);
                        next.push(v);
                    }
                }
                words = next;
            }
            let total: f64 = words
                .iter()
                .map(|w| log_conformal_mass(&sys.succ, &data, &psi, w).exp())
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "depth {depth}: {total}");
        }
        assert!(conformality_residual(&sys.succ, &data, &psi, 8) < 1e-12);
    }

    #[test]
    fn nonuniform_potential_residual_small() {
        let sys = golden_mean_system();
        let psi = [0.4, -0.9];
        let data = perron_data(&sys.succ, &psi).unwrap();
        assert!(conformality_residual(&sys.succ, &data, &psi, 10) < 1e-11);
    }
}
