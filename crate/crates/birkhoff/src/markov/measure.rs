//! Equilibrium (Gibbs) measures of locally constant potentials.

use crate::error::Result;
use crate::markov::pressure::perron_data;

/// Shift-invariant Markov measure in log space. Kernel rows are parallel to
/// the successor lists of the graph it was built on.
#[derive(Debug, Clone)]
pub struct MarkovMeasure {
    pub log_stationary: Vec<f64>,
    pub log_kernel: Vec<Vec<f64>>,
    pub succ: Vec<Vec<usize>>,
}

impl MarkovMeasure {
    pub fn stationary(&self) -> Vec<f64> {
        self.log_stationary.iter().map(|x| x.exp()).collect()
    }

    pub fn kernel_row(&self, i: usize) -> Vec<f64> {
        self.log_kernel[i].iter().map(|x| x.exp()).collect()
    }

    /// Expectation of a cellwise function.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.log_stationary
            .iter()
            .zip(values)
            .map(|(lp, v)| lp.exp() * v)
            .sum()
    }

    /// Kolmogorov-Sinai entropy, with 0 log 0 = 0 (kernel entries on stored
    /// rows are strictly positive, so only missing transitions contribute 0).
    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for (i, row) in self.log_kernel.iter().enumerate() {
            let pi = self.log_stationary[i].exp();
            for lq in row {
                h -= pi * lq.exp() * lq;
            }
        }
        h
    }

    /// log mu of the cylinder with the given cell itinerary; -inf when the
    /// word is not admissible.
    pub fn log_cylinder_mass(&self, word: &[usize]) -> f64 {
        if word.is_empty() {
            return 0.0;
        }
        let mut lm = self.log_stationary[word[0]];
        for w in word.windows(2) {
            match self.succ[w[0]].binary_search(&w[1]) {
                Ok(k) => lm += self.log_kernel[w[0]][k],
                Err(_) => return f64::NEG_INFINITY,
            }
        }
        lm
    }
}

/// Equilibrium measure of a locally constant potential on an irreducible
/// graph: kernel Q_ij = e^{psi_i} r_j / (rho r_i), stationary law l_i r_i.
pub fn equilibrium_measure(succ: &[Vec<usize>], psi: &[f64]) -> Result<MarkovMeasure> {
    let data = perron_data(succ, psi)?;
    let n = succ.len();

    let mut log_kernel = Vec::with_capacity(n);
    for i in 0..n {
        let mut row: Vec<f64> = succ[i]
            .iter()
            .map(|&j| psi[i] + data.log_right[j] - data.log_rho - data.log_right[i])
            .collect();
        // rows are stochastic up to the eigen residual; renormalize the drift
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
        for x in &mut row {
            *x -= lse;
        }
        log_kernel.push(row);
    }

    let mut log_stationary: Vec<f64> = (0..n)
        .map(|i| data.log_left[i] + data.log_right[i])
        .collect();
    let m = log_stationary.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + log_stationary.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
    for x in &mut log_stationary {
        *x -= lse;
    }

    Ok(MarkovMeasure { log_stationary, log_kernel, succ: succ.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::fixtures::*;
    use crate::markov::pressure::pressure_locally_constant;

    #[test]
    fn bernoulli_measure() {
        let sys = full_shift(2);
        let psi = [0.3_f64.ln(), 0.7_f64.ln()];
        let mu = equilibrium_measure(&sys.succ, &psi).unwrap();
        let pi = mu.stationary();
        assert!((pi[0] - 0.3).abs() < 1e-12 && (pi[1] - 0.7).abs() < 1e-12);
        let h_expect = -(0.3_f64 * 0.3_f64.ln() + 0.7 * 0.7_f64.ln());
        assert!((mu.entropy() - h_expect).abs() < 1e-12);
        // product structure of cylinders
        let lm = mu.log_cylinder_mass(&[0, 1, 1]);
        assert!((lm - (0.3_f64 * 0.7 * 0.7).ln()).abs() < 1e-12);
    }

    #[test]
    fn golden_mean_parry() {
        let sys = golden_mean_system();
        let mu = equilibrium_measure(&sys.succ, &[0.0, 0.0]).unwrap();
        let phi = 0.5 * (1.0 + 5.0_f64.sqrt());
        let pi = mu.stationary();
        assert!((pi[0] - phi * phi / (1.0 + phi * phi)).abs() < 1e-12, "{pi:?}");
        assert!((mu.entropy() - phi.ln()).abs() < 1e-12);
        assert_eq!(mu.log_cylinder_mass(&[1, 1]), f64::NEG_INFINITY);
    }

    #[test]
    fn rows_stochastic_and_stationary() {
        let sys = golden_mean_system();
        let psi = [0.8, -0.4];
        let mu = equilibrium_measure(&sys.succ, &psi).unwrap();
        for i in 0..2 {
            let s: f64 = mu.kernel_row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-13);
        }
        let pi = mu.stationary();
        let mut push = vec![0.0; 2];
        for i in 0..2 {
            for (k, &j) in mu.succ[i].iter().enumerate() {
                push[j] += pi[i] * mu.kernel_row(i)[k];
            }
        }
        for i in 0..2 {
            assert!((push[i] - pi[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_plus_energy_is_pressure() {
        let sys = golden_mean_system();
        let psi = [0.23, -1.07];
        let mu = equilibrium_measure(&sys.succ, &psi).unwrap();
        let p = pressure_locally_constant(&sys.succ, &psi).unwrap();
        let lhs = mu.entropy() + mu.integrate(&psi);
        assert!((lhs - p).abs() < 1e-12, "defect {}", lhs - p);
    }
}
