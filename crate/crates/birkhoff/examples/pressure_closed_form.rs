//! Pressure on a full shift with per-cell constants has the closed form
//! P = log(sum of e^{c_i}). Runs the solver against it for several alphabet
//! sizes, then checks two identities the solver keeps to machine accuracy:
//! additivity under constant shifts and the variational equality at the
//! equilibrium measure.

use birkhoff::markov::{equilibrium_measure, perron_data, pressure_locally_constant};

fn full_shift(m: usize) -> Vec<Vec<usize>> {
    vec![(0..m).collect(); m]
}

fn main() -> birkhoff::Result<()> {
    let cases: [&[f64]; 4] = [
        &[0.0, 0.0],
        &[std::f64::consts::LN_2, -1.0],
        &[0.3, -0.7, 1.9],
        &[-2.0, 0.25, 0.5, -0.125, 3.0, 0.75],
    ];

    println!("{:>5} {:>22} {:>22} {:>10}", "m", "P(psi)", "closed form", "error");
    for psi in cases {
        let succ = full_shift(psi.len());
        let p = pressure_locally_constant(&succ, psi)?;
        let exact = psi.iter().map(|c| c.exp()).sum::<f64>().ln();
        let err = (p - exact).abs();
        println!("{:>5} {:>22.15} {:>22.15} {:>10.2e}", psi.len(), p, exact, err);
        assert!(err < 1e-12);

        // constant shift moves the pressure by exactly the same constant
        let shifted: Vec<f64> = psi.iter().map(|c| c + 0.875).collect();
        let p_shifted = pressure_locally_constant(&succ, &shifted)?;
        assert!((p_shifted - p - 0.875).abs() < 1e-12);
    }

    // h(mu) + int psi dmu = P(psi) at the equilibrium state, strict
    // inequality for anything else
    let psi = [0.3, -0.7, 1.9];
    let succ = full_shift(3);
    let p = pressure_locally_constant(&succ, &psi)?;
    let mu = equilibrium_measure(&succ, &psi)?;
    let attained = mu.entropy() + mu.integrate(&psi);
    println!("\nvariational equality: P = {p:.15}, h + int psi = {attained:.15}");
    assert!((attained - p).abs() < 1e-10);

    let data = perron_data(&succ, &psi)?;
    println!("perron residual = {:.2e}, period = {}", data.residual, data.period);
    assert!(data.residual < 1e-9);
    Ok(())
}
