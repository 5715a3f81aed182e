//! Hyperbolic dimension of cookie-cutter repellers, cross-checked against
//! the Moran equation root sum slopes_i^{-d} = 1. For a self-similar survivor
//! set the two must agree to solver tolerance.

use birkhoff::config::{assemble, parse_str};
use birkhoff::oracle::moran_root;
use birkhoff::spectrum::hyperbolic_dimension;

fn cookie_cutter_doc(slopes: &[f64]) -> String {
    format!(
        r#"
[map]
preset = "cookie_cutter"
slopes = {slopes:?}

[potentials.f]
pieces = [[0.0, "1/2", "0"], ["3/4", 1.0, "1"]]

[query]
a_grid = {{ start = 0.0, stop = 1.0, count = 3 }}
"#
    )
}

fn main() -> birkhoff::Result<()> {
    for slopes in [vec![3.0, 3.0], vec![2.0, 4.0], vec![2.0, 3.0, 9.0]] {
        let asm = assemble(&parse_str(&cookie_cutter_doc(&slopes))?)?;
        let report = hyperbolic_dimension(&asm.levels)?;
        let root = moran_root(&slopes);
        let err = (report.family - root).abs();
        println!(
            "slopes {slopes:?}: hyp_dim = {:.12}, moran root = {root:.12}, error = {err:.2e}",
            report.family
        );
        assert!(err < 1e-5);
    }

    // (3,3) is the middle-third Cantor set, (2,4) the golden ratio exponent
    assert!((moran_root(&[3.0, 3.0]) - 2.0f64.ln() / 3.0f64.ln()).abs() < 1e-10);
    assert!((moran_root(&[2.0, 4.0]) - 0.694_241_913_630_617_3).abs() < 1e-10);
    Ok(())
}
