//! Digit-frequency spectrum of the doubling map. The dimension of the set
//! where the binary digit 1 has frequency a is the binary entropy H(a)/log 2,
//! which gives every solver stage an analytic target.

use birkhoff::config::{assemble, parse_str};
use birkhoff::oracle::besicovitch_eggleston;
use birkhoff::spectrum::spectrum_grid;

const DOC: &str = r#"
[map]
preset = "doubling"

[potentials.f]
pieces = [[0.0, "1/2", "0"], ["1/2", 1.0, "1"]]

[query]
a_grid = { start = 0.0, stop = 1.0, count = 17 }
"#;

fn main() -> birkhoff::Result<()> {
    let asm = assemble(&parse_str(DOC)?)?;
    let table = spectrum_grid(&asm.spectrum_query()?)?;

    println!("H = {:?}, hyp_dim = {:.12}", table.h, table.hyp_dim);
    println!("{:>8} {:>18} {:>18} {:>10}", "a", "delta0", "H(a)/log 2", "error");
    let mut worst = 0.0f64;
    for row in &table.rows {
        let exact = besicovitch_eggleston(&[0.0, 1.0], row.a)?;
        let err = (row.delta0 - exact).abs();
        worst = worst.max(err);
        println!("{:>8.4} {:>18.12} {:>18.12} {:>10.2e}", row.a, row.delta0, exact, err);
    }
    println!("worst error = {worst:.2e}");
    assert!(worst < 1e-3);

    // the peak sits at a = 1/2 with full dimension
    let mid = table.rows.iter().find(|r| (r.a - 0.5).abs() < 1e-12).unwrap();
    assert!((mid.delta0 - 1.0).abs() < 1e-3);
    Ok(())
}
