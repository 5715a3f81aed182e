//! Pressure of a genuinely non-constant potential, enclosed by step
//! potentials from below and above. Refining the cylinder partition tightens
//! the per-cell bounds, and with them the pressure bracket, to any requested
//! width.

use birkhoff::config::{assemble, parse_str};
use birkhoff::expr::parse;
use birkhoff::interval::Interval;
use birkhoff::interval_maps::RegularPotential;
use birkhoff::markov::pressure_regular;

const DOC: &str = r#"
[map]
preset = "doubling"

[potentials.f]
pieces = [[0.0, "1/2", "0"], ["1/2", 1.0, "1"]]

[query]
a_grid = { start = 0.0, stop = 1.0, count = 3 }
"#;

fn main() -> birkhoff::Result<()> {
    let asm = assemble(&parse_str(DOC)?)?;
    let expr = parse("x*(1-x)").expect("fixed expression parses");
    let pot = RegularPotential::new(vec![(Interval::new(0.0, 1.0), expr)])?;

    // per-cell oscillation of the step pair shrinks linearly with eps
    for eps in [0.25, 0.05, 0.01] {
        let step = pot.step_approximation(eps)?;
        println!("eps = {eps:<5} cells = {:>5}  gap = {:.4e}", step.cells(), step.gap);
        assert!(step.gap <= eps + 1e-12);
    }

    println!("\n{:>8} {:>7} {:>7} {:>20} {:>20} {:>10}", "tol", "depth", "cells", "lower", "upper", "width");
    let mut prev: Option<(f64, f64)> = None;
    for tol in [1e-1, 1e-2, 1e-3, 1e-4] {
        let b = pressure_regular(&asm.sys, &pot, tol)?;
        println!(
            "{tol:>8.0e} {:>7} {:>7} {:>20.12} {:>20.12} {:>10.2e}",
            b.depth,
            b.cells,
            b.lower,
            b.upper,
            b.width()
        );
        assert!(b.lower <= b.upper && b.width() <= tol);
        if let Some((lo, hi)) = prev {
            // brackets nest as the partition refines
            assert!(b.lower >= lo - 1e-12 && b.upper <= hi + 1e-12);
        }
        prev = Some((b.lower, b.upper));
    }

    // past the refinement budget the solver reports how far it got instead
    // of looping
    match pressure_regular(&asm.sys, &pot, 1e-9) {
        Err(birkhoff::Error::UnreachableTolerance { requested, achieved, cells }) => {
            println!("\ntol {requested:.0e} is out of reach: width {achieved:.2e} at {cells} cells");
        }
        other => panic!("expected the tolerance to be unreachable, got {other:?}"),
    }

    // constant potentials collapse the sandwich at depth zero
    let flat = pressure_regular(&asm.sys, &RegularPotential::constant(0.25), 1e-12)?;
    assert_eq!(flat.depth, 0);
    assert!((flat.lower - (2.0f64.ln() + 0.25)).abs() < 1e-12);
    println!("\nconstant check: P(1/4) = {:.12} = log 2 + 1/4", flat.lower);
    Ok(())
}
