//! Intermittent map with a neutral fixed point at the origin. Cells touching
//! the parabolic point are cut away at successive refinement depths, leaving
//! a family of expanding subsystems whose hyperbolic dimensions increase
//! toward the full invariant set. On the parabolic hull the spectrum row is
//! pinned to the family value rather than any single truncation level.

use std::path::Path;

use birkhoff::config::{assemble, load};
use birkhoff::spectrum::{hyperbolic_dimension, spectrum_grid};

fn main() -> birkhoff::Result<()> {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/manneville_pomeau.toml");
    let asm = assemble(&load(&cfg)?)?;

    println!("parabolic points: {:?}", asm.map.parabolic_points);
    println!("truncation levels: {}", asm.levels.len());

    let report = hyperbolic_dimension(&asm.levels)?;
    for (k, v) in report.per_level.iter().enumerate() {
        println!("  level {k}: {} cells, hyp_dim = {v:.12}", asm.levels[k].sys.len());
        if k > 0 {
            assert!(*v >= report.per_level[k - 1] - 1e-12, "family must be monotone");
        }
    }
    println!("family hyp_dim = {:.12}", report.family);

    let table = spectrum_grid(&asm.spectrum_query()?)?;
    println!("\nH = {:?}, H_p = {:?}", table.h, table.hp);
    for row in &table.rows {
        println!(
            "  a = {:.3}  delta0 = {:.6}  in_Hp = {}  {}",
            row.a,
            row.delta0,
            row.in_hp,
            row.note.as_deref().unwrap_or("")
        );
    }

    // a = f(0) = 0.3 is the parabolic hull; its row carries the family value
    let hull = table.rows.iter().find(|r| r.in_hp).expect("one row sits on the hull");
    assert!((hull.a - 0.3).abs() < 1e-12);
    assert_eq!(hull.delta0, report.family);
    assert!(hull.note.is_some());
    Ok(())
}
