//! Depth-2 circuits for the disjointness matrix R_n from the two-term row
//! partition of R_1, with the per-term plan and the exact expected sizes.

use kroncirc::builder::{self, Caps};
use kroncirc::{presets, verify, FieldSpec};

fn main() -> kroncirc::Result<()> {
    let d = presets::r1_row_partition(FieldSpec::Rational);
    let s = d.stats()?;
    println!("alpha1 {:.4}  alpha2 {:.4}  beta {:.4}  one-sided {}", s.alpha1, s.alpha2, s.beta, s.one_sided);

    for n in 1..=10 {
        let b = builder::build_depth2(&d, n, Caps::default())?;
        let (ea, eb) = builder::process_expectation(&d, n)?;
        let v = verify::verify_exact(&b.circuit, &d.base, n)?;
        println!(
            "n={n:2} terms {:4} per layer {:?} expected ({ea}, {eb}) bound {:.0} exact {}",
            b.terms.len(),
            b.circuit.per_layer(),
            b.size_bound(),
            v.pass
        );
    }

    let b = builder::build_depth2(&d, 3, Caps::default())?;
    for t in &b.terms {
        let label: Vec<String> = t.label.iter().map(|s| format!("{:?}/{:?}/{}", s.kind, s.side, s.j)).collect();
        println!("  {} -> ({}, {})", label.join(" "), t.nnz_a, t.nnz_b);
    }
    Ok(())
}
