//! Depth-2 circuit for R_15 from the 8-part partition of R_3, compared with
//! the mixed-product circuit and checked by random evaluation.

use std::time::Instant;

use kroncirc::builder::{self, Caps};
use kroncirc::decomp;
use kroncirc::partition::{self, Objective};
use kroncirc::{presets, verify, FieldSpec};

fn main() -> kroncirc::Result<()> {
    let q = FieldSpec::Rational;
    let t = Instant::now();
    let part = partition::partition_search(&presets::r(3, q), 8, Objective::Alpha1)?;
    let d = decomp::from_partition(&part)?;
    println!("partition objective {:.4} in {:.1}s", part.objective(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let b = builder::build_depth2(&d, 5, Caps::default())?;
    println!("terms: {}", b.terms.len());
    println!("phases: {:?}", builder::phase_counts(&b.terms));
    println!("per layer {:?}, size {} in {:.1}s", b.circuit.per_layer(), b.circuit.size(), t.elapsed().as_secs_f64());

    let baseline: u128 = verify::mixed_product_sizes(3, 2, 15, 2).iter().sum();
    println!("mixed-product depth 2: {baseline}");

    let t = Instant::now();
    let v = verify::verify_random(&b.circuit, &d.base, 5, 20, 7)?;
    println!("random verification: {} ({:.1}s)", if v.pass { "pass" } else { "FAIL" }, t.elapsed().as_secs_f64());
    Ok(())
}
