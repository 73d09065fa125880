//! Exact and randomized verification, and how they react to a corrupted entry.

use kroncirc::builder::{self, Caps};
use kroncirc::{presets, verify, FieldSpec};

fn main() -> kroncirc::Result<()> {
    let d = presets::r1_row_partition(FieldSpec::Rational);
    let n = 9;
    let c = builder::build_depth2(&d, n, Caps::default())?.circuit;
    println!("exact: {}", verify::verify_exact(&c, &d.base, n)?.pass);
    println!("random: {}", verify::verify_random(&c, &d.base, n, 10, 42)?.pass);

    let mut caught = 0;
    for seed in 0..50 {
        let (bad, fault) = verify::inject_fault(&c, seed)?;
        let r = verify::verify_random(&bad, &d.base, n, 3, seed)?;
        if !r.pass {
            caught += 1;
        }
        if seed < 3 {
            let e = verify::verify_exact(&bad, &d.base, n)?;
            println!("fault {fault:?}: random pass {}, exact mismatch {:?}", r.pass, e.discrepancy);
        }
    }
    println!("random verification caught {caught}/50 faults");
    Ok(())
}
