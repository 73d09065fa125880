//! Searches for the best 8-rectangle partition of `R_3` and prints its statistics.

use kroncirc::decomp::from_partition;
use kroncirc::partition::{partition_search_with, Objective, DEFAULT_MEMO_CAP};
use kroncirc::presets;
use kroncirc::FieldSpec;

fn main() -> kroncirc::Result<()> {
    let base = presets::r(3, FieldSpec::Rational);
    let t = std::time::Instant::now();
    let (p, st) = partition_search_with(&base, 8, Objective::Alpha1, DEFAULT_MEMO_CAP)?;
    println!("objective {:.4} in {:?} ({} nodes, {} memo states)", p.objective(), t.elapsed(), st.nodes, st.memo_states);
    for r in &p.rects {
        println!("  rows {:?} x cols {:?}", r.rows, r.cols);
    }
    let s = from_partition(&p)?.stats()?;
    println!("alpha1 {:.4}  beta {:.4}  alpha2-alpha1 {:.4}  imbalanced {}", s.alpha1, s.beta, s.alpha2 - s.alpha1, s.imbalanced);
    println!("exponent {:.4}", s.alpha1 / (3.0 * 2f64.ln()));
    Ok(())
}
