//! Low-rank plus sparse split of a generic 2x2 Kronecker power from
//! interpolating polynomials on the pattern counts.

use kroncirc::rigidity;
use kroncirc::{FieldSpec, SparseMatrix};

fn main() -> kroncirc::Result<()> {
    let m = SparseMatrix::from_i64_rows(FieldSpec::Rational, &[&[2, 3], &[5, 7]])?;
    for (n, l, h) in [(4, 1, 3), (4, 0, 4), (5, 1, 3), (6, 1, 4)] {
        let p = rigidity::polymethod_decomp(&m, n, l, h)?;
        println!(
            "n={n} window [{l},{h}]: rank {} sparse {} bad pairs {} union bound {} ok {}",
            p.witness.rank_bound,
            p.witness.changes(),
            p.bad_pairs,
            p.union_bound,
            p.witness.verify()?
        );
    }
    Ok(())
}
