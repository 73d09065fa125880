//! Deeper circuits by stacking depth-2 blocks, including padded targets.

use kroncirc::builder::{self, Caps};
use kroncirc::{decomp, presets, verify, FieldSpec};

fn main() -> kroncirc::Result<()> {
    let f = FieldSpec::Rational;
    let rows = presets::r1_row_partition(f);
    let onehot = decomp::gen_one_hot(&presets::h1(f))?;
    for (name, d, n) in [("R_1 rows", &rows, 12), ("one-hot H_1", &onehot, 12), ("R_1 rows", &rows, 11)] {
        for depth in [2, 4, 6] {
            let c = builder::boost_depth(d, n, depth, Caps::default())?;
            let mp: u128 = verify::mixed_product_sizes(d.base.nnz() as u128, 2, n, depth).iter().sum();
            let ok = verify::verify_random(&c, &d.base, n, 5, 1)?.pass;
            println!("{name} n={n} depth {depth}: size {:7} (mixed product {mp:7}) verified {ok}", c.size());
        }
    }
    Ok(())
}
