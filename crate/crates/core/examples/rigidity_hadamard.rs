//! Rank-1 plus sparse splits of H_k and of [[1,1],[1,2]]^k, the resulting
//! depth-2 circuits, and the closed-form change counts.

use kroncirc::builder::{self, Caps};
use kroncirc::rigidity::{self, PairMode};
use kroncirc::{decomp, exponent, verify, FieldSpec};

fn main() -> kroncirc::Result<()> {
    let f = FieldSpec::Rational;
    println!("{:>2} {:>8} {:>8} {:>8} {:>8}", "k", "H_k", "bound", "kron2", "bound");
    for k in 1..=8 {
        let wh = rigidity::rank1_construct_wh(k, f)?;
        let k2 = rigidity::rank1_construct_kron2(&f.from_i64(2), k)?;
        println!(
            "{k:>2} {:>8} {:>8} {:>8} {:>8}",
            wh.changes(),
            rigidity::rank1_change_bound(k, PairMode::Wh),
            k2.changes(),
            rigidity::rank1_change_bound(k, PairMode::Generic)
        );
    }
    println!("c(6): WH {:.4}, generic {:.4}", exponent::wh_exponent(6), exponent::kron2_exponent(6));

    let w = rigidity::rank1_construct_wh(6, f)?;
    assert!(w.verify()?);
    let d = decomp::from_rigidity(&w)?;
    for n in 1..=2 {
        let b = builder::build_depth2(&d, n, Caps::default())?;
        let r = verify::verify_exact(&b.circuit, &d.base, n)?;
        println!("H_{}: per layer {:?}, size {}, exact {}", 6 * n, r.per_layer, r.size, r.pass);
    }
    Ok(())
}
