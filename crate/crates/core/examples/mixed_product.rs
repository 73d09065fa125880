//! Walsh-Hadamard transform as a depth-d mixed-product circuit, checked
//! against the digit-by-digit transform.

use kroncirc::builder;
use kroncirc::{kron_power_apply, presets, FieldSpec};

fn main() -> kroncirc::Result<()> {
    let f = FieldSpec::Rational;
    let h1 = presets::h1(f);
    let n = 10;
    for depth in [1, 2, 5, 10] {
        let c = builder::build_mixed_product(&h1, n, depth)?;
        println!("depth {depth:2}: per layer {:?}, size {}", c.per_layer(), c.size());
    }

    let c = builder::build_mixed_product(&h1, n, n)?;
    let x: Vec<_> = (0..1i64 << n).map(|i| f.from_i64(i % 7 - 3)).collect();
    let y = c.apply(&x)?;
    assert_eq!(y, kron_power_apply(&h1, n, &x)?);
    println!("H_{n} x matches the fast transform; y[0..4] = {:?}", y[..4].iter().map(|v| v.to_string()).collect::<Vec<_>>());
    Ok(())
}
