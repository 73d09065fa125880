//! Closed-form exponents for the constructions in the crate.

use kroncirc::exponent::{self, ExponentQuery};

fn main() -> kroncirc::Result<()> {
    for k in [2, 4, 6, 8, 10] {
        println!("k={k:2}  generic {:.4}  WH {:.4}", exponent::kron2_exponent(k), exponent::wh_exponent(k));
    }
    println!("square-rectangle recurrence {:.4}", exponent::js_exponent());
    println!("R_3 partition {:.4}", exponent::partition_exponent(13.6703f64.ln(), 3));
    for n in 4..=8 {
        let c = exponent::prior_c(n, 1.0, exponent::prior_h_rigidity(n).unwrap());
        println!("prior n={n}: c {c:.4}, exponent {:.4}", 1.0 + c / 2.0);
    }
    for q in [2.0, 3.0, 4.0] {
        let r = exponent::exponent_calc(&ExponentQuery { family: "general-q".into(), q: Some(q), s: Some(0.4), ..Default::default() })?;
        println!("general q={q}: b {:.10} h {:.3e}", r.value, r.extra["h"]);
    }
    Ok(())
}
