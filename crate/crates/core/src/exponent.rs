//! Closed-form circuit exponents: `size = O(N^c)` for the constructions in this crate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rigidity::{rank1_change_bound, PairMode};

/// `ln(q·r + √(q·R)) / ln q`: depth-2 exponent from a rank-`r` split of a
/// `q×q` matrix with `R` changes.
pub fn rigidity_exponent(q: f64, r: f64, changes: f64) -> f64 {
    (q * r + (q * changes).sqrt()).ln() / q.ln()
}

/// `c(k)` for a generic 2×2 matrix from the rank-1 construction on `M^{⊗k}`.
pub fn kron2_exponent(k: usize) -> f64 {
    let q = 2f64.powi(k as i32);
    rigidity_exponent(q, 1.0, rank1_change_bound(k, PairMode::Generic) as f64)
}

/// `c(k)` for Walsh–Hadamard matrices.
pub fn wh_exponent(k: usize) -> f64 {
    let q = 2f64.powi(k as i32);
    rigidity_exponent(q, 1.0, rank1_change_bound(k, PairMode::Wh) as f64)
}

/// `c = log_N((r+1)(r + R/N))`; the circuit exponent is `1 + c/2`.
pub fn prior_c(n: usize, r: f64, changes: f64) -> f64 {
    let big_n = 2f64.powi(n as i32);
    ((r + 1.0) * (r + changes / big_n)).ln() / big_n.ln()
}

/// Best known rank-1 value for `H_4` and the lower bound `432·4^{n−5}` for `n ≥ 5`.
pub fn prior_h_rigidity(n: usize) -> Option<f64> {
    match n {
        4 => Some(96.0),
        n if n >= 5 => Some(432.0 * 4f64.powi(n as i32 - 5)),
        _ => None,
    }
}

/// `(n, c)` minimizing `prior_c` over `n ∈ [4, max_n]`.
pub fn prior_minimum(max_n: usize) -> Result<(usize, f64)> {
    (4..=max_n)
        .map(|n| (n, prior_c(n, 1.0, prior_h_rigidity(n).unwrap())))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::invalid("max_n must be at least 4"))
}

/// `h(s,q) = (1/(4q² log₂ q))·(s/128)² / log₂²(2/s)`.
pub fn general_q_h(s: f64, q: f64) -> f64 {
    1.0 / (4.0 * q * q * q.log2()) * (s / 128.0).powi(2) / (2.0 / s).log2().powi(2)
}

/// `b_q = max{1+s, 1.5 − h(s,q)/2}`.
pub fn general_q_b(s: f64, q: f64) -> f64 {
    (1.0 + s).max(1.5 - general_q_h(s, q) / 2.0)
}

/// `log₂(1+√2)`.
pub fn js_exponent() -> f64 {
    (1.0 + 2f64.sqrt()).log2()
}

/// Exponent of a partition-based decomposition of a `2^k × 2^k` matrix.
pub fn partition_exponent(alpha1: f64, k: usize) -> f64 {
    alpha1 / (k as f64 * 2f64.ln())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExponentQuery {
    pub family: String,
    pub k: Option<usize>,
    pub q: Option<f64>,
    pub s: Option<f64>,
    pub r: Option<f64>,
    pub changes: Option<f64>,
    pub alpha1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub family: String,
    pub value: f64,
    pub extra: BTreeMap<String, f64>,
}

/// Families: `kron2`, `wh`, `prior`, `prior-min`, `general-q`, `js`, `partition`.
pub fn exponent_calc(query: &ExponentQuery) -> Result<ExponentReport> {
    let need_k = || query.k.filter(|k| *k >= 1).ok_or_else(|| Error::invalid("this family needs --k >= 1"));
    let mut extra = BTreeMap::new();
    let value = match query.family.as_str() {
        "kron2" => {
            let k = need_k()?;
            extra.insert("changes".into(), rank1_change_bound(k, PairMode::Generic) as f64);
            kron2_exponent(k)
        }
        "wh" => {
            let k = need_k()?;
            extra.insert("changes".into(), rank1_change_bound(k, PairMode::Wh) as f64);
            wh_exponent(k)
        }
        "prior" => {
            let k = need_k()?;
            let changes = match query.changes {
                Some(c) => c,
                None => prior_h_rigidity(k).ok_or_else(|| Error::invalid("give --changes for k < 4"))?,
            };
            let c = prior_c(k, query.r.unwrap_or(1.0), changes);
            extra.insert("c".into(), c);
            1.0 + c / 2.0
        }
        "prior-min" => {
            let (n, c) = prior_minimum(query.k.unwrap_or(8))?;
            extra.insert("argmin_n".into(), n as f64);
            extra.insert("exponent".into(), 1.0 + c / 2.0);
            c
        }
        "general-q" => {
            let q = query.q.filter(|q| *q >= 2.0).ok_or_else(|| Error::invalid("general-q needs --q >= 2"))?;
            let s = query.s.unwrap_or(0.4);
            if !(0.0 < s && s < 2.0) {
                return Err(Error::invalid("s must lie in (0, 2)"));
            }
            let h = general_q_h(s, q);
            extra.insert("h".into(), h);
            general_q_b(s, q)
        }
        "js" => js_exponent(),
        "partition" => {
            let a = query.alpha1.ok_or_else(|| Error::invalid("partition needs --alpha1"))?;
            partition_exponent(a, need_k()?)
        }
        other => return Err(Error::invalid(format!("unknown exponent family '{other}'"))),
    };
    Ok(ExponentReport { family: query.family.clone(), value, extra })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        assert!((kron2_exponent(6) - 1.4459).abs() < 1e-3);
        assert!((wh_exponent(6) - 1.4422).abs() < 1e-3);
        assert!((js_exponent() - 1.272).abs() < 1e-3);
        let c = prior_c(4, 1.0, 96.0);
        assert!((c - 14f64.ln() / 16f64.ln()).abs() < 1e-12);
        assert!((1.0 + c / 2.0 - 1.476).abs() < 1e-3);
    }

    #[test]
    fn prior_minimum_is_h4() {
        let (n, c) = prior_minimum(8).unwrap();
        assert_eq!(n, 4);
        assert!(c < 0.952);
        for n in 5..=8 {
            assert!(prior_c(n, 1.0, prior_h_rigidity(n).unwrap()) >= 0.952);
        }
    }

    #[test]
    fn general_q() {
        let h = general_q_h(0.4, 2.0);
        assert!(h > 0.0 && h < 1e-5);
        assert!((general_q_b(0.4, 2.0) - (1.5 - h / 2.0)).abs() < 1e-15);
        assert!(general_q_h(0.4, 3.0) < h);
    }

    #[test]
    fn rigidity_beats_prior() {
        for k in 4..=8 {
            let q = 2f64.powi(k as i32);
            let r = rank1_change_bound(k, PairMode::Wh) as f64;
            let ours = rigidity_exponent(q, 1.0, r);
            let prior = ((q + q) * (q + r)).sqrt().ln() / q.ln();
            assert!(ours <= prior + 1e-12);
        }
    }

    #[test]
    fn calc_dispatch() {
        let q = |f: &str, k| ExponentQuery { family: f.into(), k, ..Default::default() };
        assert!((exponent_calc(&q("wh", Some(6))).unwrap().value - 1.4422).abs() < 1e-4);
        assert!(exponent_calc(&q("nope", None)).is_err());
        assert!(exponent_calc(&q("kron2", None)).is_err());
        let p = exponent_calc(&q("prior", Some(4))).unwrap();
        assert!((p.value - 1.4759).abs() < 1e-4);
    }
}
