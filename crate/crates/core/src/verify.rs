//! Exact and randomized checks that a circuit computes `M^{⊗n}`, plus size reports.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::decomp::DecompStats;
use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};
use crate::matrix::{kron_power_apply, SparseMatrix};

pub const EXACT_CAP: usize = 4096;
pub const PRIMES: [u64; 2] = [2_147_483_647, 2_305_843_009_213_693_951];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Random,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub row: usize,
    pub col: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub mode: Mode,
    pub target: String,
    pub pass: bool,
    pub trials: usize,
    pub seed: u64,
    pub prime: Option<u64>,
    pub per_layer: Vec<usize>,
    pub size: usize,
    pub exponent: f64,
    pub discrepancy: Option<Discrepancy>,
    pub failed_trial: Option<usize>,
    pub warning: Option<String>,
}

fn target_name(base: &SparseMatrix, n: usize) -> String {
    format!("({}x{} base)^{n}", base.rows(), base.cols())
}

fn check_shape(c: &Circuit, base: &SparseMatrix, n: usize) -> Result<usize> {
    if !base.is_square() {
        return Err(Error::dims("base must be square"));
    }
    let dim = base
        .rows()
        .checked_pow(n as u32)
        .ok_or_else(|| Error::cap("target dimension overflows"))?;
    if c.rows() != dim || c.cols() != dim {
        return Err(Error::dims(format!("circuit is {}x{} but the target is {dim}x{dim}", c.rows(), c.cols())));
    }
    Ok(dim)
}

fn raw_exponent(size: usize, q: usize, n: usize) -> f64 {
    (size as f64).ln() / (n as f64 * (q as f64).ln())
}

/// Row `x` of `base^{⊗n}`, digit `i` of `x` indexing the `i`-th factor.
fn target_row(base: &SparseMatrix, n: usize, x: usize) -> Vec<(usize, FieldElement)> {
    let q = base.rows();
    let mut acc = vec![(0usize, base.field().one())];
    let mut stride = 1;
    let mut rest = x;
    for _ in 0..n {
        let (cs, vs) = base.row(rest % q);
        rest /= q;
        let mut next = Vec::with_capacity(acc.len() * cs.len());
        for (c, v) in cs.iter().zip(vs) {
            for (y, w) in &acc {
                next.push((y + stride * c, w * v));
            }
        }
        acc = next;
        stride *= q;
    }
    acc.sort_by_key(|e| e.0);
    acc
}

/// Row `x` of the factor-chain product.
fn chain_row(c: &Circuit, x: usize) -> Vec<(usize, FieldElement)> {
    let mut cur: Vec<(usize, FieldElement)> = vec![(x, c.field().one())];
    for f in &c.factors {
        let mut acc: HashMap<usize, FieldElement> = HashMap::new();
        for (i, a) in &cur {
            let (cs, vs) = f.row(*i);
            for (j, v) in cs.iter().zip(vs) {
                let t = a * v;
                match acc.get_mut(j) {
                    Some(e) => *e = &*e + &t,
                    None => {
                        acc.insert(*j, t);
                    }
                }
            }
        }
        cur = acc.into_iter().filter(|(_, v)| !v.is_zero()).collect();
    }
    cur.sort_by_key(|e| e.0);
    cur
}

fn first_difference(a: &[(usize, FieldElement)], b: &[(usize, FieldElement)], zero: &FieldElement) -> Option<(usize, String, String)> {
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ca = a.get(i).map_or(usize::MAX, |e| e.0);
        let cb = b.get(j).map_or(usize::MAX, |e| e.0);
        if ca == cb {
            if a[i].1 != b[j].1 {
                return Some((ca, a[i].1.to_string(), b[j].1.to_string()));
            }
            i += 1;
            j += 1;
        } else if ca < cb {
            return Some((ca, a[i].1.to_string(), zero.to_string()));
        } else {
            return Some((cb, zero.to_string(), b[j].1.to_string()));
        }
    }
    None
}

/// Entrywise comparison of the product with `base^{⊗n}`, one row at a time.
pub fn verify_exact(c: &Circuit, base: &SparseMatrix, n: usize) -> Result<VerifyReport> {
    crate::matrix::check_field(c.field(), base.field())?;
    let dim = check_shape(c, base, n)?;
    if dim > EXACT_CAP {
        return Err(Error::cap(format!("exact verification needs q^n <= {EXACT_CAP} (got {dim}); use random mode")));
    }
    let zero = base.field().zero();
    let bad = (0..dim)
        .into_par_iter()
        .filter_map(|x| {
            first_difference(&target_row(base, n, x), &chain_row(c, x), &zero)
                .map(|(col, expected, found)| Discrepancy { row: x, col, expected, found })
        })
        .min_by_key(|d| (d.row, d.col));
    Ok(VerifyReport {
        mode: Mode::Exact,
        target: target_name(base, n),
        pass: bad.is_none(),
        trials: 0,
        seed: 0,
        prime: None,
        per_layer: c.per_layer(),
        size: c.size(),
        exponent: raw_exponent(c.size(), base.rows(), n),
        discrepancy: bad,
        failed_trial: None,
        warning: None,
    })
}

/// Per-trial generator: trial `t` uses stream `t` of the master seed.
fn trial_rng(seed: u64, t: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(t as u64);
    rng
}

fn reduce_all(c: &Circuit, base: &SparseMatrix) -> Result<(Circuit, SparseMatrix, FieldSpec, Option<u64>)> {
    match base.field() {
        FieldSpec::Prime { modulus } => Ok((c.clone(), base.clone(), base.field(), Some(modulus))),
        FieldSpec::Rational => {
            for p in PRIMES {
                if let (Ok(cm), Ok(bm)) = (c.reduce_mod(p), base.reduce_mod(p)) {
                    return Ok((cm, bm, FieldSpec::Prime { modulus: p }, Some(p)));
                }
            }
            Err(Error::invalid("every verification prime divides a denominator"))
        }
    }
}

/// Compares `c·x` with `base^{⊗n}·x` for `trials` random vectors over a large prime field.
pub fn verify_random(c: &Circuit, base: &SparseMatrix, n: usize, trials: usize, seed: u64) -> Result<VerifyReport> {
    crate::matrix::check_field(c.field(), base.field())?;
    let dim = check_shape(c, base, n)?;
    let (cm, bm, field, prime) = reduce_all(c, base)?;
    let modulus = prime.expect("prime field");
    let failed = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Option<usize>> {
            let mut rng = trial_rng(seed, t);
            let x: Vec<FieldElement> = (0..dim).map(|_| field.from_bigint(&num_bigint::BigInt::from(rng.gen_range(0..modulus)))).collect();
            let got = cm.apply(&x)?;
            let want = kron_power_apply(&bm, n, &x)?;
            Ok((got != want).then_some(t))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .min();
    Ok(VerifyReport {
        mode: Mode::Random,
        target: target_name(base, n),
        pass: failed.is_none(),
        trials,
        seed,
        prime,
        per_layer: c.per_layer(),
        size: c.size(),
        exponent: raw_exponent(c.size(), base.rows(), n),
        discrepancy: None,
        failed_trial: failed,
        warning: (trials == 0).then(|| "zero trials: the pass is vacuous".to_string()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeReport {
    pub per_layer: Vec<usize>,
    pub total: usize,
    pub n: usize,
    pub q: usize,
    /// `ln(size) / (n ln q)`.
    pub exponent_raw: f64,
    /// `log_N(size / 2)`.
    pub exponent_half: f64,
    /// Raw exponent minus `ln(2e^{2G}(n+1)) / (n ln q)`.
    pub exponent_slack_adjusted: Option<f64>,
    pub baseline_depth: usize,
    pub baseline_per_layer: Vec<u128>,
    pub baseline_total: u128,
}

/// Layer sizes of the mixed-product circuit with `n` digits split as evenly as possible over `depth` layers.
pub fn mixed_product_sizes(nnz_base: u128, q: u128, n: usize, depth: usize) -> Vec<u128> {
    let depth = depth.clamp(1, n.max(1));
    (0..depth)
        .map(|i| {
            let s = n / depth + usize::from(i < n % depth);
            nnz_base.pow(s as u32) * q.pow((n - s) as u32)
        })
        .collect()
}

pub fn size_report(c: &Circuit, base: &SparseMatrix, n: usize, stats: Option<&DecompStats>) -> SizeReport {
    let per_layer = c.per_layer();
    let total: usize = per_layer.iter().sum();
    let q = base.rows();
    let ln_n = n as f64 * (q as f64).ln();
    let raw = (total as f64).ln() / ln_n;
    let slack = stats.map(|s| raw - (2.0 * (2.0 * s.g).exp() * (n + 1) as f64).ln() / ln_n);
    let baseline = mixed_product_sizes(base.nnz() as u128, q as u128, n, c.depth());
    SizeReport {
        per_layer,
        total,
        n,
        q,
        exponent_raw: raw,
        exponent_half: (total as f64 / 2.0).ln() / ln_n,
        exponent_slack_adjusted: slack,
        baseline_depth: c.depth(),
        baseline_total: baseline.iter().sum(),
        baseline_per_layer: baseline,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fault {
    pub layer: usize,
    pub row: usize,
    pub col: usize,
}

/// Perturbs one stored entry whose row feeds an earlier layer and whose
/// column is read by a later one.
pub fn inject_fault(c: &Circuit, seed: u64) -> Result<(Circuit, Fault)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let d = c.depth();
    let live_cols: Vec<Vec<bool>> = c
        .factors
        .iter()
        .map(|f| {
            let mut v = vec![false; f.cols()];
            for (_, j, _) in f.entries() {
                v[j] = true;
            }
            v
        })
        .collect();
    let candidates: Vec<(usize, usize)> = (0..d)
        .flat_map(|l| (0..c.factors[l].nnz()).map(move |k| (l, k)))
        .filter(|&(l, k)| {
            let (i, j) = c.factors[l].stored_position(k);
            (l == 0 || live_cols[l - 1][i]) && (l + 1 == d || c.factors[l + 1].row_nnz(j) > 0)
        })
        .collect();
    if candidates.is_empty() {
        return Err(Error::invalid("circuit has no live entries"));
    }
    let (layer, k) = candidates[rng.gen_range(0..candidates.len())];
    let f = &c.factors[layer];
    let old = f.stored_value(k).clone();
    let mut new = old.clone();
    while new == old || new.is_zero() {
        new = &old + &f.field().from_i64(rng.gen_range(1..=5));
    }
    let (row, col) = f.stored_position(k);
    let mut out = c.clone();
    out.factors[layer].set_stored(k, new)?;
    Ok((out, Fault { layer, row, col }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{build_depth2, build_mixed_product, Caps};
    use crate::presets;

    const Q: FieldSpec = FieldSpec::Rational;

    #[test]
    fn exact_pass_and_fail() {
        let c = build_mixed_product(&presets::h1(Q), 2, 2).unwrap();
        let h1 = presets::h1(Q);
        assert!(verify_exact(&c, &h1, 2).unwrap().pass);
        let (bad, fault) = inject_fault(&c, 1).unwrap();
        let r = verify_exact(&bad, &h1, 2).unwrap();
        assert!(!r.pass);
        assert!(r.discrepancy.is_some());
        assert!(fault.layer < 2);
        assert!(verify_exact(&c, &h1, 3).is_err());
    }

    #[test]
    fn r1_depth2() {
        let d = presets::r1_row_partition(Q);
        let c = build_depth2(&d, 2, Caps::default()).unwrap().circuit;
        let r = verify_exact(&c, &presets::r1(Q), 2).unwrap();
        assert!(r.pass);
        assert_eq!(r.per_layer, vec![5, 7]);
    }

    #[test]
    fn random_mode() {
        let h1 = presets::h1(Q);
        let c = build_mixed_product(&h1, 6, 3).unwrap();
        let r = verify_random(&c, &h1, 6, 10, 7).unwrap();
        assert!(r.pass);
        assert_eq!(r.prime, Some(PRIMES[0]));
        let (bad, _) = inject_fault(&c, 3).unwrap();
        assert!(!verify_random(&bad, &h1, 6, 5, 7).unwrap().pass);
        let vac = verify_random(&bad, &h1, 6, 0, 7).unwrap();
        assert!(vac.pass && vac.warning.is_some());
    }

    #[test]
    fn random_reproducible() {
        let h1 = presets::h1(Q);
        let c = build_mixed_product(&h1, 4, 2).unwrap();
        assert_eq!(verify_random(&c, &h1, 4, 3, 11).unwrap(), verify_random(&c, &h1, 4, 3, 11).unwrap());
    }

    #[test]
    fn denominators_skip_prime() {
        let p = PRIMES[0] as i64;
        let m = SparseMatrix::from_dense(Q, &[vec![Q.from_rational(&crate::field::Rational::new(1, p).unwrap()).unwrap()]]).unwrap();
        let c = build_mixed_product(&m, 2, 1).unwrap();
        let r = verify_random(&c, &m, 2, 2, 0).unwrap();
        assert_eq!(r.prime, Some(PRIMES[1]));
        assert!(r.pass);
    }

    #[test]
    fn prime_field_circuit() {
        let f = FieldSpec::prime(7).unwrap();
        let h1 = presets::h1(f);
        let c = build_mixed_product(&h1, 3, 3).unwrap();
        assert!(verify_random(&c, &h1, 3, 4, 0).unwrap().pass);
        assert!(verify_exact(&c, &h1, 3).unwrap().pass);
    }

    #[test]
    fn sizes() {
        let h1 = presets::h1(Q);
        let c = build_mixed_product(&h1, 2, 2).unwrap();
        let s = size_report(&c, &h1, 2, None);
        assert_eq!(s.total, 16);
        assert!((s.exponent_half - 1.5).abs() < 1e-12);
        assert_eq!(s.baseline_total, 16);
        let c = build_mixed_product(&h1, 10, 10).unwrap();
        assert_eq!(size_report(&c, &h1, 10, None).total, 20480);
        assert_eq!(mixed_product_sizes(3, 2, 15, 2), vec![3u128.pow(8) * 2u128.pow(7), 3u128.pow(7) * 2u128.pow(8)]);
    }
}
