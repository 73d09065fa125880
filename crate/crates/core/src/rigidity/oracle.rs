//! Exhaustive rank-1 search over a finite pool of `u` entries.

use std::collections::HashMap;

use rayon::prelude::*;

use super::RigidityWitness;
use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};
use crate::matrix::SparseMatrix;

/// Largest number of candidate `u` vectors the oracle will enumerate.
pub const DEFAULT_WORK_CAP: u64 = 1 << 24;

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub min_changes: usize,
    pub witness: RigidityWitness,
    pub candidates: u64,
}

/// `{0, 1, −1}`.
pub fn hadamard_pool(field: FieldSpec) -> Vec<FieldElement> {
    vec![field.zero(), field.one(), field.from_i64(-1)]
}

/// `{0} ∪ {ω^k : |k| ≤ n}`, duplicates removed.
pub fn power_pool(omega: &FieldElement, n: usize) -> Result<Vec<FieldElement>> {
    let mut pool = vec![omega.field().zero()];
    for k in -(n as i64)..=(n as i64) {
        let p = omega.pow(k).ok_or_else(|| Error::invalid("omega not invertible"))?;
        if !pool.contains(&p) {
            pool.push(p);
        }
    }
    Ok(pool)
}

/// Minimum number of disagreements between `m` and any `u·vᵀ` with `u`
/// drawn from `pool`; each column of `v` is chosen to maximize agreement.
/// Ties keep the first `u` in lexicographic pool order.
pub fn rank1_oracle(m: &SparseMatrix, pool: &[FieldElement]) -> Result<OracleResult> {
    rank1_oracle_capped(m, pool, DEFAULT_WORK_CAP)
}

pub fn rank1_oracle_capped(m: &SparseMatrix, pool: &[FieldElement], cap: u64) -> Result<OracleResult> {
    let (rows, cols) = (m.rows(), m.cols());
    if rows > 16 || cols > 16 {
        return Err(Error::cap("oracle supports dimensions up to 16"));
    }
    let f = m.field();
    if pool.is_empty() || pool.iter().any(|p| p.field() != f) {
        return Err(Error::invalid("entry pool must be nonempty and in the matrix field"));
    }
    let k = pool.len() as u64;
    let total = k.checked_pow(rows as u32).filter(|t| *t <= cap).ok_or_else(|| {
        Error::cap(format!("{k}^{rows} candidate vectors exceed the cap {cap}"))
    })?;

    // Intern every value m[r,c] / pool[p] so the inner loop compares integers.
    let dense = m.to_dense();
    let mut ids: HashMap<FieldElement, u32> = HashMap::new();
    let mut values: Vec<FieldElement> = Vec::new();
    let mut intern = |v: FieldElement| -> u32 {
        *ids.entry(v.clone()).or_insert_with(|| {
            values.push(v);
            (values.len() - 1) as u32
        })
    };
    // ratio[(r * cols + c) * k + p]: id of m[r,c]/pool[p], or NONE if m[r,c] = 0 or pool[p] = 0
    const NONE: u32 = u32::MAX;
    let mut ratio = vec![NONE; rows * cols * k as usize];
    for r in 0..rows {
        for c in 0..cols {
            for (p, pv) in pool.iter().enumerate() {
                if !dense[r][c].is_zero() && !pv.is_zero() {
                    ratio[(r * cols + c) * k as usize + p] = intern(dense[r][c].div(pv).unwrap());
                }
            }
        }
    }
    let zero_mask: Vec<Vec<bool>> = dense.iter().map(|row| row.iter().map(|v| v.is_zero()).collect()).collect();

    let eval = |idx: u64| -> (usize, Vec<u32>) {
        let mut digits = vec![0usize; rows];
        let mut t = idx;
        for r in (0..rows).rev() {
            digits[r] = (t % k) as usize;
            t /= k;
        }
        let mut agree = 0usize;
        let mut choice = Vec::with_capacity(cols);
        let mut counts: Vec<(u32, usize)> = Vec::with_capacity(rows);
        for c in 0..cols {
            let mut zero_agree = 0;
            let mut base = 0;
            counts.clear();
            for r in 0..rows {
                let pz = pool[digits[r]].is_zero();
                if zero_mask[r][c] {
                    zero_agree += 1;
                    if pz {
                        base += 1;
                    }
                } else if !pz {
                    let id = ratio[(r * cols + c) * k as usize + digits[r]];
                    match counts.iter_mut().find(|e| e.0 == id) {
                        Some(e) => e.1 += 1,
                        None => counts.push((id, 1)),
                    }
                }
            }
            let mut best = (zero_agree, NONE);
            for (id, n) in &counts {
                if base + n > best.0 {
                    best = (base + n, *id);
                }
            }
            agree += best.0;
            choice.push(best.1);
        }
        (rows * cols - agree, choice)
    };

    let (best_idx, best_changes) = (0..total)
        .into_par_iter()
        .map(|idx| (eval(idx).0, idx))
        .min()
        .map(|(c, i)| (i, c))
        .expect("nonempty search");
    let (_, choice) = eval(best_idx);
    let mut t = best_idx;
    let mut digits = vec![0usize; rows];
    for r in (0..rows).rev() {
        digits[r] = (t % k) as usize;
        t /= k;
    }
    let u = SparseMatrix::from_dense(f, &digits.iter().map(|d| vec![pool[*d].clone()]).collect::<Vec<_>>())?;
    let vrow: Vec<FieldElement> = choice.iter().map(|id| if *id == NONE { f.zero() } else { values[*id as usize].clone() }).collect();
    let v = SparseMatrix::from_dense(f, &[vrow])?;
    let s = m.sub(&u.matmul(&v)?)?;
    debug_assert_eq!(s.nnz(), best_changes);
    Ok(OracleResult {
        min_changes: best_changes,
        witness: RigidityWitness { target: m.clone(), u, v, s, rank_bound: 1 },
        candidates: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rigidity::{rank1_construct_kron2, rank1_construct_wh};

    const Q: FieldSpec = FieldSpec::Rational;

    fn h(n: usize) -> SparseMatrix {
        SparseMatrix::from_i64_rows(Q, &[&[1, 1], &[1, -1]]).unwrap().kron_power(n).unwrap()
    }

    #[test]
    fn small_targets() {
        assert_eq!(rank1_oracle(&h(1), &hadamard_pool(Q)).unwrap().min_changes, 1);
        let r = rank1_oracle(&h(2), &hadamard_pool(Q)).unwrap();
        assert_eq!(r.min_changes, 4);
        assert!(r.witness.verify().unwrap());
        let r1 = SparseMatrix::from_i64_rows(Q, &[&[1, 1], &[1, 0]]).unwrap();
        let pool = vec![Q.zero(), Q.one()];
        assert_eq!(rank1_oracle(&r1, &pool).unwrap().min_changes, 1);
    }

    #[test]
    fn oracle_never_worse_than_construction() {
        for n in 1..=3 {
            let w = rank1_construct_wh(n, Q).unwrap();
            let o = rank1_oracle(&w.target, &hadamard_pool(Q)).unwrap();
            assert!(o.min_changes <= w.changes());
            assert!(o.min_changes >= (1 << (2 * n)) / 4);
        }
        for n in 1..=2 {
            let omega = Q.from_i64(2);
            let w = rank1_construct_kron2(&omega, n).unwrap();
            let o = rank1_oracle(&w.target, &power_pool(&omega, n).unwrap()).unwrap();
            assert!(o.min_changes <= w.changes());
            assert!(o.witness.verify().unwrap());
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(rank1_oracle_capped(&h(2), &hadamard_pool(Q), 10), Err(Error::CapExceeded(_))));
        assert!(rank1_oracle(&h(5), &hadamard_pool(Q)).is_err());
    }
}
