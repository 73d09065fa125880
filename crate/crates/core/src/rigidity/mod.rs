//! Low-rank-plus-sparse splits `T = U×V + S` of Kronecker powers.

mod oracle;
mod poly;

pub use oracle::{hadamard_pool, power_pool, rank1_oracle, OracleResult};
pub use poly::{bad_pair_count, interpolation_poly, polymethod_decomp, union_bound_estimate, InterpolationPoly, PolyWitness};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};
use crate::matrix::{RowBuilder, SparseMatrix};
use crate::smx::InlineMatrix;

#[derive(Clone, Debug)]
pub struct RigidityWitness {
    pub target: SparseMatrix,
    pub u: SparseMatrix,
    pub v: SparseMatrix,
    pub s: SparseMatrix,
    pub rank_bound: usize,
}

impl RigidityWitness {
    pub fn changes(&self) -> usize {
        self.s.nnz()
    }

    /// Exact check of `target = u×v + s`.
    pub fn verify(&self) -> Result<bool> {
        if self.u.cols() != self.rank_bound {
            return Ok(false);
        }
        Ok(self.u.matmul(&self.v)?.add(&self.s)? == self.target)
    }

    pub fn to_file(&self, target_name: &str) -> WitnessFile {
        WitnessFile {
            target: target_name.to_string(),
            field: self.target.field(),
            rank_bound: self.rank_bound,
            changes: self.changes(),
            u: InlineMatrix::from_matrix(&self.u),
            v: InlineMatrix::from_matrix(&self.v),
            s: InlineMatrix::from_matrix(&self.s),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessFile {
    pub target: String,
    pub field: FieldSpec,
    pub rank_bound: usize,
    pub changes: usize,
    #[serde(rename = "U")]
    pub u: InlineMatrix,
    #[serde(rename = "V")]
    pub v: InlineMatrix,
    #[serde(rename = "S")]
    pub s: InlineMatrix,
}

/// Splits an outer-nonzero `m` as `dl × m1 × dr` with `m1` outer-1.
pub fn outer1_normalize(m: &SparseMatrix) -> Result<(SparseMatrix, SparseMatrix, SparseMatrix)> {
    if !m.is_square() {
        return Err(Error::dims("outer-1 normalization needs a square matrix"));
    }
    let q = m.rows();
    let f = m.field();
    let m00 = m.get(0, 0);
    let m00_inv = m00.inv().ok_or_else(|| Error::invalid("m[0,0] is zero"))?;
    let mut dl = Vec::with_capacity(q);
    let mut dr = Vec::with_capacity(q);
    for i in 0..q {
        let a = m.get(i, 0);
        let b = m.get(0, i);
        if a.is_zero() || b.is_zero() {
            return Err(Error::invalid("matrix is not outer-nonzero"));
        }
        dl.push(a);
        dr.push(&b * &m00_inv);
    }
    let mut b = RowBuilder::new(q, q, f);
    for i in 0..q {
        let li = dl[i].inv().expect("nonzero");
        for j in 0..q {
            let rj = dr[j].inv().expect("nonzero");
            b.push(j, &(&m.get(i, j) * &li) * &rj);
        }
        b.end_row();
    }
    Ok((SparseMatrix::diag(&dl, f)?, b.finish(), SparseMatrix::diag(&dr, f)?))
}

/// `[[1,1],[1,ω]]`.
pub fn omega_base(omega: &FieldElement) -> SparseMatrix {
    let f = omega.field();
    SparseMatrix::from_dense(f, &[vec![f.one(), f.one()], vec![f.one(), omega.clone()]]).expect("2x2")
}

/// The exponents `(b1[x], b2[y])` as functions of the Hamming weights, by `n mod 4`.
pub fn b_vectors(n: usize) -> (Vec<i64>, Vec<i64>) {
    let len = 1usize << n;
    let ni = n as i64;
    // (b1 uses ceil, constant subtracted from ceil(|y|/2))
    let (b1_ceil, shift) = match n % 4 {
        0 => (false, ni / 4),
        2 => (true, (ni + 2) / 4),
        1 => (false, (ni - 1) / 4),
        _ => (true, (ni + 1) / 4),
    };
    let mut b1 = Vec::with_capacity(len);
    let mut b2 = Vec::with_capacity(len);
    for x in 0..len {
        let w = x.count_ones() as i64;
        b1.push(if b1_ceil { (w + 1) / 2 } else { w / 2 });
        b2.push((w + 1) / 2 - shift);
    }
    (b1, b2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairMode {
    Generic,
    Wh,
}

/// Closed-form number of agreeing positions of the rank-1 construction.
pub fn good_pair_count(n: usize, mode: PairMode) -> u128 {
    assert!(n >= 1);
    let n128 = n as u32;
    match (mode, n % 2) {
        (PairMode::Generic, 0) => (1u128 << n) * binomial(n as u64 + 1, n as u64 / 2),
        (PairMode::Generic, _) => (1u128 << (n - 1)) * binomial(n as u64 + 2, (n as u64).div_ceil(2)),
        (PairMode::Wh, 0) => (1u128 << (2 * n128 - 1)) + (1u128 << (3 * n128 / 2 - 1)),
        (PairMode::Wh, _) => (1u128 << (2 * n128 - 1)) + (1u128 << (3 * (n128 - 1) / 2)),
    }
}

/// Closed-form change count `4^n − good_pair_count`.
pub fn rank1_change_bound(n: usize, mode: PairMode) -> u128 {
    (1u128 << (2 * n)) - good_pair_count(n, mode)
}

/// Direct count of pairs satisfying the agreement predicate.
pub fn brute_force_good_pairs(n: usize, mode: PairMode) -> u64 {
    let (b1, b2) = b_vectors(n);
    let len = 1usize << n;
    (0..len)
        .into_par_iter()
        .map(|x| {
            (0..len)
                .filter(|&y| {
                    let d = b1[x] + b2[y] - (x & y).count_ones() as i64;
                    match mode {
                        PairMode::Generic => d == 0,
                        PairMode::Wh => d.rem_euclid(2) == 0,
                    }
                })
                .count() as u64
        })
        .sum()
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// `Σ_{t ≡ r (mod s), 0 ≤ t ≤ n} C(n, t)` by direct summation.
pub fn multisection(n: u64, s: u64, r: u64) -> BigInt {
    assert!(s >= 1 && r < s);
    let mut acc = BigInt::zero();
    let mut c = BigInt::one();
    for t in 0..=n {
        if t % s == r {
            acc += &c;
        }
        c = c * BigInt::from(n - t) / BigInt::from(t + 1);
    }
    acc
}

/// The `s = 4` roots-of-unity filter evaluated in Gaussian integers:
/// `(2^n + [n=0](−1)^r + 2·Re(i^{−r}(1+i)^n)) / 4`.
pub fn multisection4_closed(n: u64, r: u64) -> BigInt {
    assert!(r < 4);
    let (mut re, mut im) = (BigInt::one(), BigInt::zero());
    for _ in 0..n {
        let nre = &re - &im;
        let nim = &re + &im;
        re = nre;
        im = nim;
    }
    // multiply by i^{-r}: i^{-1} = -i
    for _ in 0..r {
        let nre = im.clone();
        let nim = -re;
        re = nre;
        im = nim;
    }
    let mut total = BigInt::one() << n as usize;
    if n == 0 {
        total += if r.is_multiple_of(2) { BigInt::one() } else { -BigInt::one() };
    }
    total += re * 2;
    debug_assert!(!total.is_negative());
    total / 4
}

fn check_omega(omega: &FieldElement) -> Result<()> {
    if omega.is_zero() {
        return Err(Error::invalid("omega = 0 is not supported by the rank-1 construction"));
    }
    if omega.is_one() {
        return Err(Error::invalid("omega = 1 gives a rank-1 matrix already"));
    }
    Ok(())
}

fn rank1_from_exponents(omega: &FieldElement, n: usize) -> Result<RigidityWitness> {
    let f = omega.field();
    let len = 1usize << n;
    let (b1, b2) = b_vectors(n);
    let lo = b1.iter().chain(&b2).copied().min().unwrap_or(0).min(0);
    let hi = b1.iter().chain(&b2).copied().max().unwrap_or(0).max(n as i64);
    let pows: Vec<FieldElement> = (lo..=hi).map(|k| omega.pow(k).expect("invertible omega")).collect();
    let pw = |k: i64| &pows[(k - lo) as usize];
    let target = omega_base(omega).kron_power(n)?;
    let u = SparseMatrix::from_dense(f, &b1.iter().map(|b| vec![pw(*b).clone()]).collect::<Vec<_>>())?;
    let v = SparseMatrix::from_dense(f, &[b2.iter().map(|b| pw(*b).clone()).collect::<Vec<_>>()])?;
    let rows: Vec<Vec<(usize, FieldElement)>> = (0..len)
        .into_par_iter()
        .map(|x| {
            let mut out = Vec::new();
            for y in 0..len {
                let t = pw((x & y).count_ones() as i64);
                let l = pw(b1[x] + b2[y]);
                if t != l {
                    out.push((y, t - l));
                }
            }
            out
        })
        .collect();
    let mut b = RowBuilder::new(len, len, f);
    for row in rows {
        for (c, v) in row {
            b.push(c, v);
        }
        b.end_row();
    }
    Ok(RigidityWitness { target, u, v, s: b.finish(), rank_bound: 1 })
}

/// Rank-1 split of `[[1,1],[1,ω]]^{⊗n}`.
pub fn rank1_construct_kron2(omega: &FieldElement, n: usize) -> Result<RigidityWitness> {
    check_omega(omega)?;
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    rank1_from_exponents(omega, n)
}

/// Rank-1 split of the Walsh–Hadamard matrix `H_n` over `field`.
pub fn rank1_construct_wh(n: usize, field: FieldSpec) -> Result<RigidityWitness> {
    if field.characteristic() == 2 {
        return Err(Error::invalid("Walsh-Hadamard construction needs characteristic other than 2"));
    }
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    rank1_from_exponents(&field.from_i64(-1), n)
}

/// Rank-1 split of `m^{⊗n}` for any outer-nonzero 2×2 `m`, through its outer-1 form.
pub fn rank1_construct_2x2(m: &SparseMatrix, n: usize) -> Result<RigidityWitness> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(Error::dims("expected a 2x2 matrix"));
    }
    let (dl, m1, dr) = outer1_normalize(m)?;
    let w = rank1_construct_kron2(&m1.get(1, 1), n)?;
    let dln = dl.kron_power(n)?;
    let drn = dr.kron_power(n)?;
    Ok(RigidityWitness {
        target: m.kron_power(n)?,
        u: dln.matmul(&w.u)?,
        v: w.v.matmul(&drn)?,
        s: dln.matmul(&w.s)?.matmul(&drn)?,
        rank_bound: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const Q: FieldSpec = FieldSpec::Rational;

    #[test]
    fn outer1_examples() {
        let m = SparseMatrix::from_i64_rows(Q, &[&[1, 1], &[1, 5]]).unwrap();
        let (dl, m1, dr) = outer1_normalize(&m).unwrap();
        assert_eq!(dl, SparseMatrix::identity(2, Q));
        assert_eq!(dr, SparseMatrix::identity(2, Q));
        assert_eq!(m1, m);

        let m = SparseMatrix::from_i64_rows(Q, &[&[2, 2], &[2, 6]]).unwrap();
        let (dl, m1, dr) = outer1_normalize(&m).unwrap();
        assert_eq!(dl, SparseMatrix::from_i64_rows(Q, &[&[2, 0], &[0, 2]]).unwrap());
        assert_eq!(m1, SparseMatrix::from_i64_rows(Q, &[&[1, 1], &[1, 3]]).unwrap());
        assert_eq!(dr, SparseMatrix::identity(2, Q));

        let m = SparseMatrix::from_i64_rows(Q, &[&[1, 0], &[1, 1]]).unwrap();
        assert!(outer1_normalize(&m).is_err());
    }

    #[test]
    fn outer1_recomposes() {
        let m = SparseMatrix::from_i64_rows(Q, &[&[3, -2, 5], &[7, 1, 1], &[-1, 4, 9]]).unwrap();
        let (dl, m1, dr) = outer1_normalize(&m).unwrap();
        assert_eq!(dl.matmul(&m1).unwrap().matmul(&dr).unwrap(), m);
        for i in 0..3 {
            assert!(m1.get(0, i).is_one() && m1.get(i, 0).is_one());
        }
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(good_pair_count(2, PairMode::Generic), 12);
        assert_eq!(good_pair_count(6, PairMode::Wh), 2304);
        assert_eq!(good_pair_count(4, PairMode::Wh), 160);
        assert_eq!(good_pair_count(4, PairMode::Generic), 160);
        assert_eq!(rank1_change_bound(4, PairMode::Generic), 96);
        assert_eq!(rank1_change_bound(3, PairMode::Generic), 24);
        assert_eq!(rank1_change_bound(1, PairMode::Generic), 1);
        assert_eq!(rank1_change_bound(5, PairMode::Wh), 448);
        assert_eq!(rank1_change_bound(6, PairMode::Wh), 1792);
    }

    #[test]
    fn brute_force_matches_closed_form() {
        for n in 1..=8 {
            for mode in [PairMode::Generic, PairMode::Wh] {
                assert_eq!(brute_force_good_pairs(n, mode) as u128, good_pair_count(n, mode), "n={n} {mode:?}");
            }
        }
    }

    #[test]
    fn b_vectors_are_integral_and_case_consistent() {
        for n in 1..=9 {
            let (b1, b2) = b_vectors(n);
            for x in 0..(1usize << n) {
                let w = x.count_ones() as f64;
                let c = match n % 4 {
                    0 => n as f64 / 4.0,
                    2 => (n as f64 + 2.0) / 4.0,
                    1 => (n as f64 - 1.0) / 4.0,
                    _ => (n as f64 + 1.0) / 4.0,
                };
                let b1_want = if n % 4 == 0 || n % 4 == 1 { (w / 2.0).floor() } else { (w / 2.0).ceil() };
                assert_eq!(b1[x] as f64, b1_want);
                assert_eq!(b2[x] as f64, (w / 2.0).ceil() - c);
            }
        }
    }

    #[test]
    fn multisection_examples() {
        assert_eq!(multisection(4, 4, 2), BigInt::from(6));
        assert_eq!(multisection(4, 4, 0), BigInt::from(2));
        for n in 0..12 {
            assert_eq!(multisection(n, 1, 0), BigInt::one() << n as usize);
            for r in 0..4 {
                assert_eq!(multisection(n, 4, r), multisection4_closed(n, r), "n={n} r={r}");
            }
        }
    }

    #[test]
    fn witnesses_verify() {
        for n in 1..=5 {
            for w in [
                rank1_construct_kron2(&Q.from_i64(2), n).unwrap(),
                rank1_construct_kron2(&Q.from_i64(-1), n).unwrap(),
                rank1_construct_wh(n, FieldSpec::prime(7).unwrap()).unwrap(),
            ] {
                assert!(w.verify().unwrap());
            }
        }
        let w = rank1_construct_wh(4, Q).unwrap();
        assert_eq!(w.changes(), 96);
        let w = rank1_construct_kron2(&Q.from_i64(3), 3).unwrap();
        assert_eq!(w.changes(), 24);
    }

    #[test]
    fn rejected_inputs() {
        assert!(rank1_construct_kron2(&Q.from_i64(0), 3).is_err());
        assert!(rank1_construct_kron2(&Q.from_i64(1), 3).is_err());
        assert!(rank1_construct_wh(3, FieldSpec::prime(2).unwrap()).is_err());
    }

    #[test]
    fn general_2x2_through_normalization() {
        let m = SparseMatrix::from_i64_rows(Q, &[&[2, 3], &[5, 7]]).unwrap();
        let w = rank1_construct_2x2(&m, 4).unwrap();
        assert!(w.verify().unwrap());
        assert_eq!(w.changes() as u128, rank1_change_bound(4, PairMode::Generic));
    }

    #[test]
    fn hadamard_lower_bound() {
        for n in 1..=6 {
            let w = rank1_construct_wh(n, Q).unwrap();
            assert!(w.changes() >= (1usize << (2 * n)) / 4);
        }
    }

    proptest! {
        #[test]
        fn prime_field_omegas(n in 1usize..=5, omega in 2i64..5) {
            let f = FieldSpec::prime(5).unwrap();
            let w = rank1_construct_kron2(&f.from_i64(omega), n).unwrap();
            prop_assert!(w.verify().unwrap());
            prop_assert!(w.changes() as u128 <= rank1_change_bound(n, PairMode::Generic));
        }
    }
}
