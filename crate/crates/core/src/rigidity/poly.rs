//! Polynomial-method splits of `M^{⊗n}` for arbitrary `q×q` bases.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;

use super::RigidityWitness;
use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};
use crate::matrix::SparseMatrix;

pub const DEFAULT_MONOMIAL_CAP: usize = 1 << 20;

/// A symmetric polynomial on `{0,1}^n`, `p(z) = Σ_i a_i·C(|z| − k − 1, i)`,
/// taking the value `c_i` at every `z` of weight `k + i`, `i = 1..r`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationPoly {
    pub field: FieldSpec,
    pub n: usize,
    pub k: i64,
    pub coeffs: Vec<FieldElement>,
}

/// `C(m, i)` for any integer `m`.
fn gbinom(m: i64, i: usize) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for j in 0..i {
        num *= BigInt::from(m - j as i64);
        den *= BigInt::from(j + 1);
    }
    num / den
}

pub fn interpolation_poly(field: FieldSpec, n: usize, r: usize, k: i64, constants: &[FieldElement]) -> Result<InterpolationPoly> {
    if constants.len() != r || r == 0 {
        return Err(Error::invalid(format!("expected {r} constants, got {}", constants.len())));
    }
    if k < -1 || (n as i64) < r as i64 + k {
        return Err(Error::invalid(format!("need n >= r + k and k >= -1 (n={n}, r={r}, k={k})")));
    }
    if constants.iter().any(|c| c.field() != field) {
        return Err(Error::FieldMismatch { left: field, right: constants[0].field() });
    }
    let mut a: Vec<FieldElement> = Vec::with_capacity(r);
    for m in 1..=r {
        let mut v = constants[m - 1].clone();
        for (i, ai) in a.iter().enumerate() {
            v = &v - &(&field.from_bigint(&gbinom(m as i64 - 1, i)) * ai);
        }
        a.push(v);
    }
    Ok(InterpolationPoly { field, n, k, coeffs: a })
}

impl InterpolationPoly {
    pub fn r(&self) -> usize {
        self.coeffs.len()
    }

    /// Value at any point of Hamming weight `w`.
    pub fn eval_weight(&self, w: usize) -> FieldElement {
        let top = w as i64 - self.k - 1;
        self.coeffs
            .iter()
            .enumerate()
            .fold(self.field.zero(), |acc, (i, a)| &acc + &(&self.field.from_bigint(&gbinom(top, i)) * a))
    }

    /// Coefficients `d_j` with `p(z) = Σ_j d_j·e_j(z)`, `e_j` the elementary
    /// symmetric polynomials (equal to `C(|z|, j)` on the cube).
    pub fn symmetric_coeffs(&self) -> Vec<FieldElement> {
        let r = self.r();
        let mut d = vec![self.field.zero(); r];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, dj) in d.iter_mut().enumerate().take(i + 1) {
                let m = i - j;
                let mut c = gbinom(self.k + m as i64, m);
                if m % 2 == 1 {
                    c = -c;
                }
                *dj = &*dj + &(&self.field.from_bigint(&c) * a);
            }
        }
        d
    }
}

#[derive(Clone, Debug)]
pub struct PolyWitness {
    pub witness: RigidityWitness,
    pub monomials: usize,
    pub bad_pairs: u64,
    pub union_bound: BigInt,
    pub window: (usize, usize),
}

fn digits(mut x: usize, q: usize, n: usize) -> Vec<usize> {
    let mut d = vec![0; n];
    for di in d.iter_mut() {
        *di = x % q;
        x /= q;
    }
    d
}

/// Number of pairs `(x, y)` for which some pattern count leaves `[l, h]`.
pub fn bad_pair_count(q: usize, n: usize, l: usize, h: usize) -> Result<u64> {
    let len = q.checked_pow(n as u32).ok_or_else(|| Error::cap("q^n overflows"))?;
    if (len as u128) * (len as u128) > 1 << 28 {
        return Err(Error::cap("bad-pair enumeration is limited to 2^28 pairs"));
    }
    let dig: Vec<Vec<usize>> = (0..len).map(|x| digits(x, q, n)).collect();
    Ok((0..len)
        .into_par_iter()
        .map(|x| {
            let mut bad = 0u64;
            let mut counts = vec![0usize; q * q];
            for y in 0..len {
                counts.iter_mut().for_each(|c| *c = 0);
                for i in 0..n {
                    counts[dig[x][i] * q + dig[y][i]] += 1;
                }
                if counts.iter().any(|c| *c < l || *c > h) {
                    bad += 1;
                }
            }
            bad
        })
        .sum())
}

/// `q²·(Σ_{k<l} + Σ_{k>h}) C(n,k)(q²−1)^{n−k}`.
pub fn union_bound_estimate(q: usize, n: usize, l: usize, h: usize) -> BigInt {
    let q2 = BigInt::from(q * q);
    let rest = BigInt::from(q * q - 1);
    let mut acc = BigInt::zero();
    for k in (0..l.min(n + 1)).chain(h + 1..=n) {
        acc += gbinom(n as i64, k) * num_traits::pow(rest.clone(), n - k);
    }
    acc * q2
}

/// Splits `m^{⊗n}` through the product of per-pattern interpolation
/// polynomials that are exact on pattern counts in `[l, h]`.
pub fn polymethod_decomp(m: &SparseMatrix, n: usize, l: usize, h: usize) -> Result<PolyWitness> {
    polymethod_decomp_capped(m, n, l, h, DEFAULT_MONOMIAL_CAP)
}

pub fn polymethod_decomp_capped(m: &SparseMatrix, n: usize, l: usize, h: usize, cap: usize) -> Result<PolyWitness> {
    if !m.is_square() {
        return Err(Error::dims("base must be square"));
    }
    if l > h || h > n {
        return Err(Error::invalid(format!("window [{l}, {h}] must satisfy l <= h <= n = {n}")));
    }
    let q = m.rows();
    let f = m.field();
    let len = q.checked_pow(n as u32).filter(|v| *v <= 1 << 14).ok_or_else(|| Error::cap("q^n above 2^14"))?;
    let np = q * q;
    let r = h - l + 1;
    let k = l as i64 - 1;
    let sym: Vec<Vec<FieldElement>> = (0..np)
        .map(|p| {
            let base = m.get(p / q, p % q);
            let consts: Vec<FieldElement> = (l..=h).map(|w| base.pow(w as i64).expect("nonnegative power")).collect();
            interpolation_poly(f, n, r, k, &consts).map(|ip| ip.symmetric_coeffs())
        })
        .collect::<Result<_>>()?;

    // Monomials are partial assignments coordinate -> pattern; key byte 0 marks unassigned.
    let mut monos: BTreeMap<Vec<u8>, FieldElement> = BTreeMap::new();
    let mut key = vec![0u8; n];
    let mut counts = vec![0usize; np];
    fn rec(
        i: usize,
        key: &mut Vec<u8>,
        counts: &mut Vec<usize>,
        sym: &[Vec<FieldElement>],
        monos: &mut BTreeMap<Vec<u8>, FieldElement>,
        cap: usize,
    ) -> Result<()> {
        if i == key.len() {
            let mut coef = sym[0][counts[0]].clone();
            for (p, c) in counts.iter().enumerate().skip(1) {
                coef = &coef * &sym[p][*c];
            }
            if !coef.is_zero() {
                if monos.len() >= cap {
                    return Err(Error::cap(format!("more than {cap} monomials")));
                }
                monos.insert(key.clone(), coef);
            }
            return Ok(());
        }
        key[i] = 0;
        rec(i + 1, key, counts, sym, monos, cap)?;
        for p in 0..sym.len() {
            if counts[p] + 1 < sym[p].len() {
                counts[p] += 1;
                key[i] = p as u8 + 1;
                rec(i + 1, key, counts, sym, monos, cap)?;
                counts[p] -= 1;
            }
        }
        key[i] = 0;
        Ok(())
    }
    if np >= 255 {
        return Err(Error::cap("q too large for monomial keys"));
    }
    rec(0, &mut key, &mut counts, &sym, &mut monos, cap)?;

    let rank = monos.len();
    let mut ut = Vec::new();
    let mut vt = Vec::new();
    for (col, (key, coef)) in monos.iter().enumerate() {
        let fixed: Vec<(usize, usize, usize)> =
            key.iter().enumerate().filter(|(_, b)| **b != 0).map(|(i, b)| (i, (*b as usize - 1) / q, (*b as usize - 1) % q)).collect();
        let free: Vec<usize> = (0..n).filter(|i| key[*i] == 0).collect();
        let pw: Vec<usize> = (0..n).map(|i| q.pow(i as u32)).collect();
        let base_x: usize = fixed.iter().map(|(i, s, _)| s * pw[*i]).sum();
        let base_y: usize = fixed.iter().map(|(i, _, t)| t * pw[*i]).sum();
        for z in 0..q.pow(free.len() as u32) {
            let dz = digits(z, q, free.len());
            let off: usize = free.iter().zip(&dz).map(|(i, d)| d * pw[*i]).sum();
            ut.push((base_x + off, col, coef.clone()));
            vt.push((col, base_y + off, f.one()));
        }
    }
    let u = SparseMatrix::from_triplets(len, rank.max(1), f, ut)?;
    let v = SparseMatrix::from_triplets(rank.max(1), len, f, vt)?;
    let target = m.kron_power(n)?;
    let s = target.sub(&u.matmul(&v)?)?;
    let bad_pairs = bad_pair_count(q, n, l, h)?;
    Ok(PolyWitness {
        witness: RigidityWitness { target, u, v, s, rank_bound: rank.max(1) },
        monomials: rank,
        bad_pairs,
        union_bound: union_bound_estimate(q, n, l, h),
        window: (l, h),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q: FieldSpec = FieldSpec::Rational;

    #[test]
    fn constant_and_linear() {
        let p = interpolation_poly(Q, 4, 1, 0, &[Q.from_i64(7)]).unwrap();
        for w in 0..=4 {
            assert_eq!(p.eval_weight(w), Q.from_i64(7));
        }
        let p = interpolation_poly(Q, 4, 2, 0, &[Q.from_i64(3), Q.from_i64(10)]).unwrap();
        assert_eq!(p.coeffs, vec![Q.from_i64(3), Q.from_i64(7)]);
        assert!(interpolation_poly(Q, 2, 2, 1, &[Q.one(), Q.one()]).is_err());
    }

    #[test]
    fn gf2_window_by_exhaustion() {
        let f = FieldSpec::prime(2).unwrap();
        let c = [f.one(), f.zero(), f.one()];
        let p = interpolation_poly(f, 5, 3, 1, &c).unwrap();
        let d = p.symmetric_coeffs();
        for z in 0u32..32 {
            let w = z.count_ones() as usize;
            // e_j(z) = C(w, j) on the cube
            let val = d.iter().enumerate().fold(f.zero(), |acc, (j, dj)| {
                &acc + &(&f.from_bigint(&gbinom(w as i64, j)) * dj)
            });
            assert_eq!(val, p.eval_weight(w));
            if (2..=4).contains(&w) {
                assert_eq!(val, c[w - 2]);
            }
        }
    }

    #[test]
    fn symmetric_form_matches_rational() {
        let c: Vec<FieldElement> = [5, -2, 9, 4].iter().map(|v| Q.from_i64(*v)).collect();
        for k in -1..=2 {
            let p = interpolation_poly(Q, 8, 4, k, &c).unwrap();
            let d = p.symmetric_coeffs();
            for w in 0..=8usize {
                let val = d.iter().enumerate().fold(Q.zero(), |acc, (j, dj)| &acc + &(&Q.from_bigint(&gbinom(w as i64, j)) * dj));
                assert_eq!(val, p.eval_weight(w));
            }
            for i in 1..=4 {
                assert_eq!(p.eval_weight((k + i) as usize), c[i as usize - 1]);
            }
        }
    }

    fn generic2() -> SparseMatrix {
        SparseMatrix::from_i64_rows(Q, &[&[2, 3], &[5, 7]]).unwrap()
    }

    #[test]
    fn full_window_is_exact() {
        let w = polymethod_decomp(&generic2(), 3, 0, 3).unwrap();
        assert_eq!(w.witness.changes(), 0);
        assert!(w.witness.verify().unwrap());
    }

    #[test]
    fn product_reproduces_polynomial() {
        for (n, l, h) in [(3usize, 1usize, 2usize), (4, 1, 3), (5, 1, 2)] {
            let m = generic2();
            let pw = polymethod_decomp(&m, n, l, h).unwrap();
            assert!(pw.witness.verify().unwrap());
            assert_eq!(pw.witness.rank_bound, pw.monomials);
            let polys: Vec<InterpolationPoly> = (0..4)
                .map(|p| {
                    let b = m.get(p / 2, p % 2);
                    let c: Vec<FieldElement> = (l..=h).map(|w| b.pow(w as i64).unwrap()).collect();
                    interpolation_poly(Q, n, h - l + 1, l as i64 - 1, &c).unwrap()
                })
                .collect();
            let uv = pw.witness.u.matmul(&pw.witness.v).unwrap();
            let len = 1usize << n;
            for x in 0..len {
                for y in 0..len {
                    let mut counts = [0usize; 4];
                    for i in 0..n {
                        counts[((x >> i) & 1) * 2 + ((y >> i) & 1)] += 1;
                    }
                    let g = (0..4).fold(Q.one(), |acc, p| &acc * &polys[p].eval_weight(counts[p]));
                    assert_eq!(uv.get(x, y), g);
                    if counts.iter().all(|c| (l..=h).contains(c)) {
                        assert!(pw.witness.s.get(x, y).is_zero());
                    }
                }
            }
            assert!(pw.witness.changes() as u64 <= pw.bad_pairs);
            assert!(BigInt::from(pw.bad_pairs) <= pw.union_bound);
        }
    }

    #[test]
    fn rejects_bad_window() {
        assert!(polymethod_decomp(&generic2(), 3, 2, 1).is_err());
    }
}
