//! Sum-of-products decompositions `M = Σ_j U_j × V_j` and their statistics.

use std::path::Path;

use astro_float::{BigFloat, Consts, RoundingMode};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::matrix::SparseMatrix;
use crate::partition::RectPartition;
use crate::rigidity::RigidityWitness;
use crate::smx::InlineMatrix;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorPair {
    pub u: SparseMatrix,
    pub v: SparseMatrix,
}

impl FactorPair {
    pub fn new(u: SparseMatrix, v: SparseMatrix) -> Result<Self> {
        if u.cols() != v.rows() {
            return Err(Error::dims(format!("U has {} columns but V has {} rows", u.cols(), v.rows())));
        }
        if u.field() != v.field() {
            return Err(Error::FieldMismatch { left: u.field(), right: v.field() });
        }
        if u.nnz() == 0 || v.nnz() == 0 {
            return Err(Error::invalid("factor pairs with a zero factor are not allowed"));
        }
        Ok(FactorPair { u, v })
    }

    /// `(Vᵀ, Uᵀ)`, a decomposition term of the transposed matrix.
    pub fn transposed(&self) -> FactorPair {
        FactorPair { u: self.v.transpose(), v: self.u.transpose() }
    }

    pub fn product(&self) -> Result<SparseMatrix> {
        self.u.matmul(&self.v)
    }

    pub fn nnz(&self) -> (usize, usize) {
        (self.u.nnz(), self.v.nnz())
    }
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub base: SparseMatrix,
    pub pairs: Vec<FactorPair>,
    pub dual_pairs: Option<Vec<FactorPair>>,
    pub hard_pair: Option<(SparseMatrix, SparseMatrix)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompStats {
    pub q: usize,
    pub nnz_base: usize,
    pub terms: usize,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
    pub oriented: bool,
    pub one_sided: bool,
    pub imbalanced: bool,
}

impl Decomposition {
    pub fn new(base: SparseMatrix, pairs: Vec<FactorPair>) -> Result<Self> {
        let d = Decomposition { base, pairs, dual_pairs: None, hard_pair: None };
        d.check_shapes()?;
        Ok(d)
    }

    pub fn with_dual(mut self, dual: Vec<FactorPair>) -> Result<Self> {
        self.dual_pairs = Some(dual);
        self.check_shapes()?;
        Ok(self)
    }

    pub fn with_hard_pair(mut self, left: SparseMatrix, right: SparseMatrix) -> Result<Self> {
        self.hard_pair = Some((left, right));
        self.check_shapes()?;
        Ok(self)
    }

    pub fn q(&self) -> usize {
        self.base.rows()
    }

    pub fn field(&self) -> FieldSpec {
        self.base.field()
    }

    fn check_shapes(&self) -> Result<()> {
        if !self.base.is_square() {
            return Err(Error::dims("decomposition base must be square"));
        }
        let q = self.q();
        let check = |p: &FactorPair| -> Result<()> {
            if p.u.rows() != q || p.v.cols() != q {
                return Err(Error::dims(format!(
                    "pair {}x{} · {}x{} does not produce a {q}x{q} matrix",
                    p.u.rows(),
                    p.u.cols(),
                    p.v.rows(),
                    p.v.cols()
                )));
            }
            if p.u.field() != self.field() {
                return Err(Error::FieldMismatch { left: p.u.field(), right: self.field() });
            }
            Ok(())
        };
        if self.pairs.is_empty() {
            return Err(Error::invalid("decomposition has no pairs"));
        }
        self.pairs.iter().try_for_each(check)?;
        if let Some(d) = &self.dual_pairs {
            if d.is_empty() {
                return Err(Error::invalid("empty dual pair list"));
            }
            d.iter().try_for_each(check)?;
        }
        if let Some((l, r)) = &self.hard_pair {
            for m in [l, r] {
                if m.rows() != q || m.cols() != q {
                    return Err(Error::dims("hard pair matrices must be q x q"));
                }
            }
        }
        Ok(())
    }

    /// Pairs used when a term has more nonzeros on its right factor.
    pub fn dual(&self) -> Result<Vec<FactorPair>> {
        match &self.dual_pairs {
            Some(d) => Ok(d.clone()),
            None if self.base.is_symmetric() => Ok(self.pairs.iter().map(FactorPair::transposed).collect()),
            None => Err(Error::invalid("asymmetric base needs explicit dual pairs")),
        }
    }

    /// `(left, right)` with `left × right = right × left = base`; defaults to `(I, M)`.
    pub fn hard(&self) -> (SparseMatrix, SparseMatrix) {
        match &self.hard_pair {
            Some(p) => p.clone(),
            None => (SparseMatrix::identity(self.q(), self.field()), self.base.clone()),
        }
    }

    /// Exact check of `Σ U_j V_j = M` (and the dual and hard-pair identities).
    pub fn validate(&self) -> Result<bool> {
        self.check_shapes()?;
        let sum = |pairs: &[FactorPair]| -> Result<SparseMatrix> {
            let mut acc = SparseMatrix::zeros(self.q(), self.q(), self.field());
            for p in pairs {
                acc = acc.add(&p.product()?)?;
            }
            Ok(acc)
        };
        if sum(&self.pairs)? != self.base {
            return Ok(false);
        }
        if let Some(d) = &self.dual_pairs {
            if sum(d)? != self.base {
                return Ok(false);
            }
        }
        if let Some((l, r)) = &self.hard_pair {
            if l.matmul(r)? != self.base || r.matmul(l)? != self.base {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The same factorization read for `Mᵀ`.
    pub fn transposed(&self) -> Result<Decomposition> {
        let dual = self.dual_pairs.as_ref().map(|d| d.iter().map(FactorPair::transposed).collect());
        Ok(Decomposition {
            base: self.base.transpose(),
            pairs: self.pairs.iter().map(FactorPair::transposed).collect(),
            dual_pairs: dual,
            hard_pair: self.hard_pair.as_ref().map(|(l, r)| (r.transpose(), l.transpose())),
        })
    }

    /// Weighted mean of `ln(nnz U_j / nnz V_j)` over the primary pairs.
    pub fn raw_e(&self) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for p in &self.pairs {
            let (a, b) = p.nnz();
            let w = ((a * b) as f64).sqrt();
            num += (a as f64 / b as f64).ln() * w;
            den += w;
        }
        num / den
    }

    /// Swaps primary and dual pairs when that makes `E ≤ 0`.
    pub fn oriented(&self) -> Result<(Decomposition, bool)> {
        if self.raw_e() > 1e-12 {
            let dual = self.dual()?;
            let d = Decomposition {
                base: self.base.clone(),
                pairs: dual,
                dual_pairs: Some(self.pairs.clone()),
                hard_pair: self.hard_pair.clone(),
            };
            Ok((d, true))
        } else {
            Ok((self.clone(), false))
        }
    }

    /// `e^G` as an exact fraction `(num, den)`.
    pub fn exp_g(&self) -> Result<(u64, u64)> {
        let q = self.q() as u64;
        let mut best = (self.base.nnz() as u64, q);
        let mut consider = |a: u64, b: u64| {
            let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
            if (hi as u128) * (best.1 as u128) > (best.0 as u128) * (lo as u128) {
                best = (hi, lo);
            }
        };
        for p in self.pairs.iter().chain(self.dual()?.iter()) {
            let (a, b) = p.nnz();
            consider(a as u64, b as u64);
        }
        let (l, r) = self.hard();
        consider(l.nnz() as u64, r.nnz() as u64);
        Ok(best)
    }

    pub fn stats(&self) -> Result<DecompStats> {
        let q = self.q();
        let nnz_m = self.base.nnz();
        if nnz_m < q {
            return Err(Error::invalid(format!(
                "base has {nnz_m} nonzeros but dimension {q}; imbalance statistics need nnz(M) >= q"
            )));
        }
        let (d, oriented) = self.oriented()?;
        let (gn, gd) = d.exp_g()?;
        let g = (gn as f64 / gd as f64).ln();
        let e = d.raw_e();
        let weights: Vec<(usize, usize)> = d.pairs.iter().map(FactorPair::nnz).collect();
        let alpha1 = weights.iter().map(|(a, b)| ((a * b) as f64).sqrt()).sum::<f64>().ln();
        let alpha2 = ((nnz_m * q) as f64).sqrt().ln();
        let ratio = (nnz_m as f64 / q as f64).ln();
        let beta = if nnz_m == q || g == 0.0 { 0.0 } else { ratio / (6.0 * g) * soft_factor(e, g) };
        let one_sided = weights.iter().all(|(a, b)| a <= b);
        let mut imbalanced = nnz_m > q && beta > alpha2 - alpha1;
        if nnz_m > q && (beta - (alpha2 - alpha1)).abs() < 1e-9 {
            imbalanced = imbalanced_high_precision(q, nnz_m, (gn, gd), &weights);
        }
        Ok(DecompStats { q, nnz_base: nnz_m, terms: d.pairs.len(), g, e, alpha1, alpha2, beta, oriented, one_sided, imbalanced })
    }

    pub fn to_file(&self) -> DecompositionFile {
        let pair = |p: &FactorPair| PairFile { u: InlineMatrix::from_matrix(&p.u), v: InlineMatrix::from_matrix(&p.v) };
        DecompositionFile {
            field: self.field(),
            q: self.q(),
            base: InlineMatrix::from_matrix(&self.base),
            pairs: self.pairs.iter().map(pair).collect(),
            dual_pairs: self.dual_pairs.as_ref().map(|d| d.iter().map(pair).collect()),
            hard_pair: self.hard_pair.as_ref().map(|(l, r)| PairFile {
                u: InlineMatrix::from_matrix(l),
                v: InlineMatrix::from_matrix(r),
            }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: DecompositionFile = serde_json::from_str(text)?;
        f.into_decomposition()
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// `min{1, −4E/(E+G)}`; `E + G` vanishes exactly when every pair sits at `−G`.
fn soft_factor(e: f64, g: f64) -> f64 {
    let denom = e + g;
    if denom <= 1e-12 * g {
        1.0
    } else {
        (-4.0 * e / denom).min(1.0)
    }
}

fn imbalanced_high_precision(q: usize, nnz_m: usize, g: (u64, u64), weights: &[(usize, usize)]) -> bool {
    const P: usize = 192;
    let rm = RoundingMode::ToEven;
    let mut cc = Consts::new().expect("constants cache");
    let int = |v: u64| BigFloat::from_u64(v, P);
    let ln = |v: &BigFloat, cc: &mut Consts| v.ln(P, rm, cc);
    let mut s_w = int(0);
    let mut s_e = int(0);
    for (a, b) in weights {
        let w = int((*a as u64) * (*b as u64)).sqrt(P, rm);
        let l = ln(&int(*a as u64).div(&int(*b as u64), P, rm), &mut cc);
        s_e = s_e.add(&l.mul(&w, P, rm), P, rm);
        s_w = s_w.add(&w, P, rm);
    }
    let e = s_e.div(&s_w, P, rm);
    let alpha1 = ln(&s_w, &mut cc);
    let alpha2 = ln(&int((nnz_m * q) as u64).sqrt(P, rm), &mut cc);
    let gg = ln(&int(g.0).div(&int(g.1), P, rm), &mut cc);
    let ratio = ln(&int(nnz_m as u64).div(&int(q as u64), P, rm), &mut cc);
    let denom = e.add(&gg, P, rm);
    let one = int(1);
    let factor = if denom.is_zero() || !denom.is_positive() {
        one
    } else {
        let f = e.mul(&BigFloat::from_i64(-4, P), P, rm).div(&denom, P, rm);
        if f.cmp(&one).is_some_and(|c| c < 0) {
            f
        } else {
            one
        }
    };
    let beta = ratio.div(&gg.mul(&int(6), P, rm), P, rm).mul(&factor, P, rm);
    let gap = alpha2.sub(&alpha1, P, rm);
    beta.cmp(&gap).is_some_and(|c| c > 0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairFile {
    #[serde(rename = "U")]
    pub u: InlineMatrix,
    #[serde(rename = "V")]
    pub v: InlineMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionFile {
    pub field: FieldSpec,
    pub q: usize,
    pub base: InlineMatrix,
    pub pairs: Vec<PairFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_pairs: Option<Vec<PairFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hard_pair: Option<PairFile>,
}

impl DecompositionFile {
    pub fn into_decomposition(self) -> Result<Decomposition> {
        let f = self.field;
        let base = self.base.to_matrix(f)?;
        if base.rows() != self.q {
            return Err(Error::dims(format!("q = {} but base is {}x{}", self.q, base.rows(), base.cols())));
        }
        let pair = |p: &PairFile| FactorPair::new(p.u.to_matrix(f)?, p.v.to_matrix(f)?);
        let pairs = self.pairs.iter().map(pair).collect::<Result<Vec<_>>>()?;
        let mut d = Decomposition::new(base, pairs)?;
        if let Some(dp) = &self.dual_pairs {
            d = d.with_dual(dp.iter().map(pair).collect::<Result<Vec<_>>>()?)?;
        }
        if let Some(h) = &self.hard_pair {
            d = d.with_hard_pair(h.u.to_matrix(f)?, h.v.to_matrix(f)?)?;
        }
        Ok(d)
    }
}

/// `U_j` = column `j` of `m`, `V_j` = the `j`-th standard basis row.
pub fn gen_one_hot(m: &SparseMatrix) -> Result<Decomposition> {
    if !m.is_square() {
        return Err(Error::dims("one-hot decomposition needs a square matrix"));
    }
    let q = m.rows();
    let f = m.field();
    let mt = m.transpose();
    let mut pairs = Vec::new();
    for j in 0..q {
        let (rows, vals) = mt.row(j);
        if rows.is_empty() {
            continue;
        }
        let u = SparseMatrix::from_triplets(q, 1, f, rows.iter().zip(vals).map(|(r, v)| (*r, 0, v.clone())).collect())?;
        let v = SparseMatrix::from_triplets(1, q, f, vec![(0, j, f.one())])?;
        pairs.push(FactorPair::new(u, v)?);
    }
    Decomposition::new(m.clone(), pairs)
}

/// `M = U×V + I×S`, with dual `U×V + S×I`.
pub fn from_rigidity(w: &RigidityWitness) -> Result<Decomposition> {
    let q = w.target.rows();
    let f = w.target.field();
    let uv = FactorPair::new(w.u.clone(), w.v.clone())?;
    if w.s.nnz() == 0 {
        return Decomposition::new(w.target.clone(), vec![uv]);
    }
    let i = SparseMatrix::identity(q, f);
    let is = FactorPair::new(i.clone(), w.s.clone())?;
    let si = FactorPair::new(w.s.clone(), i.clone())?;
    Decomposition::new(w.target.clone(), vec![uv.clone(), is])?
        .with_dual(vec![uv, si])?
        .with_hard_pair(i, w.target.clone())
}

/// One pair of 0/1 indicators per rectangle.
pub fn from_partition(p: &RectPartition) -> Result<Decomposition> {
    let q = p.base.rows();
    let f = p.base.field();
    let mut pairs = Vec::with_capacity(p.rects.len());
    for r in &p.rects {
        let u = SparseMatrix::from_triplets(q, 1, f, r.rows.iter().map(|&i| (i, 0, f.one())).collect())?;
        let v = SparseMatrix::from_triplets(1, p.base.cols(), f, r.cols.iter().map(|&j| (0, j, f.one())).collect())?;
        pairs.push(FactorPair::new(u, v)?);
    }
    Decomposition::new(p.base.clone(), pairs)
}
