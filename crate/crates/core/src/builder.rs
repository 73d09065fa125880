//! Circuit synthesis from a decomposition of the base matrix.
//!
//! [`build_depth2`] grows a tree of term pairs `(A, B)` with
//! `Σ A×B = M^{⊗n}`. While `|γ(A,B)| = |ln(nnz A / nnz B)|` stays below the
//! threshold `Γ_k = (n−k)·ln(nnz M / q) + 2G`, a term is split with the
//! decomposition (forward pairs when `γ ≥ 0`, dual pairs otherwise). Once a
//! term crosses the threshold it is only extended with the hard pair
//! `(I, M)` or `(M, I)`, whichever pulls the sparsities back together.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::decomp::{DecompStats, Decomposition, FactorPair};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::matrix::SparseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Soft,
    Hard,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Forward,
    Reversed,
}

/// One edge of the term tree. `j` is the 0-based pair index (0 for hard steps).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Step {
    pub kind: StepKind,
    pub side: Side,
    pub j: usize,
}

impl Step {
    pub fn soft(side: Side, j: usize) -> Self {
        Step { kind: StepKind::Soft, side, j }
    }

    pub fn hard(side: Side) -> Self {
        Step { kind: StepKind::Hard, side, j: 0 }
    }
}

pub type TermLabel = Vec<Step>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub label: TermLabel,
    pub nnz_a: u128,
    pub nnz_b: u128,
    /// Step at which the term left the soft phase.
    pub exit: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    pub max_terms: usize,
    pub max_nnz: u128,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_terms: 1 << 22, max_nnz: 1 << 28 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Accept imbalanced or one-sided input.
    Auto,
    Imbalanced,
    OneSided,
}

#[derive(Clone, Debug)]
pub struct Depth2Build {
    pub circuit: Circuit,
    pub terms: Vec<Term>,
    pub stats: DecompStats,
    /// The decomposition the labels refer to (after orientation).
    pub oriented: Decomposition,
    pub exp_g: (u64, u64),
    pub n: usize,
}

impl Depth2Build {
    /// `2·e^{2G}·(n+1)·e^{α1 n}`, without the `(n+1)` for one-sided input.
    pub fn size_bound(&self) -> f64 {
        size_bound(&self.stats, self.n)
    }

    /// `|ln(nnz A / nnz B)| < 4G` for every term, compared exactly.
    pub fn terminal_balance(&self) -> bool {
        let (gn, gd) = (BigUint::from(self.exp_g.0), BigUint::from(self.exp_g.1));
        let (gn4, gd4) = (gn.pow(4), gd.pow(4));
        self.terms.iter().all(|t| {
            let (hi, lo) = if t.nnz_a >= t.nnz_b { (t.nnz_a, t.nnz_b) } else { (t.nnz_b, t.nnz_a) };
            BigUint::from(hi) * &gd4 < BigUint::from(lo) * &gn4
        })
    }

    /// `(Σ nnz A, Σ nnz B)` from the term sparsities.
    pub fn layer_nnz(&self) -> (u128, u128) {
        self.terms.iter().fold((0, 0), |(a, b), t| (a + t.nnz_a, b + t.nnz_b))
    }
}

pub fn size_bound(stats: &DecompStats, n: usize) -> f64 {
    let slack = if stats.one_sided { 1.0 } else { (n + 1) as f64 };
    2.0 * (2.0 * stats.g).exp() * slack * (stats.alpha1 * n as f64).exp()
}

/// Exact form of `|γ| < Γ_k`:
/// `max·q^{n−k}·g_den² < min·m^{n−k}·g_num²`.
struct Threshold {
    lhs: Vec<BigUint>,
    rhs: Vec<BigUint>,
}

impl Threshold {
    fn new(q: usize, m: usize, (gn, gd): (u64, u64), n: usize) -> Self {
        let (gn2, gd2) = (BigUint::from(gn).pow(2), BigUint::from(gd).pow(2));
        let mut lhs = Vec::with_capacity(n + 1);
        let mut rhs = Vec::with_capacity(n + 1);
        for k in 0..=n {
            lhs.push(BigUint::from(q).pow((n - k) as u32) * &gd2);
            rhs.push(BigUint::from(m).pow((n - k) as u32) * &gn2);
        }
        Threshold { lhs, rhs }
    }

    fn below(&self, k: usize, a: u128, b: u128) -> bool {
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        BigUint::from(hi) * &self.lhs[k] < BigUint::from(lo) * &self.rhs[k]
    }
}

struct Sparsities {
    fwd: Vec<(u128, u128)>,
    dual: Vec<(u128, u128)>,
    hard: (u128, u128),
}

impl Sparsities {
    fn of(d: &Decomposition) -> Result<Self> {
        let nz = |p: &FactorPair| (p.u.nnz() as u128, p.v.nnz() as u128);
        let (l, r) = d.hard();
        Ok(Sparsities {
            fwd: d.pairs.iter().map(nz).collect(),
            dual: d.dual()?.iter().map(nz).collect(),
            hard: (l.nnz() as u128, r.nnz() as u128),
        })
    }

    fn soft_children(&self, a: u128, b: u128) -> (Side, &[(u128, u128)]) {
        if a >= b {
            (Side::Forward, &self.fwd)
        } else {
            (Side::Reversed, &self.dual)
        }
    }

    fn hard_child(&self, a: u128, b: u128) -> (Side, u128, u128) {
        let (l, r) = self.hard;
        if a >= b {
            (Side::Forward, a * l, b * r)
        } else {
            (Side::Reversed, a * r, b * l)
        }
    }
}

fn check_input(d: &Decomposition, method: Method) -> Result<(Decomposition, DecompStats)> {
    if !d.validate()? {
        return Err(Error::invalid("decomposition does not sum to its base"));
    }
    let stats = d.stats()?;
    if stats.nnz_base == stats.q {
        return Err(Error::Unsupported(
            "base has exactly q nonzeros; its Kronecker powers are depth-1, use the mixed-product method".into(),
        ));
    }
    let ok = match method {
        Method::Auto => stats.imbalanced || stats.one_sided,
        Method::Imbalanced => stats.imbalanced,
        Method::OneSided => stats.one_sided,
    };
    if !ok {
        return Err(Error::Unsupported(format!(
            "decomposition is not {} (beta {:.4} vs alpha2-alpha1 {:.4}); use the mixed-product method",
            match method {
                Method::OneSided => "one-sided",
                Method::Imbalanced => "imbalanced",
                Method::Auto => "imbalanced or one-sided",
            },
            stats.beta,
            stats.alpha2 - stats.alpha1
        )));
    }
    let (oriented, _) = d.oriented()?;
    Ok((oriented, stats))
}

/// The term tree without materializing any matrix.
pub fn plan_depth2(d: &Decomposition, n: usize, caps: Caps) -> Result<(Vec<Term>, Decomposition, DecompStats, (u64, u64))> {
    plan_with(d, n, caps, Method::Auto)
}

fn plan_with(d: &Decomposition, n: usize, caps: Caps, method: Method) -> Result<(Vec<Term>, Decomposition, DecompStats, (u64, u64))> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let (od, stats) = check_input(d, method)?;
    let sp = Sparsities::of(&od)?;
    let exp_g = od.exp_g()?;
    let th = Threshold::new(od.q(), od.base.nnz(), exp_g, n);

    let mut f: Vec<Term> = vec![Term { label: vec![], nnz_a: 1, nnz_b: 1, exit: None }];
    let mut g: Vec<Term> = Vec::new();
    let overflow = || Error::cap("term sparsity overflows 128 bits");
    for k in 1..=n {
        let mut next_g = Vec::with_capacity(g.len());
        for t in g.drain(..) {
            let (side, a, b) = sp.hard_child(t.nnz_a, t.nnz_b);
            let mut label = t.label;
            label.push(Step::hard(side));
            next_g.push(Term { label, nnz_a: a, nnz_b: b, exit: t.exit });
        }
        let mut next_f = Vec::new();
        for t in &f {
            let (side, pairs) = sp.soft_children(t.nnz_a, t.nnz_b);
            for (j, (u, v)) in pairs.iter().enumerate() {
                let a = t.nnz_a.checked_mul(*u).ok_or_else(overflow)?;
                let b = t.nnz_b.checked_mul(*v).ok_or_else(overflow)?;
                let mut label = t.label.clone();
                label.push(Step::soft(side, j));
                if th.below(k, a, b) {
                    next_f.push(Term { label, nnz_a: a, nnz_b: b, exit: None });
                } else {
                    next_g.push(Term { label, nnz_a: a, nnz_b: b, exit: Some(k) });
                }
            }
        }
        f = next_f;
        g = next_g;
        let count = f.len() + g.len();
        if count > caps.max_terms {
            return Err(Error::cap(format!(
                "{count} terms at step {k} of {n} exceed the cap {} ({} soft, {} hard)",
                caps.max_terms,
                f.len(),
                g.len()
            )));
        }
    }
    f.sort_by(|x, y| x.label.cmp(&y.label));
    g.sort_by(|x, y| (x.exit, &x.label).cmp(&(y.exit, &y.label)));
    f.extend(g);
    let total: u128 = f.iter().map(|t| t.nnz_a + t.nnz_b).sum();
    if total > caps.max_nnz {
        return Err(Error::cap(format!(
            "circuit would have {total} nonzeros over {} terms, above the cap {}",
            f.len(),
            caps.max_nnz
        )));
    }
    Ok((f, od, stats, exp_g))
}

/// Left/right factors for each step kind, with the left ones stored transposed.
struct Expander {
    fwd: Vec<(SparseMatrix, SparseMatrix)>,
    dual: Vec<(SparseMatrix, SparseMatrix)>,
    hard: (SparseMatrix, SparseMatrix),
    hard_rev: (SparseMatrix, SparseMatrix),
    field: FieldSpec,
}

impl Expander {
    fn new(d: &Decomposition) -> Result<Self> {
        let tp = |p: &FactorPair| (p.u.transpose(), p.v.clone());
        let (l, r) = d.hard();
        Ok(Expander {
            fwd: d.pairs.iter().map(tp).collect(),
            dual: d.dual()?.iter().map(tp).collect(),
            hard: (l.transpose(), r.clone()),
            hard_rev: (r.transpose(), l),
            field: d.field(),
        })
    }

    /// `(Aᵀ, B)`; the transpose keeps the row count at the term's rank.
    fn expand_t(&self, label: &[Step]) -> Result<(SparseMatrix, SparseMatrix)> {
        let mut at = SparseMatrix::identity(1, self.field);
        let mut b = SparseMatrix::identity(1, self.field);
        for s in label {
            let (c, e) = match (s.kind, s.side) {
                (StepKind::Soft, side) => {
                    let pairs = if side == Side::Forward { &self.fwd } else { &self.dual };
                    let p = pairs.get(s.j).ok_or_else(|| Error::invalid(format!("pair index {} out of range", s.j)))?;
                    (&p.0, &p.1)
                }
                (StepKind::Hard, Side::Forward) => (&self.hard.0, &self.hard.1),
                (StepKind::Hard, Side::Reversed) => (&self.hard_rev.0, &self.hard_rev.1),
            };
            at = at.kron(c)?;
            b = b.kron(e)?;
        }
        Ok((at, b))
    }
}

/// Materializes the pair for `label`; `d` must be the oriented decomposition.
pub fn expand_term(label: &[Step], d: &Decomposition) -> Result<(SparseMatrix, SparseMatrix)> {
    let (at, b) = Expander::new(d)?.expand_t(label)?;
    Ok((at.transpose(), b))
}

/// `[A_1 | A_2 | …] × [B_1; B_2; …] = M^{⊗n}`.
pub fn build_depth2(d: &Decomposition, n: usize, caps: Caps) -> Result<Depth2Build> {
    build_depth2_with(d, n, caps, Method::Auto)
}

pub fn build_depth2_with(d: &Decomposition, n: usize, caps: Caps, method: Method) -> Result<Depth2Build> {
    let (terms, od, stats, exp_g) = plan_with(d, n, caps, method)?;
    let ex = Expander::new(&od)?;
    let blocks: Vec<(SparseMatrix, SparseMatrix)> =
        terms.par_iter().map(|t| ex.expand_t(&t.label)).collect::<Result<_>>()?;
    let (at, bs): (Vec<SparseMatrix>, Vec<SparseMatrix>) = blocks.into_iter().unzip();
    let f0 = SparseMatrix::vstack(&at)?.transpose();
    let f1 = SparseMatrix::vstack(&bs)?;
    let circuit = Circuit::new(vec![f0, f1], "depth2")?
        .with_param("n", n)
        .with_param("terms", terms.len())
        .with_param("oriented", stats.oriented)
        .with_param("method", method)
        .with_param("alpha1", stats.alpha1)
        .with_param("G", stats.g);
    Ok(Depth2Build { circuit, terms, stats, oriented: od, exp_g, n })
}

/// `dpth` factors, each applying `m^{⊗s_i}` to its own block of digits, with
/// the `n` digits split as evenly as possible (earlier layers take the extra).
pub fn build_mixed_product(m: &SparseMatrix, n: usize, dpth: usize) -> Result<Circuit> {
    if !m.is_square() {
        return Err(Error::dims("base must be square"));
    }
    if n == 0 || dpth == 0 || dpth > n {
        return Err(Error::invalid(format!("depth {dpth} must lie in 1..=n (n = {n})")));
    }
    let q = m.rows();
    let f = m.field();
    let split: Vec<(usize, usize)> = (0..dpth)
        .scan(0, |off, i| {
            let s = n / dpth + usize::from(i < n % dpth);
            let r = (*off, s);
            *off += s;
            Some(r)
        })
        .collect();
    let factors = split
        .into_par_iter()
        .map(|(off, s)| {
            let lo = SparseMatrix::identity(q.pow(off as u32), f);
            let hi = SparseMatrix::identity(q.pow((n - off - s) as u32), f);
            lo.kron(&m.kron_power(s)?)?.kron(&hi)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Circuit::new(factors, "mixed-product")?.with_param("n", n).with_param("depth", dpth))
}

/// Even-depth circuit from `dpth/2` copies of the depth-2 circuit for
/// `base^{⊗b}`, `b = ⌈n / (dpth/2)⌉`. When `(dpth/2)·b > n` the high digits
/// are fixed to 0 and the first factor rescaled by `base[0,0]^{−(n'−n)}`.
pub fn boost_depth(d: &Decomposition, n: usize, dpth: usize, caps: Caps) -> Result<Circuit> {
    if dpth == 0 || !dpth.is_multiple_of(2) {
        return Err(Error::Unsupported(format!("depth {dpth} is not a positive even number")));
    }
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let h = dpth / 2;
    let b = n.div_ceil(h);
    let n_pad = h * b;
    let q = d.q();
    let f = d.field();
    let pad = n_pad - n;
    let scale = if pad > 0 {
        let m00 = d.base.get(0, 0);
        let inv = m00.inv().ok_or_else(|| Error::invalid("padding needs base[0,0] != 0"))?;
        Some(inv.pow(pad as i64).expect("invertible"))
    } else {
        None
    };
    let blk = build_depth2(d, b, caps)?;
    let (p, qm) = (&blk.circuit.factors[0], &blk.circuit.factors[1]);
    let mut factors = Vec::with_capacity(dpth);
    for i in 1..=h {
        let lo = SparseMatrix::identity(q.pow((b * (i - 1)) as u32), f);
        let hi = SparseMatrix::identity(q.pow((b * (h - i)) as u32), f);
        factors.push(lo.kron(p)?.kron(&hi)?);
        factors.push(lo.kron(qm)?.kron(&hi)?);
    }
    if let Some(s) = scale {
        let keep: Vec<usize> = (0..q.pow(n as u32)).collect();
        let first = &factors[0];
        let all_cols: Vec<usize> = (0..first.cols()).collect();
        factors[0] = first.submatrix(&keep, &all_cols)?.scale(&s)?;
        let last = factors.last().unwrap();
        let all_rows: Vec<usize> = (0..last.rows()).collect();
        let restricted = last.submatrix(&all_rows, &keep)?;
        *factors.last_mut().unwrap() = restricted;
    }
    Ok(Circuit::new(factors, "boost")?
        .with_param("n", n)
        .with_param("depth", dpth)
        .with_param("block_power", b)
        .with_param("padded_digits", pad))
}

/// Exact `E[exp(S_n)]` of the random walk that picks each soft pair with
/// probability `1/J` and adds `(ln J + ln nnz C, ln J + ln nnz D)`; hard steps
/// are deterministic. Equals the per-layer nonzero counts of the depth-2 build.
pub fn process_expectation(d: &Decomposition, n: usize) -> Result<(BigRational, BigRational)> {
    process_expectation_capped(d, n, 1_000_000)
}

pub fn process_expectation_capped(d: &Decomposition, n: usize, path_cap: u64) -> Result<(BigRational, BigRational)> {
    if n == 0 {
        return Ok((BigRational::one(), BigRational::one()));
    }
    let (od, _) = check_input(d, Method::Auto)?;
    let sp = Sparsities::of(&od)?;
    let j_max = sp.fwd.len().max(sp.dual.len()) as u64;
    if j_max.checked_pow(n as u32).is_none_or(|p| p > path_cap) {
        return Err(Error::cap(format!("{j_max}^{n} paths exceed the cap {path_cap}")));
    }
    let th = Threshold::new(od.q(), od.base.nnz(), od.exp_g()?, n);
    struct Walk<'a> {
        sp: &'a Sparsities,
        th: &'a Threshold,
        n: usize,
        acc: (BigRational, BigRational),
    }
    impl Walk<'_> {
        // `jpow` is exp of the accumulated `ln J` terms, `weight` the path probability.
        fn go(&mut self, k: usize, a: u128, b: u128, stage1: bool, jpow: &BigInt, weight: &BigRational) {
            if k == self.n {
                let scale = weight * BigRational::from_integer(jpow.clone());
                self.acc.0 += &scale * BigRational::from_integer(BigInt::from(a));
                self.acc.1 += &scale * BigRational::from_integer(BigInt::from(b));
                return;
            }
            if stage1 {
                let (_, pairs) = self.sp.soft_children(a, b);
                let j = BigInt::from(pairs.len());
                let w = weight / BigRational::from_integer(j.clone());
                let jp = jpow * &j;
                for (u, v) in pairs {
                    let (na, nb) = (a * u, b * v);
                    let stay = self.th.below(k + 1, na, nb);
                    self.go(k + 1, na, nb, stay, &jp, &w);
                }
            } else {
                let (_, na, nb) = self.sp.hard_child(a, b);
                self.go(k + 1, na, nb, false, jpow, weight);
            }
        }
    }
    let mut w = Walk { sp: &sp, th: &th, n, acc: (BigRational::zero(), BigRational::zero()) };
    w.go(0, 1, 1, true, &BigInt::one(), &BigRational::one());
    Ok(w.acc)
}

/// Per-step counts of terms in the soft and hard phases, for reporting.
pub fn phase_counts(terms: &[Term]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for t in terms {
        let key = match t.exit {
            None => "soft".to_string(),
            Some(k) => format!("exit@{k}"),
        };
        *m.entry(key).or_insert(0) += 1;
    }
    m
}
