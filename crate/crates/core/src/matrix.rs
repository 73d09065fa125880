//! Exact sparse matrices in compressed-row form.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};

/// Sparse matrix over a [`FieldSpec`], rows stored contiguously.
///
/// Entries are kept in row-major order with strictly increasing column
/// indices inside each row and no stored zeros, so two matrices with the same
/// value compare equal structurally.
#[derive(Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    field: FieldSpec,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<FieldElement>,
}

/// Appends rows in order; used by every constructor that already knows the
/// canonical layout.
pub(crate) struct RowBuilder {
    m: SparseMatrix,
}

impl RowBuilder {
    pub fn new(rows: usize, cols: usize, field: FieldSpec) -> Self {
        let mut row_ptr = Vec::with_capacity(rows + 1);
        row_ptr.push(0);
        RowBuilder { m: SparseMatrix { rows, cols, field, row_ptr, col_idx: Vec::new(), values: Vec::new() } }
    }

    pub fn reserve(&mut self, nnz: usize) {
        self.m.col_idx.reserve(nnz);
        self.m.values.reserve(nnz);
    }

    /// Pushes one entry of the current row. Columns must increase; zeros are skipped.
    #[inline]
    pub fn push(&mut self, col: usize, v: FieldElement) {
        debug_assert!(col < self.m.cols);
        if !v.is_zero() {
            self.m.col_idx.push(col);
            self.m.values.push(v);
        }
    }

    pub fn end_row(&mut self) {
        self.m.row_ptr.push(self.m.col_idx.len());
    }

    pub fn finish(mut self) -> SparseMatrix {
        while self.m.row_ptr.len() < self.m.rows + 1 {
            self.end_row();
        }
        self.m
    }
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize, field: FieldSpec) -> Self {
        RowBuilder::new(rows, cols, field).finish()
    }

    pub fn identity(n: usize, field: FieldSpec) -> Self {
        let mut b = RowBuilder::new(n, n, field);
        b.reserve(n);
        for i in 0..n {
            b.push(i, field.one());
            b.end_row();
        }
        b.finish()
    }

    pub fn diag(values: &[FieldElement], field: FieldSpec) -> Result<Self> {
        let mut b = RowBuilder::new(values.len(), values.len(), field);
        for (i, v) in values.iter().enumerate() {
            check_field(field, v.field())?;
            b.push(i, v.clone());
            b.end_row();
        }
        Ok(b.finish())
    }

    /// Builds from arbitrary triplets; duplicates are summed and zeros dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        field: FieldSpec,
        mut triplets: Vec<(usize, usize, FieldElement)>,
    ) -> Result<Self> {
        for (r, c, v) in &triplets {
            if *r >= rows || *c >= cols {
                return Err(Error::dims(format!("entry ({r},{c}) outside {rows}x{cols}")));
            }
            check_field(field, v.field())?;
        }
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut b = RowBuilder::new(rows, cols, field);
        b.reserve(triplets.len());
        let mut row = 0;
        let mut it = triplets.into_iter().peekable();
        while let Some((r, c, mut v)) = it.next() {
            while let Some((r2, c2, _)) = it.peek() {
                if *r2 == r && *c2 == c {
                    v = &v + &it.next().unwrap().2;
                } else {
                    break;
                }
            }
            while row < r {
                b.end_row();
                row += 1;
            }
            b.push(c, v);
        }
        Ok(b.finish())
    }

    /// Dense integer rows, convenient for small fixed matrices.
    pub fn from_i64_rows(field: FieldSpec, rows: &[&[i64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::dims("ragged dense rows"));
        }
        let mut b = RowBuilder::new(r, c, field);
        for row in rows {
            for (j, v) in row.iter().enumerate() {
                b.push(j, field.from_i64(*v));
            }
            b.end_row();
        }
        Ok(b.finish())
    }

    pub fn from_dense(field: FieldSpec, rows: &[Vec<FieldElement>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut b = RowBuilder::new(r, c, field);
        for row in rows {
            if row.len() != c {
                return Err(Error::dims("ragged dense rows"));
            }
            for (j, v) in row.iter().enumerate() {
                check_field(field, v.field())?;
                b.push(j, v.clone());
            }
            b.end_row();
        }
        Ok(b.finish())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[FieldElement]) {
        let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[s..e], &self.values[s..e])
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.row_ptr[r + 1] - self.row_ptr[r]
    }

    /// All entries in canonical order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &FieldElement)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (c, v) = self.row(r);
            c.iter().zip(v).map(move |(c, v)| (r, *c, v))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(i) => vals[i].clone(),
            Err(_) => self.field.zero(),
        }
    }

    /// Overwrites the stored value at position `k` of the entry list.
    /// The caller keeps the no-zero invariant; a zero value is rejected.
    pub fn set_stored(&mut self, k: usize, v: FieldElement) -> Result<()> {
        check_field(self.field, v.field())?;
        if v.is_zero() {
            return Err(Error::invalid("stored entries must be nonzero"));
        }
        self.values[k] = v;
        Ok(())
    }

    /// Row and column of the `k`-th stored entry.
    pub fn stored_position(&self, k: usize) -> (usize, usize) {
        let r = self.row_ptr.partition_point(|&p| p <= k) - 1;
        (r, self.col_idx[k])
    }

    pub fn stored_value(&self, k: usize) -> &FieldElement {
        &self.values[k]
    }

    pub fn to_dense(&self) -> Vec<Vec<FieldElement>> {
        let mut out = vec![vec![self.field.zero(); self.cols]; self.rows];
        for (r, c, v) in self.entries() {
            out[r][c] = v.clone();
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..self.cols {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let nnz = self.nnz();
        let mut col_idx = vec![0usize; nnz];
        let mut values = vec![self.field.zero(); nnz];
        for r in 0..self.rows {
            let (cs, vs) = self.row(r);
            for (c, v) in cs.iter().zip(vs) {
                let k = next[*c];
                next[*c] += 1;
                col_idx[k] = r;
                values[k] = v.clone();
            }
        }
        SparseMatrix { rows: self.cols, cols: self.rows, field: self.field, row_ptr, col_idx, values }
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && *self == self.transpose()
    }

    /// Kronecker product with `self` on the low-order index digit:
    /// `kron(a, b)[i1 + a.rows*i3, i2 + a.cols*i4] = a[i1,i2] * b[i3,i4]`.
    pub fn kron(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        check_field(self.field, other.field)?;
        let (ar, ac) = (self.rows, self.cols);
        let rows = ar * other.rows;
        let cols = ac * other.cols;
        let mut b = RowBuilder::new(rows, cols, self.field);
        b.reserve(self.nnz() * other.nnz());
        for i3 in 0..other.rows {
            let (bc, bv) = other.row(i3);
            for i1 in 0..ar {
                let (acs, avs) = self.row(i1);
                for (i4, vb) in bc.iter().zip(bv) {
                    for (i2, va) in acs.iter().zip(avs) {
                        b.push(i2 + ac * i4, va * vb);
                    }
                }
                b.end_row();
            }
        }
        Ok(b.finish())
    }

    /// `m ⊗ m ⊗ … ⊗ m` (`n` factors); `n = 0` gives the 1×1 identity.
    pub fn kron_power(&self, n: usize) -> Result<SparseMatrix> {
        let mut acc = SparseMatrix::identity(1, self.field);
        for _ in 0..n {
            acc = acc.kron(self)?;
        }
        Ok(acc)
    }

    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        check_field(self.field, other.field)?;
        if self.cols != other.rows {
            return Err(Error::dims(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let field = self.field;
        let rows: Vec<(Vec<usize>, Vec<FieldElement>)> = (0..self.rows)
            .into_par_iter()
            .map_init(
                || (vec![field.zero(); other.cols], vec![false; other.cols], Vec::new()),
                |(acc, seen, touched), r| {
                    let (cs, vs) = self.row(r);
                    for (k, va) in cs.iter().zip(vs) {
                        let (bc, bv) = other.row(*k);
                        for (c, vb) in bc.iter().zip(bv) {
                            if !seen[*c] {
                                seen[*c] = true;
                                touched.push(*c);
                                acc[*c] = va * vb;
                            } else {
                                acc[*c] = &acc[*c] + &(va * vb);
                            }
                        }
                    }
                    touched.sort_unstable();
                    let mut out_c = Vec::with_capacity(touched.len());
                    let mut out_v = Vec::with_capacity(touched.len());
                    for &c in touched.iter() {
                        seen[c] = false;
                        let v = std::mem::replace(&mut acc[c], field.zero());
                        if !v.is_zero() {
                            out_c.push(c);
                            out_v.push(v);
                        }
                    }
                    touched.clear();
                    (out_c, out_v)
                },
            )
            .collect();
        let mut b = RowBuilder::new(self.rows, other.cols, field);
        for (cs, vs) in rows {
            for (c, v) in cs.into_iter().zip(vs) {
                b.push(c, v);
            }
            b.end_row();
        }
        Ok(b.finish())
    }

    fn merge(&self, other: &SparseMatrix, negate: bool) -> Result<SparseMatrix> {
        check_field(self.field, other.field)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dims(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut b = RowBuilder::new(self.rows, self.cols, self.field);
        for r in 0..self.rows {
            let (ac, av) = self.row(r);
            let (bc, bv) = other.row(r);
            let (mut i, mut j) = (0, 0);
            while i < ac.len() || j < bc.len() {
                let ca = ac.get(i).copied().unwrap_or(usize::MAX);
                let cb = bc.get(j).copied().unwrap_or(usize::MAX);
                let rhs = |v: &FieldElement| if negate { -v } else { v.clone() };
                if ca < cb {
                    b.push(ca, av[i].clone());
                    i += 1;
                } else if cb < ca {
                    b.push(cb, rhs(&bv[j]));
                    j += 1;
                } else {
                    b.push(ca, &av[i] + &rhs(&bv[j]));
                    i += 1;
                    j += 1;
                }
            }
            b.end_row();
        }
        Ok(b.finish())
    }

    pub fn add(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        self.merge(other, false)
    }

    pub fn sub(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        self.merge(other, true)
    }

    pub fn scale(&self, s: &FieldElement) -> Result<SparseMatrix> {
        check_field(self.field, s.field())?;
        let mut b = RowBuilder::new(self.rows, self.cols, self.field);
        for r in 0..self.rows {
            let (cs, vs) = self.row(r);
            for (c, v) in cs.iter().zip(vs) {
                b.push(*c, v * s);
            }
            b.end_row();
        }
        Ok(b.finish())
    }

    /// Value equality with shape and field checks.
    pub fn equals(&self, other: &SparseMatrix) -> Result<bool> {
        check_field(self.field, other.field)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dims(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(self == other)
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[FieldElement]) -> Result<Vec<FieldElement>> {
        if x.len() != self.cols {
            return Err(Error::dims(format!("vector of length {} for {} columns", x.len(), self.cols)));
        }
        if let Some(v) = x.first() {
            check_field(self.field, v.field())?;
        }
        Ok((0..self.rows)
            .into_par_iter()
            .map(|r| {
                let (cs, vs) = self.row(r);
                let mut acc = self.field.zero();
                for (c, v) in cs.iter().zip(vs) {
                    acc = &acc + &(v * &x[*c]);
                }
                acc
            })
            .collect())
    }

    /// Maps every entry into `GF(p)`.
    pub fn reduce_mod(&self, p: u64) -> Result<SparseMatrix> {
        let field = FieldSpec::prime(p)?;
        if self.field == field {
            return Ok(self.clone());
        }
        let mut b = RowBuilder::new(self.rows, self.cols, field);
        b.reserve(self.nnz());
        for r in 0..self.rows {
            let (cs, vs) = self.row(r);
            for (c, v) in cs.iter().zip(vs) {
                b.push(*c, v.to_field(field)?);
            }
            b.end_row();
        }
        Ok(b.finish())
    }

    /// Keeps the listed rows and columns, in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<SparseMatrix> {
        let mut map = vec![usize::MAX; self.cols];
        for (j, &c) in cols.iter().enumerate() {
            if c >= self.cols {
                return Err(Error::dims(format!("column {c} out of range")));
            }
            map[c] = j;
        }
        let mut b = RowBuilder::new(rows.len(), cols.len(), self.field);
        for &r in rows {
            if r >= self.rows {
                return Err(Error::dims(format!("row {r} out of range")));
            }
            let (cs, vs) = self.row(r);
            let mut picked: Vec<(usize, FieldElement)> = cs
                .iter()
                .zip(vs)
                .filter(|(c, _)| map[**c] != usize::MAX)
                .map(|(c, v)| (map[*c], v.clone()))
                .collect();
            picked.sort_by_key(|x| x.0);
            for (c, v) in picked {
                b.push(c, v);
            }
            b.end_row();
        }
        Ok(b.finish())
    }

    /// `[m_1 | m_2 | …]`.
    pub fn hstack(blocks: &[SparseMatrix]) -> Result<SparseMatrix> {
        let first = blocks.first().ok_or_else(|| Error::invalid("empty block list"))?;
        let rows = first.rows;
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut cols = 0;
        for m in blocks {
            check_field(first.field, m.field)?;
            if m.rows != rows {
                return Err(Error::dims("hstack row counts differ"));
            }
            offsets.push(cols);
            cols += m.cols;
        }
        let mut b = RowBuilder::new(rows, cols, first.field);
        b.reserve(blocks.iter().map(|m| m.nnz()).sum());
        for r in 0..rows {
            for (m, off) in blocks.iter().zip(&offsets) {
                let (cs, vs) = m.row(r);
                for (c, v) in cs.iter().zip(vs) {
                    b.push(c + off, v.clone());
                }
            }
            b.end_row();
        }
        Ok(b.finish())
    }

    /// `[m_1; m_2; …]`.
    pub fn vstack(blocks: &[SparseMatrix]) -> Result<SparseMatrix> {
        let first = blocks.first().ok_or_else(|| Error::invalid("empty block list"))?;
        let cols = first.cols;
        let mut rows = 0;
        for m in blocks {
            check_field(first.field, m.field)?;
            if m.cols != cols {
                return Err(Error::dims("vstack column counts differ"));
            }
            rows += m.rows;
        }
        let mut b = RowBuilder::new(rows, cols, first.field);
        b.reserve(blocks.iter().map(|m| m.nnz()).sum());
        for m in blocks {
            for r in 0..m.rows {
                let (cs, vs) = m.row(r);
                for (c, v) in cs.iter().zip(vs) {
                    b.push(*c, v.clone());
                }
                b.end_row();
            }
        }
        Ok(b.finish())
    }
}

/// `m^{⊗n} · x` without materializing the power, one digit at a time.
pub fn kron_power_apply(m: &SparseMatrix, n: usize, x: &[FieldElement]) -> Result<Vec<FieldElement>> {
    if !m.is_square() {
        return Err(Error::dims("base must be square"));
    }
    let q = m.rows();
    let len = q.checked_pow(n as u32).ok_or_else(|| Error::cap("q^n overflows"))?;
    if x.len() != len {
        return Err(Error::dims(format!("vector of length {} for dimension {len}", x.len())));
    }
    if let Some(v) = x.first() {
        check_field(m.field(), v.field())?;
    }
    let field = m.field();
    let mut cur = x.to_vec();
    let mut stride = 1;
    for _ in 0..n {
        let block = stride * q;
        let mut next = vec![field.zero(); len];
        next.par_chunks_mut(block).zip(cur.par_chunks(block)).for_each(|(out, inp)| {
            for low in 0..stride {
                for xi in 0..q {
                    let (cs, vs) = m.row(xi);
                    let mut acc = field.zero();
                    for (yi, v) in cs.iter().zip(vs) {
                        acc = &acc + &(v * &inp[low + yi * stride]);
                    }
                    out[low + xi * stride] = acc;
                }
            }
        });
        cur = next;
        stride = block;
    }
    Ok(cur)
}

pub(crate) fn check_field(a: FieldSpec, b: FieldSpec) -> Result<()> {
    if a != b {
        return Err(Error::FieldMismatch { left: a, right: b });
    }
    Ok(())
}

impl fmt::Debug for SparseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SparseMatrix {}x{} over {} ({} nnz)", self.rows, self.cols, self.field, self.nnz())?;
        if self.rows <= 16 && self.cols <= 16 {
            for row in self.to_dense() {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(f, "  [{}]", cells.join(" "))?;
            }
        }
        Ok(())
    }
}
