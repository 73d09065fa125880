//! SMX text format and its inline JSON form.
//!
//! ```text
//! SMX 2 2 3 Q
//! 0 0 1
//! 0 1 1
//! 1 0 1
//! ```

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::matrix::SparseMatrix;

pub fn to_smx(m: &SparseMatrix) -> String {
    let mut out = String::with_capacity(16 * (m.nnz() + 1));
    let _ = writeln!(out, "SMX {} {} {} {}", m.rows(), m.cols(), m.nnz(), m.field().tag());
    for (r, c, v) in m.entries() {
        let _ = writeln!(out, "{r} {c} {v}");
    }
    out
}

pub fn from_smx(text: &str) -> Result<SparseMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::parse("empty SMX input"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 5 || h[0] != "SMX" {
        return Err(Error::parse(format!("bad SMX header `{header}`")));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| Error::parse(format!("bad integer `{s}`")));
    let (rows, cols, nnz) = (num(h[1])?, num(h[2])?, num(h[3])?);
    let field = FieldSpec::from_tag(h[4])?;
    let mut triplets = Vec::with_capacity(nnz);
    let mut last: Option<(usize, usize)> = None;
    for line in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::parse(format!("bad SMX entry `{line}`")));
        }
        let (r, c) = (num(parts[0])?, num(parts[1])?);
        if last.is_some_and(|p| p >= (r, c)) {
            return Err(Error::parse(format!("SMX entries out of order at `{line}`")));
        }
        last = Some((r, c));
        let v = field.parse(parts[2])?;
        if v.is_zero() {
            return Err(Error::parse(format!("explicit zero at `{line}`")));
        }
        triplets.push((r, c, v));
    }
    if triplets.len() != nnz {
        return Err(Error::parse(format!("header says {nnz} entries, found {}", triplets.len())));
    }
    SparseMatrix::from_triplets(rows, cols, field, triplets)
}

pub fn read_smx(path: &Path) -> Result<SparseMatrix> {
    from_smx(&std::fs::read_to_string(path)?)
}

pub fn write_smx(path: &Path, m: &SparseMatrix) -> Result<()> {
    std::fs::write(path, to_smx(m))?;
    Ok(())
}

/// `{"rows":., "cols":., "entries":[[r,c,"val"],...]}`; the field is carried
/// by the enclosing document.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct InlineMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, String)>,
}

impl InlineMatrix {
    pub fn from_matrix(m: &SparseMatrix) -> Self {
        InlineMatrix {
            rows: m.rows(),
            cols: m.cols(),
            entries: m.entries().map(|(r, c, v)| (r, c, v.to_string())).collect(),
        }
    }

    pub fn to_matrix(&self, field: FieldSpec) -> Result<SparseMatrix> {
        let triplets = self
            .entries
            .iter()
            .map(|(r, c, v)| Ok((*r, *c, field.parse(v)?)))
            .collect::<Result<Vec<_>>>()?;
        SparseMatrix::from_triplets(self.rows, self.cols, field, triplets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_entries() {
        let m = SparseMatrix::from_i64_rows(FieldSpec::Rational, &[&[1, 1], &[1, 0]]).unwrap();
        let text = to_smx(&m);
        assert_eq!(text, "SMX 2 2 3 Q\n0 0 1\n0 1 1\n1 0 1\n");
        assert_eq!(from_smx(&text).unwrap(), m);
    }

    #[test]
    fn rejects_malformed() {
        assert!(from_smx("SMX 2 2 1 Q\n").is_err());
        assert!(from_smx("SMX 2 2 2 Q\n1 0 1\n0 0 1\n").is_err());
        assert!(from_smx("SMX 2 2 1 GF4\n0 0 1\n").is_err());
        assert!(from_smx("SMX 2 2 1 Q\n0 0 0\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip(entries in prop::collection::vec((0usize..5, 0usize..4, -20i64..20, 1i64..9), 0..12),
                      prime in prop::bool::ANY) {
            let field = if prime { FieldSpec::prime(101).unwrap() } else { FieldSpec::Rational };
            let t = entries
                .into_iter()
                .map(|(r, c, n, d)| (r, c, field.parse(&format!("{n}/{d}")).unwrap()))
                .collect();
            let m = SparseMatrix::from_triplets(5, 4, field, t).unwrap();
            prop_assert_eq!(from_smx(&to_smx(&m)).unwrap(), m.clone());
            let inline = InlineMatrix::from_matrix(&m);
            let json = serde_json::to_string(&inline).unwrap();
            let back: InlineMatrix = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(back.to_matrix(field).unwrap(), m);
        }
    }
}
