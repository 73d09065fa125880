//! Factor chains `F_0 × F_1 × … × F_{d−1}` and their on-disk form.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};
use crate::matrix::SparseMatrix;
use crate::smx;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CircuitMeta {
    pub source: String,
    pub per_layer: Vec<usize>,
    pub params: BTreeMap<String, serde_json::Value>,
}

/// Output side first: `target = factors[0] × factors[1] × …`.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub factors: Vec<SparseMatrix>,
    pub meta: CircuitMeta,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub depth: usize,
    pub dims: Vec<usize>,
    pub factors: Vec<String>,
    pub size: usize,
    pub per_layer: Vec<usize>,
    pub field: FieldSpec,
    pub source: String,
    pub params: BTreeMap<String, serde_json::Value>,
}

impl Circuit {
    pub fn new(factors: Vec<SparseMatrix>, source: impl Into<String>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::invalid("circuit needs at least one factor"));
        }
        for w in factors.windows(2) {
            if w[0].cols() != w[1].rows() {
                return Err(Error::dims(format!("factor chain breaks: {} cols vs {} rows", w[0].cols(), w[1].rows())));
            }
            crate::matrix::check_field(w[0].field(), w[1].field())?;
        }
        let per_layer = factors.iter().map(SparseMatrix::nnz).collect();
        Ok(Circuit { factors, meta: CircuitMeta { source: source.into(), per_layer, params: BTreeMap::new() } })
    }

    pub fn with_param(mut self, key: &str, value: impl Serialize) -> Self {
        self.meta.params.insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
        self
    }

    pub fn depth(&self) -> usize {
        self.factors.len()
    }

    pub fn field(&self) -> FieldSpec {
        self.factors[0].field()
    }

    pub fn rows(&self) -> usize {
        self.factors[0].rows()
    }

    pub fn cols(&self) -> usize {
        self.factors.last().unwrap().cols()
    }

    /// `[rows(F_0), cols(F_0), cols(F_1), …]`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.rows()).chain(self.factors.iter().map(SparseMatrix::cols)).collect()
    }

    /// Recomputed from the factors.
    pub fn per_layer(&self) -> Vec<usize> {
        self.factors.iter().map(SparseMatrix::nnz).collect()
    }

    pub fn size(&self) -> usize {
        self.per_layer().iter().sum()
    }

    /// The full product.
    pub fn product(&self) -> Result<SparseMatrix> {
        let mut acc = self.factors.last().unwrap().clone();
        for f in self.factors.iter().rev().skip(1) {
            acc = f.matmul(&acc)?;
        }
        Ok(acc)
    }

    /// `target · x`, innermost factor first.
    pub fn apply(&self, x: &[FieldElement]) -> Result<Vec<FieldElement>> {
        let mut v = x.to_vec();
        for f in self.factors.iter().rev() {
            v = f.apply(&v)?;
        }
        Ok(v)
    }

    /// Every factor reduced mod `p`.
    pub fn reduce_mod(&self, p: u64) -> Result<Circuit> {
        Ok(Circuit {
            factors: self.factors.iter().map(|f| f.reduce_mod(p)).collect::<Result<_>>()?,
            meta: self.meta.clone(),
        })
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            depth: self.depth(),
            dims: self.dims(),
            factors: (0..self.depth()).map(|i| format!("f{i}.smx")).collect(),
            size: self.size(),
            per_layer: self.per_layer(),
            field: self.field(),
            source: self.meta.source.clone(),
            params: self.meta.params.clone(),
        }
    }

    /// Writes `manifest.json` and one SMX file per factor.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let m = self.manifest();
        for (f, name) in self.factors.iter().zip(&m.factors) {
            smx::write_smx(&dir.join(name), f)?;
        }
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&m)?)?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Circuit> {
        let m: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
        if m.factors.len() != m.depth {
            return Err(Error::parse("manifest depth does not match factor list"));
        }
        let factors = m.factors.iter().map(|f| smx::read_smx(&dir.join(f))).collect::<Result<Vec<_>>>()?;
        let mut c = Circuit::new(factors, m.source)?;
        if c.dims() != m.dims {
            return Err(Error::parse("manifest dims do not match the factor files"));
        }
        c.meta.params = m.params;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    const Q: FieldSpec = FieldSpec::Rational;

    #[test]
    fn chain_checks() {
        let a = SparseMatrix::identity(2, Q);
        let b = SparseMatrix::identity(3, Q);
        assert!(Circuit::new(vec![a.clone(), b], "x").is_err());
        assert!(Circuit::new(vec![], "x").is_err());
        let c = Circuit::new(vec![presets::h1(Q), a], "x").unwrap();
        assert_eq!(c.dims(), vec![2, 2, 2]);
        assert_eq!(c.size(), 6);
    }

    #[test]
    fn dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = Circuit::new(vec![presets::h1(Q), presets::r1(Q)], "test").unwrap().with_param("n", 1);
        c.write_dir(dir.path()).unwrap();
        let back = Circuit::read_dir(dir.path()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.product().unwrap(), presets::h1(Q).matmul(&presets::r1(Q)).unwrap());
    }
}
