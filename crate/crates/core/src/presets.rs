//! Named base matrices and decompositions.
//!
//! Base specs: `h<k>`, `r<k>`, `omega:<value>`, `file:<path.smx>`.
//! Decomposition specs: `onehot:<base>`, `rigidity:wh:<k>`,
//! `rigidity:kron2:<omega>:<k>`, `partition:auto`, `partition:r1-rows`,
//! `file:<path.json>`.

use std::path::{Path, PathBuf};

use crate::decomp::{self, Decomposition, FactorPair};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::matrix::SparseMatrix;
use crate::partition::{self, Objective, RectPartition};
use crate::rigidity;
use crate::smx;

pub fn h1(field: FieldSpec) -> SparseMatrix {
    SparseMatrix::from_i64_rows(field, &[&[1, 1], &[1, -1]]).expect("2x2")
}

pub fn r1(field: FieldSpec) -> SparseMatrix {
    SparseMatrix::from_i64_rows(field, &[&[1, 1], &[1, 0]]).expect("2x2")
}

/// `H_k = H_1^{⊗k}`.
pub fn h(k: usize, field: FieldSpec) -> SparseMatrix {
    h1(field).kron_power(k).expect("same field")
}

/// `R_k = R_1^{⊗k}`.
pub fn r(k: usize, field: FieldSpec) -> SparseMatrix {
    r1(field).kron_power(k).expect("same field")
}

/// `R_1 = e_0·[1 1] + e_1·[1 0]`.
pub fn r1_row_partition(field: FieldSpec) -> Decomposition {
    let u1 = SparseMatrix::from_i64_rows(field, &[&[1], &[0]]).unwrap();
    let v1 = SparseMatrix::from_i64_rows(field, &[&[1, 1]]).unwrap();
    let u2 = SparseMatrix::from_i64_rows(field, &[&[0], &[1]]).unwrap();
    let v2 = SparseMatrix::from_i64_rows(field, &[&[1, 0]]).unwrap();
    Decomposition::new(r1(field), vec![FactorPair::new(u1, v1).unwrap(), FactorPair::new(u2, v2).unwrap()]).unwrap()
}

fn parse_k(s: &str, what: &str) -> Result<usize> {
    s.parse::<usize>().ok().filter(|k| *k >= 1).ok_or_else(|| Error::parse(format!("bad {what} exponent '{s}'")))
}

pub fn parse_base(spec: &str, field: FieldSpec) -> Result<SparseMatrix> {
    if let Some(path) = spec.strip_prefix("file:") {
        return smx::read_smx(Path::new(path));
    }
    if let Some(v) = spec.strip_prefix("omega:") {
        return Ok(rigidity::omega_base(&field.parse(v)?));
    }
    if let Some(k) = spec.strip_prefix('h') {
        return Ok(h(parse_k(k, "Hadamard")?, field));
    }
    if let Some(k) = spec.strip_prefix('r') {
        return Ok(r(parse_k(k, "disjointness")?, field));
    }
    Err(Error::parse(format!("unknown base '{spec}'")))
}

/// Context for decomposition specs that depend on a base or a cache.
#[derive(Clone, Debug, Default)]
pub struct DecompContext {
    pub base: Option<SparseMatrix>,
    pub cache: Option<PathBuf>,
    pub max_parts: Option<usize>,
}

pub fn parse_decomp(spec: &str, field: FieldSpec, ctx: &DecompContext) -> Result<Decomposition> {
    if let Some(path) = spec.strip_prefix("file:") {
        return Decomposition::read(Path::new(path));
    }
    if let Some(b) = spec.strip_prefix("onehot:") {
        return decomp::gen_one_hot(&parse_base(b, field)?);
    }
    if let Some(rest) = spec.strip_prefix("rigidity:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let w = match parts.as_slice() {
            ["wh", k] => rigidity::rank1_construct_wh(parse_k(k, "Hadamard")?, field)?,
            ["kron2", omega, k] => rigidity::rank1_construct_kron2(&field.parse(omega)?, parse_k(k, "kron2")?)?,
            _ => return Err(Error::parse(format!("unknown rigidity decomposition '{spec}'"))),
        };
        return decomp::from_rigidity(&w);
    }
    match spec {
        "partition:r1-rows" => Ok(r1_row_partition(field)),
        "partition:auto" => {
            let base = ctx.base.clone().ok_or_else(|| Error::invalid("partition:auto needs --base"))?;
            let p = cached_partition(&base, ctx.max_parts.unwrap_or(8), ctx.cache.as_deref())?;
            decomp::from_partition(&p)
        }
        _ => Err(Error::parse(format!("unknown decomposition '{spec}'"))),
    }
}

/// Runs `partition_search`, reusing a stored result under `cache` when present.
pub fn cached_partition(base: &SparseMatrix, max_parts: usize, cache: Option<&Path>) -> Result<RectPartition> {
    let key = format!("partition-{:016x}-{max_parts}.json", fingerprint(&smx::to_smx(base)));
    if let Some(dir) = cache {
        let path = dir.join(&key);
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(p) = RectPartition::from_json(&text) {
                if p.base == *base {
                    return Ok(p);
                }
            }
        }
    }
    let p = partition::partition_search(base, max_parts, Objective::Alpha1)?;
    if let Some(dir) = cache {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(&key), p.to_json())?;
    }
    Ok(p)
}

/// FNV-1a.
fn fingerprint(s: &str) -> u64 {
    s.bytes().fold(0xcbf29ce484222325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q: FieldSpec = FieldSpec::Rational;

    #[test]
    fn bases() {
        assert_eq!(parse_base("h2", Q).unwrap(), h(2, Q));
        assert_eq!(parse_base("r3", Q).unwrap().nnz(), 27);
        assert_eq!(parse_base("omega:-1", Q).unwrap(), h1(Q));
        assert!(parse_base("h0", Q).is_err());
        assert!(parse_base("x3", Q).is_err());
    }

    #[test]
    fn decomps() {
        let ctx = DecompContext::default();
        assert!(parse_decomp("onehot:h1", Q, &ctx).unwrap().validate().unwrap());
        assert!(parse_decomp("rigidity:wh:2", Q, &ctx).unwrap().validate().unwrap());
        assert!(parse_decomp("rigidity:kron2:2:2", Q, &ctx).unwrap().validate().unwrap());
        assert!(parse_decomp("partition:auto", Q, &ctx).is_err());
        let ctx = DecompContext { base: Some(r(1, Q)), ..Default::default() };
        let d = parse_decomp("partition:auto", Q, &ctx).unwrap();
        assert_eq!(d.pairs.len(), 2);
        assert!(parse_decomp("rigidity:wh", Q, &ctx).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = cached_partition(&r(2, Q), 6, Some(dir.path())).unwrap();
        let b = cached_partition(&r(2, Q), 6, Some(dir.path())).unwrap();
        assert_eq!(a.rects, b.rects);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
