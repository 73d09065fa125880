//! Partitions of the 1-entries of a 0/1 matrix into all-ones rectangles.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::matrix::SparseMatrix;
use crate::smx::InlineMatrix;

pub const MAX_DIM: usize = 16;
pub const MAX_CELLS: usize = 32;
pub const DEFAULT_MEMO_CAP: usize = 1 << 22;
const TIE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl Rect {
    pub fn area(&self) -> usize {
        self.rows.len() * self.cols.len()
    }

    pub fn weight(&self) -> f64 {
        (self.area() as f64).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct RectPartition {
    pub base: SparseMatrix,
    pub rects: Vec<Rect>,
}

impl RectPartition {
    /// `Σ_j √(|rows_j|·|cols_j|)`.
    pub fn objective(&self) -> f64 {
        self.rects.iter().map(Rect::weight).sum()
    }

    /// Disjoint, covering, all-ones.
    pub fn validate(&self) -> Result<bool> {
        check_01(&self.base)?;
        let mut seen = vec![vec![false; self.base.cols()]; self.base.rows()];
        for r in &self.rects {
            if r.rows.is_empty() || r.cols.is_empty() {
                return Ok(false);
            }
            for &i in &r.rows {
                for &j in &r.cols {
                    if i >= self.base.rows() || j >= self.base.cols() || seen[i][j] || self.base.get(i, j).is_zero() {
                        return Ok(false);
                    }
                    seen[i][j] = true;
                }
            }
        }
        Ok(self.base.entries().all(|(i, j, _)| seen[i][j]))
    }

    pub fn to_file(&self) -> PartitionFile {
        PartitionFile { field: self.base.field(), base: InlineMatrix::from_matrix(&self.base), rects: self.rects.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: PartitionFile = serde_json::from_str(text)?;
        let p = RectPartition { base: f.base.to_matrix(f.field)?, rects: f.rects };
        if !p.validate()? {
            return Err(Error::invalid("partition does not cover the base exactly"));
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionFile {
    pub field: FieldSpec,
    pub base: InlineMatrix,
    pub rects: Vec<Rect>,
}

fn check_01(base: &SparseMatrix) -> Result<()> {
    if base.entries().any(|(_, _, v)| !v.is_one()) {
        return Err(Error::invalid("matrix entries must be 0 or 1"));
    }
    Ok(())
}

fn row_masks(base: &SparseMatrix) -> Result<Vec<u32>> {
    check_01(base)?;
    if base.rows() > MAX_DIM || base.cols() > MAX_DIM {
        return Err(Error::cap(format!("partition search supports at most {MAX_DIM}x{MAX_DIM}")));
    }
    Ok((0..base.rows()).map(|r| base.row(r).0.iter().fold(0u32, |m, c| m | (1 << c))).collect())
}

fn bits(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask >> i & 1 == 1).collect()
}

/// All maximal all-ones rectangles, sorted by `(rows, cols)`.
pub fn enumerate_rectangles(base: &SparseMatrix) -> Result<Vec<Rect>> {
    let rows = row_masks(base)?;
    let ncols = base.cols();
    let mut out = Vec::new();
    for cset in 1u32..(1 << ncols) {
        let rset: u32 = rows.iter().enumerate().filter(|(_, m)| **m & cset == cset).fold(0, |acc, (i, _)| acc | 1 << i);
        if rset == 0 {
            continue;
        }
        let closure = bits(rset).iter().fold((1u32 << ncols) - 1, |acc, r| acc & rows[*r]);
        if closure == cset {
            out.push(Rect { rows: bits(rset), cols: bits(cset) });
        }
    }
    out.sort();
    Ok(out)
}

/// Every all-ones rectangle (not necessarily maximal).
fn all_rectangles(rows: &[u32], ncols: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for cset in 1u32..(1 << ncols) {
        let rset: u32 = rows.iter().enumerate().filter(|(_, m)| **m & cset == cset).fold(0, |acc, (i, _)| acc | 1 << i);
        let mut sub = rset;
        while sub != 0 {
            out.push((sub, cset));
            sub = (sub - 1) & rset;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Alpha1,
}

#[derive(Clone, Debug)]
pub struct SearchStats {
    pub nodes: u64,
    pub memo_states: usize,
}

struct Search<'a> {
    cand_by_cell: Vec<Vec<(u32, f64)>>,
    cell_lb: Vec<f64>,
    max_parts: usize,
    memo: HashMap<u32, Vec<(f64, usize)>>,
    memo_cap: usize,
    memo_size: usize,
    best: Option<(f64, Vec<u32>)>,
    stack: Vec<u32>,
    nodes: u64,
    canon: &'a dyn Fn(&[u32]) -> Vec<Rect>,
}

impl Search<'_> {
    fn lower_bound(&self, uncovered: u32) -> f64 {
        let mut m = uncovered;
        let mut lb = 0.0;
        while m != 0 {
            let c = m.trailing_zeros() as usize;
            lb += self.cell_lb[c];
            m &= m - 1;
        }
        lb
    }

    fn better(&self, cost: f64, sol: &[u32]) -> bool {
        match &self.best {
            None => true,
            Some((b, bs)) => {
                if cost < b - TIE {
                    return true;
                }
                if cost > b + TIE {
                    return false;
                }
                match sol.len().cmp(&bs.len()) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => (self.canon)(sol) < (self.canon)(bs),
                }
            }
        }
    }

    /// True when an earlier visit of `uncovered` already had no more cost and parts.
    fn dominated(&mut self, uncovered: u32, cost: f64, parts: usize) -> bool {
        if let Some(list) = self.memo.get_mut(&uncovered) {
            if list.iter().any(|(c, p)| *c < cost - TIE && *p <= parts || (*c <= cost + TIE && *p < parts)) {
                return true;
            }
            list.retain(|(c, p)| !(cost < *c - TIE && parts <= *p));
            list.push((cost, parts));
            return false;
        }
        if self.memo_size < self.memo_cap {
            self.memo.insert(uncovered, vec![(cost, parts)]);
            self.memo_size += 1;
        }
        false
    }

    fn run(&mut self, uncovered: u32, cost: f64) {
        self.nodes += 1;
        if uncovered == 0 {
            if self.better(cost, &self.stack.clone()) {
                self.best = Some((cost, self.stack.clone()));
            }
            return;
        }
        if self.stack.len() >= self.max_parts {
            return;
        }
        if let Some((b, _)) = &self.best {
            if cost + self.lower_bound(uncovered) > b + TIE {
                return;
            }
        }
        if self.dominated(uncovered, cost, self.stack.len()) {
            return;
        }
        let cell = uncovered.trailing_zeros() as usize;
        for i in 0..self.cand_by_cell[cell].len() {
            let (mask, w) = self.cand_by_cell[cell][i];
            if mask & !uncovered != 0 {
                continue;
            }
            self.stack.push(mask);
            self.run(uncovered & !mask, cost + w);
            self.stack.pop();
        }
    }
}

/// Minimum-`Σ√area` exact partition with at most `max_parts` rectangles.
/// Ties (within 1e-9) prefer fewer parts, then the lexicographically
/// smallest sorted rectangle list.
pub fn partition_search(base: &SparseMatrix, max_parts: usize, objective: Objective) -> Result<RectPartition> {
    partition_search_with(base, max_parts, objective, DEFAULT_MEMO_CAP).map(|(p, _)| p)
}

pub fn partition_search_with(
    base: &SparseMatrix,
    max_parts: usize,
    _objective: Objective,
    memo_cap: usize,
) -> Result<(RectPartition, SearchStats)> {
    let rows = row_masks(base)?;
    let cells: Vec<(usize, usize)> = base.entries().map(|(r, c, _)| (r, c)).collect();
    if cells.len() > MAX_CELLS {
        return Err(Error::cap(format!("partition search supports at most {MAX_CELLS} ones")));
    }
    if cells.is_empty() {
        return Ok((RectPartition { base: base.clone(), rects: vec![] }, SearchStats { nodes: 0, memo_states: 0 }));
    }
    let cell_index: HashMap<(usize, usize), usize> = cells.iter().enumerate().map(|(i, rc)| (*rc, i)).collect();
    let to_cells = |rset: u32, cset: u32| -> u32 {
        let mut m = 0;
        for r in bits(rset) {
            for c in bits(cset) {
                m |= 1 << cell_index[&(r, c)];
            }
        }
        m
    };
    let rects: Vec<(u32, u32, u32)> =
        all_rectangles(&rows, base.cols()).into_iter().map(|(r, c)| (to_cells(r, c), r, c)).collect();
    let by_mask: HashMap<u32, (u32, u32)> = rects.iter().map(|(m, r, c)| (*m, (*r, *c))).collect();
    let mut cand_by_cell = vec![Vec::new(); cells.len()];
    let mut max_area = vec![0u32; cells.len()];
    for (m, _, _) in &rects {
        let area = m.count_ones();
        for c in bits(*m) {
            cand_by_cell[c].push((*m, (area as f64).sqrt()));
            max_area[c] = max_area[c].max(area);
        }
    }
    for list in cand_by_cell.iter_mut() {
        list.sort_by(|a, b| b.0.count_ones().cmp(&a.0.count_ones()).then(a.0.cmp(&b.0)));
        list.dedup();
    }
    let canon = |sol: &[u32]| -> Vec<Rect> {
        let mut v: Vec<Rect> = sol
            .iter()
            .map(|m| {
                let (r, c) = by_mask[m];
                Rect { rows: bits(r), cols: bits(c) }
            })
            .collect();
        v.sort();
        v
    };
    let mut s = Search {
        cell_lb: max_area.iter().map(|a| 1.0 / (*a as f64).sqrt()).collect(),
        cand_by_cell,
        max_parts,
        memo: HashMap::new(),
        memo_cap,
        memo_size: 0,
        best: None,
        stack: Vec::new(),
        nodes: 0,
        canon: &canon,
    };
    let full = if cells.len() == 32 { u32::MAX } else { (1u32 << cells.len()) - 1 };
    s.run(full, 0.0);
    let stats = SearchStats { nodes: s.nodes, memo_states: s.memo_size };
    match s.best {
        Some((_, sol)) => Ok((RectPartition { base: base.clone(), rects: canon(&sol) }, stats)),
        None => Err(Error::invalid(format!("no partition into at most {max_parts} rectangles"))),
    }
}

/// `(s_n, r_n)`: side-length sums of the squares and short sides of the
/// `2s×s` rectangles in the inductive partition of `R_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsState {
    pub s: u128,
    pub r: u128,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsReport {
    pub n: usize,
    pub state: JsState,
    /// `2(s + r)`
    pub size_bound: u128,
    /// `2s + 3r`: a square contributes `s + s` wires, a rectangle `2s + s`.
    pub exact_wires: u128,
}

pub fn js_recurrence(n: usize) -> Result<JsReport> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let mut st = JsState { s: 1, r: 1 };
    for _ in 1..n {
        st = JsState { s: st.s + 2 * st.r, r: st.s + st.r };
    }
    Ok(JsReport { n, state: st, size_bound: 2 * (st.s + st.r), exact_wires: 2 * st.s + 3 * st.r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    const Q: FieldSpec = FieldSpec::Rational;

    fn m(rows: &[&[i64]]) -> SparseMatrix {
        SparseMatrix::from_i64_rows(Q, rows).unwrap()
    }

    #[test]
    fn maximal_rectangles() {
        assert_eq!(enumerate_rectangles(&m(&[&[1, 0], &[0, 1]])).unwrap().len(), 2);
        let r1 = enumerate_rectangles(&presets::r(1, Q)).unwrap();
        assert_eq!(
            r1,
            vec![Rect { rows: vec![0], cols: vec![0, 1] }, Rect { rows: vec![0, 1], cols: vec![0] }]
        );
        assert_eq!(enumerate_rectangles(&m(&[&[1, 1], &[1, 1]])).unwrap().len(), 1);
        assert!(enumerate_rectangles(&m(&[&[2, 1], &[1, 1]])).is_err());
    }

    #[test]
    fn r1_search() {
        let p = partition_search(&presets::r(1, Q), 2, Objective::Alpha1).unwrap();
        assert!((p.objective() - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!(p.validate().unwrap());
        assert_eq!(p.rects[0], Rect { rows: vec![0], cols: vec![0, 1] });
    }

    #[test]
    fn infeasible_budget() {
        assert!(partition_search(&SparseMatrix::identity(2, Q), 1, Objective::Alpha1).is_err());
    }

    /// Brute force over all exact covers of a small matrix.
    fn brute(base: &SparseMatrix, max_parts: usize) -> f64 {
        let rows = row_masks(base).unwrap();
        let cells: Vec<(usize, usize)> = base.entries().map(|(r, c, _)| (r, c)).collect();
        let rects: Vec<(u32, f64)> = all_rectangles(&rows, base.cols())
            .into_iter()
            .map(|(rs, cs)| {
                let mut mask = 0u32;
                for (i, (r, c)) in cells.iter().enumerate() {
                    if rs >> r & 1 == 1 && cs >> c & 1 == 1 {
                        mask |= 1 << i;
                    }
                }
                (mask, ((rs.count_ones() * cs.count_ones()) as f64).sqrt())
            })
            .collect();
        fn go(unc: u32, parts: usize, rects: &[(u32, f64)]) -> f64 {
            if unc == 0 {
                return 0.0;
            }
            if parts == 0 {
                return f64::INFINITY;
            }
            let cell = unc.trailing_zeros();
            rects
                .iter()
                .filter(|(m, _)| m >> cell & 1 == 1 && m & !unc == 0)
                .map(|(m, w)| w + go(unc & !m, parts - 1, rects))
                .fold(f64::INFINITY, f64::min)
        }
        go((1u32 << cells.len()) - 1, max_parts, &rects)
    }

    #[test]
    fn matches_brute_force_on_r2() {
        let r2 = presets::r(2, Q);
        for parts in 4..=6 {
            let p = partition_search(&r2, parts, Objective::Alpha1).unwrap();
            assert!(p.validate().unwrap());
            assert!(p.rects.len() <= parts);
            assert!((p.objective() - brute(&r2, parts)).abs() < 1e-9);
            assert!(p.objective() >= (r2.nnz() as f64).sqrt());
        }
    }

    #[test]
    fn js_values() {
        assert_eq!(js_recurrence(1).unwrap().state, JsState { s: 1, r: 1 });
        assert_eq!(js_recurrence(2).unwrap().state, JsState { s: 3, r: 2 });
        assert_eq!(js_recurrence(4).unwrap().state, JsState { s: 17, r: 12 });
        let a = js_recurrence(19).unwrap().state;
        let b = js_recurrence(20).unwrap().state;
        let ratio = (b.s + b.r) as f64 / (a.s + a.r) as f64;
        assert!((ratio - (1.0 + 2f64.sqrt())).abs() < 1e-3);
    }

    #[test]
    fn json_round_trip() {
        let p = partition_search(&presets::r(1, Q), 2, Objective::Alpha1).unwrap();
        let back = RectPartition::from_json(&p.to_json()).unwrap();
        assert_eq!(back.rects, p.rects);
    }
}
