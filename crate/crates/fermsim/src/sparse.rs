//! Column-compressed sparse complex operators for the 11-12 mode range.

use crate::linalg::{cr, CMat, CVec, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    cols: Vec<Vec<(usize, C64)>>,
}

const DROP: f64 = 1e-300;

impl SparseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, cols: vec![Vec::new(); dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, cols: (0..dim).map(|j| vec![(j, cr(1.0))]).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    /// Build from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut cols = vec![Vec::new(); dim];
        for (r, c, v) in triplets {
            cols[c].push((r, v));
        }
        let mut s = Self { dim, cols };
        s.compress();
        s
    }

    pub fn from_dense(m: &CMat) -> Self {
        let dim = m.nrows();
        Self::from_triplets(
            dim,
            (0..dim).flat_map(|c| (0..dim).map(move |r| (r, c))).filter_map(|(r, c)| {
                let v = m[(r, c)];
                (v.norm() > DROP).then_some((r, c, v))
            }),
        )
    }

    fn compress(&mut self) {
        for col in &mut self.cols {
            col.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, C64)> = Vec::with_capacity(col.len());
            for &(r, v) in col.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == r => last.1 += v,
                    _ => merged.push((r, v)),
                }
            }
            merged.retain(|e| e.1.norm() > DROP);
            *col = merged;
        }
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (c, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                m[(r, c)] += v;
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.dim,
            self.cols.iter().enumerate().flat_map(|(c, col)| col.iter().map(move |&(r, v)| (c, r, v.conj()))),
        )
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            cols: self.cols.iter().map(|col| col.iter().map(|&(r, v)| (r, v * s)).collect()).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut cols = self.cols.clone();
        for (c, col) in other.cols.iter().enumerate() {
            cols[c].extend_from_slice(col);
        }
        let mut s = Self { dim: self.dim, cols };
        s.compress();
        s
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(cr(-1.0)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut cols = vec![Vec::new(); self.dim];
        for (j, bcol) in other.cols.iter().enumerate() {
            for &(k, bv) in bcol {
                for &(i, av) in &self.cols[k] {
                    cols[j].push((i, av * bv));
                }
            }
        }
        let mut s = Self { dim: self.dim, cols };
        s.compress();
        s
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        self.mul(other).add(&other.mul(self))
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        let mut out = CVec::zeros(self.dim);
        for (c, col) in self.cols.iter().enumerate() {
            let x = v[c];
            if x == cr(0.0) {
                continue;
            }
            for &(r, a) in col {
                out[r] += a * x;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.cols.iter().flatten().fold(0.0, |m, e| m.max(e.1.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }
}
