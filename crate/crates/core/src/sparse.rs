//! Compressed-row storage for the self-adjoint operators of the crate.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::VertexFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Laplacian,
    Magnetic,
    Dirichlet,
    Schrodinger,
}

/// Links a finite operator to the infinite graph it truncates.
///
/// The operator is the ambient one with every vertex outside the truncation
/// removed (Dirichlet condition outside), which is what the leakage bounds of
/// the heat engine assume.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationInfo {
    pub valence_bound: usize,
    pub radius: usize,
    pub depth: Vec<u32>,
}

/// Sparse operator, self-adjoint for the inner product `sum_x w(x) conj(f(x)) g(x)`.
///
/// With unit weights (`weights == None`) this is an ordinary Hermitian
/// matrix. Quotient truncations carry orbit sizes as weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseHermitian {
    kind: OperatorKind,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    weights: Option<Vec<f64>>,
    truncation: Option<TruncationInfo>,
    root: usize,
}

impl SparseHermitian {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        dim: usize,
        kind: OperatorKind,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
        for (r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::domain(format!(
                    "entry ({r}, {c}) outside a {dim}x{dim} operator"
                )));
            }
            rows[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(SparseHermitian {
            kind,
            row_ptr,
            cols,
            vals,
            weights: None,
            truncation: None,
            root: 0,
        })
    }

    pub(crate) fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = Some(weights);
        self
    }

    pub(crate) fn with_truncation(mut self, info: TruncationInfo) -> Self {
        self.truncation = Some(info);
        self
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn weight(&self, v: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[v])
    }

    pub fn truncation(&self) -> Option<&TruncationInfo> {
        self.truncation.as_ref()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn max_row_nnz(&self) -> usize {
        self.row_ptr.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[span.clone()].binary_search(&j) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.entry(i, i).re
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    pub fn apply_fn(&self, f: &VertexFunction) -> VertexFunction {
        let mut out = VertexFunction::zeros(self.dim());
        self.apply(f.values(), out.values_mut());
        out
    }

    /// Largest violation of `w(i) a(i,j) = conj(w(j) a(j,i))`.
    pub fn self_adjoint_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim() {
            for (j, v) in self.row(i) {
                let d = v * self.weight(i) - (self.entry(j, i) * self.weight(j)).conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// True when every off-diagonal entry is real and nonpositive.
    pub fn has_nonpositive_offdiagonal(&self) -> bool {
        (0..self.dim()).all(|i| {
            self.row(i)
                .all(|(j, v)| j == i || (v.im == 0.0 && v.re <= 0.0))
        })
    }

    /// Same diagonal, off-diagonal entries replaced by `-|a(i,j)|`.
    ///
    /// For a magnetic operator this is the non-magnetic one on the same graph.
    pub fn comparison_operator(&self) -> SparseHermitian {
        let mut out = self.clone();
        for i in 0..self.dim() {
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                if out.cols[k] != i {
                    out.vals[k] = C64::new(-out.vals[k].norm(), 0.0);
                }
            }
        }
        out.kind = match self.kind {
            OperatorKind::Magnetic => OperatorKind::Laplacian,
            k => k,
        };
        out
    }

    /// Adds a real diagonal potential.
    pub fn plus_diagonal(&self, potential: &[f64]) -> Result<SparseHermitian> {
        if potential.len() != self.dim() {
            return Err(Error::domain("potential length does not match the operator"));
        }
        let triplets = (0..self.dim()).flat_map(|i| {
            self.row(i)
                .chain(std::iter::once((i, C64::new(potential[i], 0.0))))
                .map(move |(j, v)| (i, j, v))
                .collect::<Vec<_>>()
        });
        let mut out = Self::from_triplets(self.dim(), OperatorKind::Schrodinger, triplets)?;
        out.weights = self.weights.clone();
        out.truncation = self.truncation.clone();
        out.root = self.root;
        Ok(out)
    }

    /// Multiplies every entry by `c`.
    pub fn scaled(&self, c: f64) -> SparseHermitian {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Gershgorin enclosure `[lo, hi]` of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dim() {
            let d = self.diag(i);
            let off: f64 = self.row(i).filter(|e| e.0 != i).map(|e| e.1.norm()).sum();
            lo = lo.min(d - off);
            hi = hi.max(d + off);
        }
        (lo, hi)
    }

    /// Dense Hermitian matrix `W^{1/2} A W^{-1/2}`, unitarily similar to `A`.
    pub fn to_dense_symmetric(&self) -> DMatrix<C64> {
        let n = self.dim();
        let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        for i in 0..n {
            let wi = self.weight(i).sqrt();
            for (j, v) in self.row(i) {
                m[(i, j)] = v * wi / self.weight(j).sqrt();
            }
        }
        m
    }

    /// Coordinate-triplet text: one `row col re im` line per stored entry, 0-based.
    pub fn write_triplets(&self, mut out: impl Write) -> Result<()> {
        for i in 0..self.dim() {
            for (j, v) in self.row(i) {
                writeln!(out, "{i} {j} {:e} {:e}", v.re, v.im)?;
            }
        }
        Ok(())
    }

    /// Parses the format written by [`write_triplets`](Self::write_triplets).
    pub fn read_triplets(dim: usize, kind: OperatorKind, text: &str) -> Result<SparseHermitian> {
        let mut trip = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.is_empty() {
                continue;
            }
            let bad = || Error::domain(format!("line {}: expected `row col re im`", lineno + 1));
            if parts.len() != 4 {
                return Err(bad());
            }
            let r: usize = parts[0].parse().map_err(|_| bad())?;
            let c: usize = parts[1].parse().map_err(|_| bad())?;
            let re: f64 = parts[2].parse().map_err(|_| bad())?;
            let im: f64 = parts[3].parse().map_err(|_| bad())?;
            trip.push((r, c, C64::new(re, im)));
        }
        Self::from_triplets(dim, kind, trip)
    }
}
