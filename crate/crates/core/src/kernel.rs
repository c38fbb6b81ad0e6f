//! Gaussian kernel, Gram matrices and bandwidth selection.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Gaussian kernel `exp(-(x - y)^2 / (2 * bandwidth_sq))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    bandwidth_sq: f64,
}

impl KernelConfig {
    pub fn new(bandwidth_sq: f64) -> Result<Self> {
        if !(bandwidth_sq.is_finite() && bandwidth_sq > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "kernel bandwidth_sq must be positive and finite, got {bandwidth_sq}"
            )));
        }
        Ok(KernelConfig { bandwidth_sq })
    }

    pub fn bandwidth_sq(&self) -> f64 {
        self.bandwidth_sq
    }

    #[inline]
    pub(crate) fn eval(&self, x: f64, y: f64) -> f64 {
        let d = x - y;
        libm::exp(-d * d / (2.0 * self.bandwidth_sq))
    }
}

pub fn gaussian_kernel(x: f64, y: f64, cfg: KernelConfig) -> Result<f64> {
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::InvalidData(format!(
            "kernel arguments must be finite, got ({x}, {y})"
        )));
    }
    Ok(cfg.eval(x, y))
}

/// Where the rows or columns of a [`GramMatrix`] come from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GramSource {
    pub dataset: String,
    pub variables: Vec<String>,
}

/// Dense row-major kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    pub row_source: Option<GramSource>,
    pub col_source: Option<GramSource>,
}

impl GramMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for s in 0..rows {
            for t in 0..cols {
                entries.push(f(s, t));
            }
        }
        GramMatrix {
            rows,
            cols,
            entries,
            row_source: None,
            col_source: None,
        }
    }

    pub fn with_sources(mut self, rows: GramSource, cols: GramSource) -> Self {
        self.row_source = Some(rows);
        self.col_source = Some(cols);
        self
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.entries[s * self.cols + t]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.entries[s * self.cols..(s + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|s| (0..s).all(|t| (self.get(s, t) - self.get(t, s)).abs() <= tol))
    }

    /// `u^T K v`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        u.iter()
            .enumerate()
            .filter(|(_, us)| **us != 0.0)
            .map(|(s, us)| us * dot(self.row(s), v))
            .sum()
    }

    /// `K v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|s| dot(self.row(s), v)).collect()
    }

    /// Mean of each row.
    pub fn row_means(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|s| self.row(s).iter().sum::<f64>() / self.cols as f64)
            .collect()
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().sum()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators so the loop vectorizes without fast-math
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for k in 0..4 {
            acc[k] += a[4 * c + k] * b[4 * c + k];
        }
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn check_column(col: &[f64], what: &str) -> Result<()> {
    if col.is_empty() {
        return Err(Error::InvalidData(format!("{what} column is empty")));
    }
    if let Some(k) = col.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidData(format!(
            "{what} column has a non-finite value at index {k}"
        )));
    }
    Ok(())
}

/// Gram matrix with entry `(s, t) = k(col_a[s], col_b[t])`.
pub fn gram(col_a: &[f64], col_b: &[f64], cfg: KernelConfig) -> Result<GramMatrix> {
    check_column(col_a, "row")?;
    check_column(col_b, "column")?;
    Ok(gram_unchecked(col_a, col_b, cfg))
}

pub(crate) fn gram_unchecked(col_a: &[f64], col_b: &[f64], cfg: KernelConfig) -> GramMatrix {
    if core::ptr::eq(col_a, col_b) {
        // exact symmetry and unit diagonal
        let n = col_a.len();
        let mut g = GramMatrix::from_fn(n, n, |_, _| 0.0);
        for s in 0..n {
            g.entries[s * n + s] = 1.0;
            for t in 0..s {
                let v = cfg.eval(col_a[s], col_a[t]);
                g.entries[s * n + t] = v;
                g.entries[t * n + s] = v;
            }
        }
        g
    } else {
        GramMatrix::from_fn(col_a.len(), col_b.len(), |s, t| cfg.eval(col_a[s], col_b[t]))
    }
}

/// Entrywise product of same-shaped Gram matrices (the product kernel on joint
/// variables).
pub fn hadamard_gram(grams: &[GramMatrix]) -> Result<GramMatrix> {
    let (first, rest) = grams
        .split_first()
        .ok_or_else(|| Error::InvalidData("hadamard_gram needs at least one matrix".into()))?;
    let mut out = first.clone();
    for g in rest {
        hadamard_in_place(&mut out, g)?;
    }
    Ok(out)
}

pub(crate) fn hadamard_in_place(acc: &mut GramMatrix, g: &GramMatrix) -> Result<()> {
    if g.shape() != acc.shape() {
        return Err(Error::ShapeMismatch {
            expected: acc.shape(),
            found: g.shape(),
        });
    }
    for (a, b) in acc.entries.iter_mut().zip(&g.entries) {
        *a *= b;
    }
    acc.row_source = None;
    acc.col_source = None;
    Ok(())
}

/// Maximum number of points the median heuristic looks at.
pub const MEDIAN_HEURISTIC_CAP: usize = 1000;

/// Median of the squared pairwise differences over a strided subsample of at
/// most [`MEDIAN_HEURISTIC_CAP`] points.
pub fn median_heuristic(col: &[f64]) -> Result<KernelConfig> {
    check_column(col, "bandwidth")?;
    let stride = col.len().div_ceil(MEDIAN_HEURISTIC_CAP);
    let sub: Vec<f64> = col.iter().step_by(stride).copied().collect();
    let mut sq = Vec::with_capacity(sub.len() * sub.len().saturating_sub(1) / 2);
    for s in 0..sub.len() {
        for t in 0..s {
            let d = sub[s] - sub[t];
            sq.push(d * d);
        }
    }
    let median = median(&mut sq);
    if median.is_nan() || median <= 0.0 {
        return Err(Error::InvalidConfig(
            "median heuristic is degenerate (values are (nearly) all identical); pass an explicit bandwidth".into(),
        ));
    }
    KernelConfig::new(median)
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
