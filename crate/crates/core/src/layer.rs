//! One affine map `z ↦ A z + b` with its architecture masks.

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct AffineLayer {
    rows: usize,
    cols: usize,
    weights: Vec<C64>,
    bias: Vec<C64>,
    weight_mask: Vec<bool>,
    bias_mask: Vec<bool>,
    // CSR view of the nonzero weights, used by the evaluators.
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<C64>,
}

fn check_finite(v: &[C64], what: &str) -> Result<()> {
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

impl AffineLayer {
    /// Builds a layer whose masks mark exactly the nonzero entries.
    pub fn new(rows: usize, cols: usize, weights: Vec<C64>, bias: Vec<C64>) -> Result<Self> {
        let weight_mask = weights.iter().map(|w| *w != C64::new(0.0, 0.0)).collect();
        let bias_mask = bias.iter().map(|b| *b != C64::new(0.0, 0.0)).collect();
        Self::with_masks(rows, cols, weights, bias, weight_mask, bias_mask)
    }

    /// Builds a layer with explicit masks; masked-out entries must be exactly zero.
    pub fn with_masks(
        rows: usize,
        cols: usize,
        weights: Vec<C64>,
        bias: Vec<C64>,
        weight_mask: Vec<bool>,
        bias_mask: Vec<bool>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("layer with zero rows or columns".into()));
        }
        if weights.len() != rows * cols || weight_mask.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "weight matrix must have {rows}x{cols} entries"
            )));
        }
        if bias.len() != rows || bias_mask.len() != rows {
            return Err(Error::Dimension(format!("bias must have {rows} entries")));
        }
        check_finite(&weights, "layer weights")?;
        check_finite(&bias, "layer bias")?;
        let zero = C64::new(0.0, 0.0);
        if weights.iter().zip(&weight_mask).any(|(w, m)| !m && *w != zero)
            || bias.iter().zip(&bias_mask).any(|(b, m)| !m && *b != zero)
        {
            return Err(Error::Dimension(
                "nonzero entry outside the architecture mask".into(),
            ));
        }
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in 0..rows {
            for c in 0..cols {
                let w = weights[r * cols + c];
                if w != zero {
                    col_idx.push(c);
                    vals.push(w);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self { rows, cols, weights, bias, weight_mask, bias_mask, row_ptr, col_idx, vals })
    }

    /// Builds a layer from dense rows.
    pub fn from_rows(rows: &[Vec<C64>], bias: &[C64]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged weight rows".into()));
        }
        Self::new(r, c, rows.concat(), bias.to_vec())
    }

    /// Real-valued convenience constructor.
    pub fn from_real(rows: &[&[f64]], bias: &[f64]) -> Result<Self> {
        let rows: Vec<Vec<C64>> =
            rows.iter().map(|row| row.iter().map(|&x| C64::new(x, 0.0)).collect()).collect();
        let bias: Vec<C64> = bias.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_rows(&rows, &bias)
    }

    pub fn identity(n: usize) -> Self {
        let mut w = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            w[i * n + i] = C64::new(1.0, 0.0);
        }
        Self::new(n, n, w, vec![C64::new(0.0, 0.0); n]).expect("identity layer is well formed")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weight(&self, r: usize, c: usize) -> C64 {
        self.weights[r * self.cols + c]
    }

    pub fn weights(&self) -> &[C64] {
        &self.weights
    }

    pub fn bias(&self) -> &[C64] {
        &self.bias
    }

    pub fn weight_mask(&self) -> &[bool] {
        &self.weight_mask
    }

    pub fn bias_mask(&self) -> &[bool] {
        &self.bias_mask
    }

    /// Number of architecture entries (mask-allowed weights and biases).
    pub fn weight_count(&self) -> usize {
        self.weight_mask.iter().filter(|m| **m).count() + self.bias_mask.iter().filter(|m| **m).count()
    }

    pub fn max_abs(&self) -> f64 {
        self.weights.iter().chain(&self.bias).map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Nonzero entries of row `r` as `(column, value)` pairs.
    pub fn row_entries(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    /// `A x + b` in double precision.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                let mut acc = self.bias[r];
                for (c, w) in self.row_entries(r) {
                    acc += w * x[c];
                }
                acc
            })
            .collect()
    }

    /// Same layer with every weight and bias multiplied by `s` (masks kept).
    pub fn scaled_rows(&self, s: &[C64]) -> Self {
        let mut w = self.weights.clone();
        let mut b = self.bias.clone();
        for r in 0..self.rows {
            for c in 0..self.cols {
                w[r * self.cols + c] *= s[r];
            }
            b[r] *= s[r];
        }
        Self::with_masks(
            self.rows,
            self.cols,
            w,
            b,
            self.weight_mask.clone(),
            self.bias_mask.clone(),
        )
        .expect("scaling keeps shape")
    }
}
