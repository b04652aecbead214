//! Sparse first/last layers used to compute fused architecture statistics
//! without materializing the flattened network.

use crate::layer::AffineLayer;
use crate::C64;

/// Mask-present entries of one affine layer in row-compressed form.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SparseLayer {
    pub rows: usize,
    pub cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub vals: Vec<C64>,
    pub bias: Vec<C64>,
    pub bias_mask: Vec<bool>,
}

impl SparseLayer {
    pub fn from_affine(l: &AffineLayer) -> Self {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        for r in 0..l.rows() {
            for c in 0..l.cols() {
                if l.weight_mask()[r * l.cols() + c] {
                    col_idx.push(c as u32);
                    vals.push(l.weight(r, c));
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows: l.rows(),
            cols: l.cols(),
            row_ptr,
            col_idx,
            vals,
            bias: l.bias().to_vec(),
            bias_mask: l.bias_mask().to_vec(),
        }
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[a..b].iter().map(|c| *c as usize).zip(self.vals[a..b].iter().copied())
    }

    pub fn weight_count(&self) -> usize {
        self.col_idx.len() + self.bias_mask.iter().filter(|m| **m).count()
    }

    pub fn max_abs(&self) -> f64 {
        let m = self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
        self.bias.iter().map(|v| v.norm()).fold(m, f64::max)
    }

    /// Block-diagonal stacking.
    pub fn block_diag(parts: &[&SparseLayer]) -> Self {
        let mut out = Self::empty(0);
        for p in parts {
            out.append_rows(p, out.cols, C64::new(1.0, 0.0));
            out.cols += p.cols;
        }
        out
    }

    /// Row stacking over a shared input.
    pub fn stack(parts: &[&SparseLayer]) -> Self {
        let mut out = Self::empty(parts.first().map_or(0, |p| p.cols));
        for p in parts {
            out.append_rows(p, 0, C64::new(1.0, 0.0));
        }
        out
    }

    /// A single output row `bias + Σ coeffs[i]·part_i` where part `i` reads
    /// columns offset by the widths of the earlier parts (`shared = false`)
    /// or the same columns (`shared = true`).
    pub fn combine_rows(parts: &[&SparseLayer], coeffs: &[C64], bias: C64, shared: bool) -> Self {
        let zero = C64::new(0.0, 0.0);
        let cols = if shared {
            parts.first().map_or(0, |p| p.cols)
        } else {
            parts.iter().map(|p| p.cols).sum()
        };
        let mut acc: Vec<Option<C64>> = vec![None; cols];
        let mut b = bias;
        let mut bm = bias != zero;
        let mut off = 0;
        for (p, c) in parts.iter().zip(coeffs) {
            debug_assert_eq!(p.rows, 1);
            for (col, v) in p.row(0) {
                let slot = &mut acc[off + col];
                *slot = Some(slot.unwrap_or(zero) + c * v);
            }
            if p.bias_mask[0] {
                bm = true;
                b += c * p.bias[0];
            }
            if !shared {
                off += p.cols;
            }
        }
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        for (i, v) in acc.into_iter().enumerate() {
            if let Some(v) = v {
                col_idx.push(i as u32);
                vals.push(v);
            }
        }
        Self {
            rows: 1,
            cols,
            row_ptr: vec![0, col_idx.len()],
            col_idx,
            vals,
            bias: vec![b],
            bias_mask: vec![bm],
        }
    }

    fn empty(cols: usize) -> Self {
        Self {
            rows: 0,
            cols,
            row_ptr: vec![0],
            col_idx: Vec::new(),
            vals: Vec::new(),
            bias: Vec::new(),
            bias_mask: Vec::new(),
        }
    }

    fn append_rows(&mut self, p: &SparseLayer, col_off: usize, scale: C64) {
        for r in 0..p.rows {
            for (c, v) in p.row(r) {
                self.col_idx.push((c + col_off) as u32);
                self.vals.push(scale * v);
            }
            self.row_ptr.push(self.col_idx.len());
        }
        self.bias.extend(p.bias.iter().map(|b| scale * b));
        self.bias_mask.extend_from_slice(&p.bias_mask);
        self.rows += p.rows;
    }
}

/// Walks the fused layer `outer ∘ inner` row by row.
fn fuse_rows(outer: &SparseLayer, inner: &SparseLayer, mut emit: impl FnMut(&[u32], &[C64], C64, bool)) {
    debug_assert_eq!(outer.cols, inner.rows);
    let zero = C64::new(0.0, 0.0);
    let mut acc = vec![zero; inner.cols];
    let mut stamp = vec![usize::MAX; inner.cols];
    let mut touched: Vec<u32> = Vec::new();
    let mut vals: Vec<C64> = Vec::new();
    for r in 0..outer.rows {
        touched.clear();
        let mut b = outer.bias[r];
        let mut bm = outer.bias_mask[r];
        for (k, a) in outer.row(r) {
            for (c, v) in inner.row(k) {
                if stamp[c] != r {
                    stamp[c] = r;
                    acc[c] = zero;
                    touched.push(c as u32);
                }
                acc[c] += a * v;
            }
            if inner.bias_mask[k] {
                bm = true;
                b += a * inner.bias[k];
            }
        }
        touched.sort_unstable();
        vals.clear();
        vals.extend(touched.iter().map(|c| acc[*c as usize]));
        emit(&touched, &vals, b, bm);
    }
}

/// The fused layer `outer ∘ inner` with boolean-product masks.
pub(crate) fn fuse(outer: &SparseLayer, inner: &SparseLayer) -> SparseLayer {
    let mut out = SparseLayer::empty(inner.cols);
    fuse_rows(outer, inner, |cols, vals, b, bm| {
        out.col_idx.extend_from_slice(cols);
        out.vals.extend_from_slice(vals);
        out.row_ptr.push(out.col_idx.len());
        out.bias.push(b);
        out.bias_mask.push(bm);
        out.rows += 1;
    });
    out
}

/// Weight count and largest magnitude of `outer ∘ inner`.
pub(crate) fn fuse_counts(outer: &SparseLayer, inner: &SparseLayer) -> (usize, f64) {
    let mut count = 0;
    let mut max = 0.0f64;
    fuse_rows(outer, inner, |cols, vals, b, bm| {
        count += cols.len();
        for v in vals {
            max = max.max(v.norm());
        }
        if bm {
            count += 1;
            max = max.max(b.norm());
        }
    });
    (count, max)
}
