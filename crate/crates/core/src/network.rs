//! Flat networks: an ordered list of affine layers with modReLU between them.

use serde_json::Value;

use crate::error::{Error, Result};
use crate::layer::AffineLayer;
use crate::precision::{bits_for, eval_layers, EvalPolicy};
use crate::stats::{ArchitectureStats, ComponentStats};
use crate::C64;

/// Realizes `T_L ∘ (σ ∘ T_{L−1}) ∘ … ∘ (σ ∘ T_1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModReLUNetwork {
    layers: Vec<AffineLayer>,
    max_weight: f64,
    meta: Option<Value>,
}

impl ModReLUNetwork {
    pub fn new(layers: Vec<AffineLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Dimension("a network needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[1].cols() != pair[0].rows() {
                return Err(Error::Dimension(format!(
                    "layer {} has {} columns but layer {} has {} rows",
                    i + 1,
                    pair[1].cols(),
                    i,
                    pair[0].rows()
                )));
            }
        }
        let max_weight = layers.iter().map(|l| l.max_abs()).fold(0.0, f64::max);
        Ok(Self { layers, max_weight, meta: None })
    }

    pub fn with_meta(mut self, meta: Value) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn meta(&self) -> Option<&Value> {
        self.meta.as_ref()
    }

    pub fn layers(&self) -> &[AffineLayer] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn d_in(&self) -> usize {
        self.layers[0].cols()
    }

    pub fn d_out(&self) -> usize {
        self.layers[self.layers.len() - 1].rows()
    }

    pub fn max_weight(&self) -> f64 {
        self.max_weight
    }

    /// MPFR precision used under `policy`, `None` for double precision.
    pub fn eval_bits(&self, policy: EvalPolicy) -> Option<u32> {
        bits_for(policy, self.max_weight)
    }

    pub fn evaluate(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.evaluate_with(x, EvalPolicy::Auto)
    }

    pub fn evaluate_with(&self, x: &[C64], policy: EvalPolicy) -> Result<Vec<C64>> {
        if x.len() != self.d_in() {
            return Err(Error::InputShape { expected: self.d_in(), got: x.len() });
        }
        if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("network input".into()));
        }
        Ok(eval_layers(&self.layers, x, self.eval_bits(policy)))
    }

    pub(crate) fn eval_unchecked(&self, x: &[C64], policy: EvalPolicy) -> Vec<C64> {
        eval_layers(&self.layers, x, self.eval_bits(policy))
    }

    pub fn stats(&self) -> ArchitectureStats {
        let mut neuron_counts = vec![self.d_in()];
        neuron_counts.extend(self.layers.iter().map(|l| l.rows()));
        ArchitectureStats {
            depth: self.depth(),
            total_neurons: neuron_counts.iter().sum(),
            neuron_counts,
            weight_count: self.layers.iter().map(|l| l.weight_count()).sum(),
            max_weight_magnitude: self.max_weight,
        }
    }

    pub fn component_stats(&self) -> ComponentStats {
        let s = self.stats();
        ComponentStats { blocks: 1, hidden_neurons: s.hidden_neurons(), weight_count: s.weight_count }
    }
}

/// `outer.first ∘ inner.last` as one affine layer; masks follow the
/// boolean matrix product so that the architecture does not depend on
/// cancellations between values.
pub(crate) fn fuse(outer: &AffineLayer, inner: &AffineLayer) -> AffineLayer {
    let (rows, mid, cols) = (outer.rows(), outer.cols(), inner.cols());
    debug_assert_eq!(mid, inner.rows());
    let zero = C64::new(0.0, 0.0);
    let mut w = vec![zero; rows * cols];
    let mut wm = vec![false; rows * cols];
    let mut b = outer.bias().to_vec();
    let mut bm = outer.bias_mask().to_vec();
    for r in 0..rows {
        for k in 0..mid {
            if !outer.weight_mask()[r * mid + k] {
                continue;
            }
            let a = outer.weight(r, k);
            for c in 0..cols {
                if inner.weight_mask()[k * cols + c] {
                    wm[r * cols + c] = true;
                    w[r * cols + c] += a * inner.weight(k, c);
                }
            }
            if inner.bias_mask()[k] {
                bm[r] = true;
                b[r] += a * inner.bias()[k];
            }
        }
    }
    AffineLayer::with_masks(rows, cols, w, b, wm, bm).expect("fused layer is well formed")
}

/// Realization of `outer ∘ inner`, fusing the two adjacent affine maps so
/// that the depth is `L(outer) + L(inner) − 1`.
///
/// Fused weights are rounded products; for networks whose weights are large
/// and rely on exact cancellation, compose with [`crate::StructuredNet`] instead.
pub fn compose(outer: &ModReLUNetwork, inner: &ModReLUNetwork) -> Result<ModReLUNetwork> {
    if outer.d_in() != inner.d_out() {
        return Err(Error::Dimension(format!(
            "outer network takes {} inputs but inner produces {}",
            outer.d_in(),
            inner.d_out()
        )));
    }
    let mut layers: Vec<AffineLayer> = inner.layers[..inner.depth() - 1].to_vec();
    layers.push(fuse(&outer.layers[0], &inner.layers[inner.depth() - 1]));
    layers.extend_from_slice(&outer.layers[1..]);
    ModReLUNetwork::new(layers)
}

fn block_diagonal(blocks: &[&AffineLayer]) -> AffineLayer {
    let rows: usize = blocks.iter().map(|l| l.rows()).sum();
    let cols: usize = blocks.iter().map(|l| l.cols()).sum();
    let zero = C64::new(0.0, 0.0);
    let mut w = vec![zero; rows * cols];
    let mut wm = vec![false; rows * cols];
    let mut b = Vec::with_capacity(rows);
    let mut bm = Vec::with_capacity(rows);
    let (mut r0, mut c0) = (0, 0);
    for l in blocks {
        for r in 0..l.rows() {
            for c in 0..l.cols() {
                let i = (r0 + r) * cols + c0 + c;
                w[i] = l.weight(r, c);
                wm[i] = l.weight_mask()[r * l.cols() + c];
            }
        }
        b.extend_from_slice(l.bias());
        bm.extend_from_slice(l.bias_mask());
        r0 += l.rows();
        c0 += l.cols();
    }
    AffineLayer::with_masks(rows, cols, w, b, wm, bm).expect("block diagonal is well formed")
}

/// Block-diagonal stacking of equal-depth networks on disjoint inputs.
pub fn parallel(nets: &[ModReLUNetwork]) -> Result<ModReLUNetwork> {
    let first = nets.first().ok_or_else(|| Error::Dimension("empty parallel list".into()))?;
    if let Some(bad) = nets.iter().find(|n| n.depth() != first.depth()) {
        return Err(Error::DepthMismatch(format!(
            "parallel branches have depths {} and {}",
            first.depth(),
            bad.depth()
        )));
    }
    let layers = (0..first.depth())
        .map(|i| block_diagonal(&nets.iter().map(|n| &n.layers[i]).collect::<Vec<_>>()))
        .collect();
    ModReLUNetwork::new(layers)
}

/// `bias + Σ coeffs[i]·nets[i](x)` for equal-depth, single-output networks
/// sharing their input.
pub fn weighted_sum_flat(
    nets: &[ModReLUNetwork],
    coeffs: &[C64],
    bias: C64,
) -> Result<ModReLUNetwork> {
    let first = nets.first().ok_or_else(|| Error::Dimension("empty weighted sum".into()))?;
    if coeffs.len() != nets.len() {
        return Err(Error::Dimension("one coefficient per network is required".into()));
    }
    if nets.iter().any(|n| n.d_out() != 1 || n.d_in() != first.d_in()) {
        return Err(Error::Dimension(
            "weighted sum needs single-output networks with a common input".into(),
        ));
    }
    if nets.iter().any(|n| n.depth() != first.depth()) {
        return Err(Error::DepthMismatch("weighted sum branches differ in depth".into()));
    }
    let depth = first.depth();
    let d = first.d_in();
    if depth == 1 {
        let zero = C64::new(0.0, 0.0);
        let mut w = vec![zero; d];
        let mut wm = vec![false; d];
        let mut b = bias;
        let mut bm = bias != zero;
        for (n, c) in nets.iter().zip(coeffs) {
            let l = &n.layers[0];
            for k in 0..d {
                if l.weight_mask()[k] {
                    wm[k] = true;
                    w[k] += c * l.weight(0, k);
                }
            }
            if l.bias_mask()[0] {
                bm = true;
                b += c * l.bias()[0];
            }
        }
        let layer = AffineLayer::with_masks(1, d, w, vec![b], wm, vec![bm])?;
        return ModReLUNetwork::new(vec![layer]);
    }
    let mut layers = Vec::with_capacity(depth);
    // First layer: stacked rows over the shared input.
    let rows: usize = nets.iter().map(|n| n.layers[0].rows()).sum();
    let mut w = Vec::with_capacity(rows * d);
    let mut wm = Vec::with_capacity(rows * d);
    let mut b = Vec::with_capacity(rows);
    let mut bm = Vec::with_capacity(rows);
    for n in nets {
        let l = &n.layers[0];
        w.extend_from_slice(l.weights());
        wm.extend_from_slice(l.weight_mask());
        b.extend_from_slice(l.bias());
        bm.extend_from_slice(l.bias_mask());
    }
    layers.push(AffineLayer::with_masks(rows, d, w, b, wm, bm)?);
    for i in 1..depth - 1 {
        layers.push(block_diagonal(&nets.iter().map(|n| &n.layers[i]).collect::<Vec<_>>()));
    }
    // Last layer: one row of scaled output rows side by side.
    let lasts: Vec<AffineLayer> = nets
        .iter()
        .zip(coeffs)
        .map(|(n, c)| n.layers[depth - 1].scaled_rows(&[*c]))
        .collect();
    let cols: usize = lasts.iter().map(|l| l.cols()).sum();
    let mut w = Vec::with_capacity(cols);
    let mut wm = Vec::with_capacity(cols);
    let mut b = bias;
    let mut bm = bias != C64::new(0.0, 0.0);
    for l in &lasts {
        w.extend_from_slice(l.weights());
        wm.extend_from_slice(l.weight_mask());
        if l.bias_mask()[0] {
            bm = true;
            b += l.bias()[0];
        }
    }
    layers.push(AffineLayer::with_masks(1, cols, w, vec![b], wm, vec![bm])?);
    ModReLUNetwork::new(layers)
}

/// `Id_R` applied coordinatewise to `width` inputs; exact on `|z_i| ≤ radius`.
pub fn identity_network(radius: f64, width: usize) -> Result<ModReLUNetwork> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Parameter(format!("identity radius must be positive, got {radius}")));
    }
    if width == 0 {
        return Err(Error::Dimension("identity width must be positive".into()));
    }
    let zero = C64::new(0.0, 0.0);
    let shift = radius + 1.0;
    let mut w1 = vec![zero; 2 * width * width];
    let mut b1 = vec![zero; 2 * width];
    let mut w2 = vec![zero; width * 2 * width];
    let b2 = vec![C64::new(-shift, 0.0); width];
    for i in 0..width {
        w1[(2 * i) * width + i] = C64::new(2.0, 0.0);
        w1[(2 * i + 1) * width + i] = C64::new(1.0, 0.0);
        b1[2 * i] = C64::new(2.0 * shift, 0.0);
        b1[2 * i + 1] = C64::new(shift, 0.0);
        w2[i * 2 * width + 2 * i] = C64::new(1.0, 0.0);
        w2[i * 2 * width + 2 * i + 1] = C64::new(-1.0, 0.0);
    }
    ModReLUNetwork::new(vec![
        AffineLayer::new(2 * width, width, w1, b1)?,
        AffineLayer::new(width, 2 * width, w2, b2)?,
    ])
}

/// Appends identity networks of the given radius until the depth is `target_depth`.
pub fn pad_depth(net: &ModReLUNetwork, target_depth: usize, radius: f64) -> Result<ModReLUNetwork> {
    if target_depth < net.depth() {
        return Err(Error::DepthMismatch(format!(
            "cannot pad depth {} down to {target_depth}",
            net.depth()
        )));
    }
    let id = identity_network(radius, net.d_out())?;
    let mut out = net.clone();
    while out.depth() < target_depth {
        out = compose(&id, &out)?;
    }
    out.meta = net.meta.clone();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_stats() {
        let id = identity_network(2.0, 1).unwrap();
        let s = id.stats();
        assert_eq!(s.depth, 2);
        assert_eq!(s.hidden_neurons(), 2);
        assert_eq!(s.weight_count, 7);
        assert_eq!(s.neuron_counts, vec![1, 2, 1]);
        assert_eq!(s.total_neurons, 4);
    }

    #[test]
    fn single_layer_is_affine() {
        let net = ModReLUNetwork::new(vec![AffineLayer::identity(1)]).unwrap();
        let z = c(-3.0, 4.0);
        assert_eq!(net.evaluate(&[z]).unwrap(), vec![z]);
    }

    #[test]
    fn shape_errors() {
        let id = identity_network(1.0, 1).unwrap();
        assert!(matches!(id.evaluate(&[c(0.0, 0.0); 2]), Err(Error::InputShape { .. })));
        let two = identity_network(1.0, 2).unwrap();
        assert!(compose(&id, &two).is_err());
        let one = ModReLUNetwork::new(vec![AffineLayer::identity(1)]).unwrap();
        assert!(matches!(parallel(&[id.clone(), one]), Err(Error::DepthMismatch(_))));
        assert!(pad_depth(&id, 1, 1.0).is_err());
    }

    #[test]
    fn compose_identity_depth() {
        let id = identity_network(2.0, 1).unwrap();
        let twice = compose(&id, &id).unwrap();
        assert_eq!(twice.depth(), 3);
        let z = c(1.5, -0.5);
        assert!((twice.evaluate(&[z]).unwrap()[0] - z).norm() < 1e-14);
        let affine = ModReLUNetwork::new(vec![AffineLayer::identity(1)]).unwrap();
        let same = compose(&id, &affine).unwrap();
        assert_eq!(same.depth(), 2);
        assert_eq!(same.evaluate(&[z]).unwrap(), id.evaluate(&[z]).unwrap());
    }

    #[test]
    fn weighted_sum_cancels() {
        let id = identity_network(3.0, 1).unwrap();
        let zero = weighted_sum_flat(&[id.clone(), id], &[c(1.0, 0.0), c(-1.0, 0.0)], c(0.0, 0.0))
            .unwrap();
        assert!(zero.evaluate(&[c(2.0, 1.0)]).unwrap()[0].norm() < 1e-14);
    }
}
