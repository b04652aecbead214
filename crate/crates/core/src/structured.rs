//! Networks kept as a composition DAG of small flat networks.
//!
//! Nodes are immutable and shared through [`Arc`]; a subnetwork that appears
//! several times (for example the same square network fed with the same
//! argument from two products) is stored once. Statistics are those of the
//! equivalent flattened network and are computed when a node is built.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::network::{identity_network, parallel, weighted_sum_flat, ModReLUNetwork};
use crate::precision::{required_bits, EvalPolicy};
use crate::sparse::{fuse, fuse_counts, SparseLayer};
use crate::stats::{ArchitectureStats, ComponentStats};
use crate::C64;

pub type NetRef = Arc<StructuredNet>;

/// Largest flattened network, in dense matrix entries, that `flatten` builds.
pub const FLATTEN_LIMIT: usize = 20_000_000;

#[derive(Debug, Clone)]
pub enum NodeKind {
    Leaf(ModReLUNetwork),
    /// Children applied first to last.
    Serial(Vec<NetRef>),
    /// Children on consecutive, disjoint slices of the input.
    Parallel(Vec<NetRef>),
    /// `bias + Σ coeffs[i]·children[i](x)` over a shared input.
    WeightedSum { children: Vec<NetRef>, coeffs: Vec<C64>, bias: C64 },
}

#[derive(Debug, Clone)]
struct Summary {
    widths: Vec<usize>,
    first: Arc<SparseLayer>,
    last: Arc<SparseLayer>,
    interior_count: usize,
    interior_max: f64,
}

impl Summary {
    fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    fn stats(&self) -> ArchitectureStats {
        let mut weight_count = self.first.weight_count() + self.interior_count;
        let mut max = self.first.max_abs().max(self.interior_max);
        if self.depth() > 1 {
            weight_count += self.last.weight_count();
            max = max.max(self.last.max_abs());
        }
        ArchitectureStats {
            depth: self.depth(),
            total_neurons: self.widths.iter().sum(),
            neuron_counts: self.widths.clone(),
            weight_count,
            max_weight_magnitude: max,
        }
    }

    fn leaf(net: &ModReLUNetwork) -> Self {
        let layers = net.layers();
        let first = Arc::new(SparseLayer::from_affine(&layers[0]));
        let last = if layers.len() == 1 {
            first.clone()
        } else {
            Arc::new(SparseLayer::from_affine(&layers[layers.len() - 1]))
        };
        let inner = if layers.len() > 2 { &layers[1..layers.len() - 1] } else { &[][..] };
        let mut widths = vec![net.d_in()];
        widths.extend(layers.iter().map(|l| l.rows()));
        Self {
            widths,
            first,
            last,
            interior_count: inner.iter().map(|l| l.weight_count()).sum(),
            interior_max: inner.iter().map(|l| l.max_abs()).fold(0.0, f64::max),
        }
    }

    /// Summary of `outer ∘ inner`.
    fn chain(inner: &Self, outer: &Self) -> Self {
        let (l1, l2) = (inner.depth(), outer.depth());
        // The junction layer disappears into the fused affine map.
        let mut widths = inner.widths[..l1].to_vec();
        widths.extend_from_slice(&outer.widths[1..]);
        match (l1, l2) {
            (1, 1) => {
                let j = Arc::new(fuse(&outer.first, &inner.last));
                Self { widths, first: j.clone(), last: j, interior_count: 0, interior_max: 0.0 }
            }
            (1, _) => Self {
                widths,
                first: Arc::new(fuse(&outer.first, &inner.first)),
                last: outer.last.clone(),
                interior_count: outer.interior_count,
                interior_max: outer.interior_max,
            },
            (_, 1) => Self {
                widths,
                first: inner.first.clone(),
                last: Arc::new(fuse(&outer.last, &inner.last)),
                interior_count: inner.interior_count,
                interior_max: inner.interior_max,
            },
            _ => {
                let (cnt, max) = fuse_counts(&outer.first, &inner.last);
                Self {
                    widths,
                    first: inner.first.clone(),
                    last: outer.last.clone(),
                    interior_count: inner.interior_count + cnt + outer.interior_count,
                    interior_max: inner.interior_max.max(max).max(outer.interior_max),
                }
            }
        }
    }

    fn parallel(parts: &[&Self]) -> Self {
        let depth = parts[0].depth();
        let widths = (0..=depth).map(|i| parts.iter().map(|p| p.widths[i]).sum()).collect();
        let first = Arc::new(SparseLayer::block_diag(
            &parts.iter().map(|p| &*p.first).collect::<Vec<_>>(),
        ));
        let last = if depth == 1 {
            first.clone()
        } else {
            Arc::new(SparseLayer::block_diag(&parts.iter().map(|p| &*p.last).collect::<Vec<_>>()))
        };
        Self {
            widths,
            first,
            last,
            interior_count: parts.iter().map(|p| p.interior_count).sum(),
            interior_max: parts.iter().map(|p| p.interior_max).fold(0.0, f64::max),
        }
    }

    fn weighted_sum(parts: &[&Self], coeffs: &[C64], bias: C64) -> Self {
        let depth = parts[0].depth();
        let d_in = parts[0].widths[0];
        let mut widths = vec![d_in];
        for i in 1..depth {
            widths.push(parts.iter().map(|p| p.widths[i]).sum());
        }
        widths.push(1);
        let interior_count = parts.iter().map(|p| p.interior_count).sum();
        let interior_max = parts.iter().map(|p| p.interior_max).fold(0.0, f64::max);
        if depth == 1 {
            let row = Arc::new(SparseLayer::combine_rows(
                &parts.iter().map(|p| &*p.first).collect::<Vec<_>>(),
                coeffs,
                bias,
                true,
            ));
            return Self { widths, first: row.clone(), last: row, interior_count, interior_max };
        }
        let first =
            Arc::new(SparseLayer::stack(&parts.iter().map(|p| &*p.first).collect::<Vec<_>>()));
        let last = Arc::new(SparseLayer::combine_rows(
            &parts.iter().map(|p| &*p.last).collect::<Vec<_>>(),
            coeffs,
            bias,
            false,
        ));
        Self { widths, first, last, interior_count, interior_max }
    }
}

/// A network assembled from shared subnetworks.
#[derive(Debug, Clone)]
pub struct StructuredNet {
    kind: NodeKind,
    summary: Summary,
    components: ComponentStats,
    mpfr_leaves: usize,
    meta: Option<Value>,
}

struct EvalCtx {
    policy: EvalPolicy,
    memo: HashMap<(usize, Vec<u64>), Vec<C64>>,
}

fn input_key(x: &[C64]) -> Vec<u64> {
    x.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]).collect()
}

impl StructuredNet {
    fn from_kind(kind: NodeKind, summary: Summary) -> NetRef {
        let (components, mpfr_leaves) = match &kind {
            NodeKind::Leaf(net) => {
                (net.component_stats(), usize::from(required_bits(net.max_weight()).is_some()))
            }
            NodeKind::Serial(ch)
            | NodeKind::Parallel(ch)
            | NodeKind::WeightedSum { children: ch, .. } => {
                let mut c = ComponentStats::default();
                let mut m = 0;
                for child in ch {
                    c.blocks += child.components.blocks;
                    c.hidden_neurons += child.components.hidden_neurons;
                    c.weight_count += child.components.weight_count;
                    m += child.mpfr_leaves;
                }
                (c, m)
            }
        };
        Arc::new(Self { kind, summary, components, mpfr_leaves, meta: None })
    }

    pub fn leaf(net: ModReLUNetwork) -> NetRef {
        let summary = Summary::leaf(&net);
        Self::from_kind(NodeKind::Leaf(net), summary)
    }

    /// Applies `children` in order; a single child is returned unchanged.
    pub fn serial(children: Vec<NetRef>) -> Result<NetRef> {
        if children.is_empty() {
            return Err(Error::Dimension("empty serial list".into()));
        }
        if children.len() == 1 {
            return Ok(children.into_iter().next().expect("one child"));
        }
        for pair in children.windows(2) {
            if pair[1].d_in() != pair[0].d_out() {
                return Err(Error::Dimension(format!(
                    "serial stage takes {} inputs but the previous stage produces {}",
                    pair[1].d_in(),
                    pair[0].d_out()
                )));
            }
        }
        let mut summary = children[0].summary.clone();
        for c in &children[1..] {
            summary = Summary::chain(&summary, &c.summary);
        }
        Ok(Self::from_kind(NodeKind::Serial(children), summary))
    }

    pub fn parallel(children: Vec<NetRef>) -> Result<NetRef> {
        let first = children.first().ok_or_else(|| Error::Dimension("empty parallel list".into()))?;
        if let Some(bad) = children.iter().find(|c| c.depth() != first.depth()) {
            return Err(Error::DepthMismatch(format!(
                "parallel branches have depths {} and {}",
                first.depth(),
                bad.depth()
            )));
        }
        let summary =
            Summary::parallel(&children.iter().map(|c| &c.summary).collect::<Vec<_>>());
        Ok(Self::from_kind(NodeKind::Parallel(children), summary))
    }

    pub fn weighted_sum(children: Vec<NetRef>, coeffs: Vec<C64>, bias: C64) -> Result<NetRef> {
        let first = children.first().ok_or_else(|| Error::Dimension("empty weighted sum".into()))?;
        if coeffs.len() != children.len() {
            return Err(Error::Dimension("one coefficient per network is required".into()));
        }
        if children.iter().any(|c| c.d_out() != 1 || c.d_in() != first.d_in()) {
            return Err(Error::Dimension(
                "weighted sum needs single-output networks with a common input".into(),
            ));
        }
        if children.iter().any(|c| c.depth() != first.depth()) {
            return Err(Error::DepthMismatch("weighted sum branches differ in depth".into()));
        }
        if coeffs.iter().chain(std::iter::once(&bias)).any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::NonFinite("weighted sum coefficients".into()));
        }
        let summary = Summary::weighted_sum(
            &children.iter().map(|c| &c.summary).collect::<Vec<_>>(),
            &coeffs,
            bias,
        );
        Ok(Self::from_kind(NodeKind::WeightedSum { children, coeffs, bias }, summary))
    }

    /// Appends identity networks of `radius` until the depth is `target_depth`.
    pub fn pad_depth(net: &NetRef, target_depth: usize, radius: f64) -> Result<NetRef> {
        if target_depth < net.depth() {
            return Err(Error::DepthMismatch(format!(
                "cannot pad depth {} down to {target_depth}",
                net.depth()
            )));
        }
        if target_depth == net.depth() {
            return Ok(net.clone());
        }
        let id = Self::leaf(identity_network(radius, net.d_out())?);
        let mut chain = vec![net.clone()];
        chain.extend(std::iter::repeat_n(id, target_depth - net.depth()));
        Self::serial(chain)
    }

    pub fn with_meta(mut self, meta: Value) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn meta(&self) -> Option<&Value> {
        self.meta.as_ref()
    }

    pub fn kind(&self) -> &NodeKind {
        &self.kind
    }

    pub fn d_in(&self) -> usize {
        self.summary.widths[0]
    }

    pub fn d_out(&self) -> usize {
        *self.summary.widths.last().expect("widths are never empty")
    }

    pub fn depth(&self) -> usize {
        self.summary.depth()
    }

    /// Statistics of the equivalent flattened network.
    pub fn stats(&self) -> ArchitectureStats {
        self.summary.stats()
    }

    /// Building blocks counted one at a time, as a sum over leaf occurrences.
    pub fn component_stats(&self) -> ComponentStats {
        self.components
    }

    /// Leaf occurrences that need MPFR evaluation.
    pub fn mpfr_leaves(&self) -> usize {
        self.mpfr_leaves
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
        let mut ctx = EvalCtx { policy, memo: HashMap::new() };
        Ok(self.eval_node(x, &mut ctx))
    }

    fn eval_child(child: &NetRef, x: &[C64], ctx: &mut EvalCtx) -> Vec<C64> {
        // A shared node fed the same bits computes the same values.
        if child.mpfr_leaves > 0 && Arc::strong_count(child) > 1 {
            let key = (Arc::as_ptr(child) as usize, input_key(x));
            if let Some(v) = ctx.memo.get(&key) {
                return v.clone();
            }
            let v = child.eval_node(x, ctx);
            ctx.memo.insert(key, v.clone());
            v
        } else {
            child.eval_node(x, ctx)
        }
    }

    fn eval_node(&self, x: &[C64], ctx: &mut EvalCtx) -> Vec<C64> {
        match &self.kind {
            NodeKind::Leaf(net) => net.eval_unchecked(x, ctx.policy),
            NodeKind::Serial(ch) => {
                let mut cur = Self::eval_child(&ch[0], x, ctx);
                for c in &ch[1..] {
                    cur = Self::eval_child(c, &cur, ctx);
                }
                cur
            }
            NodeKind::Parallel(ch) => {
                let mut out = Vec::with_capacity(self.d_out());
                let mut off = 0;
                for c in ch {
                    let k = c.d_in();
                    out.extend(Self::eval_child(c, &x[off..off + k], ctx));
                    off += k;
                }
                out
            }
            NodeKind::WeightedSum { children, coeffs, bias } => {
                let mut acc = *bias;
                for (c, a) in children.iter().zip(coeffs) {
                    if *a == C64::new(0.0, 0.0) {
                        continue;
                    }
                    acc += a * Self::eval_child(c, x, ctx)[0];
                }
                vec![acc]
            }
        }
    }

    /// Dense size of the flattened network, `Σ N_ℓ N_{ℓ−1}`.
    pub fn dense_size(&self) -> usize {
        self.summary.widths.windows(2).map(|w| w[0].saturating_mul(w[1])).fold(0, usize::saturating_add)
    }

    /// The equivalent flat network, built by fusing adjacent affine maps in
    /// double precision. Refused above [`FLATTEN_LIMIT`] dense entries.
    pub fn flatten(&self) -> Result<ModReLUNetwork> {
        let size = self.dense_size();
        if size > FLATTEN_LIMIT {
            return Err(Error::TooLarge(format!(
                "{size} dense entries exceeds the limit of {FLATTEN_LIMIT}"
            )));
        }
        let net = self.flatten_node()?;
        Ok(match &self.meta {
            Some(m) => net.with_meta(m.clone()),
            None => net,
        })
    }

    fn flatten_node(&self) -> Result<ModReLUNetwork> {
        match &self.kind {
            NodeKind::Leaf(net) => Ok(net.clone()),
            NodeKind::Serial(ch) => {
                let mut acc = ch[0].flatten_node()?;
                for c in &ch[1..] {
                    acc = crate::network::compose(&c.flatten_node()?, &acc)?;
                }
                Ok(acc)
            }
            NodeKind::Parallel(ch) => {
                parallel(&ch.iter().map(|c| c.flatten_node()).collect::<Result<Vec<_>>>()?)
            }
            NodeKind::WeightedSum { children, coeffs, bias } => weighted_sum_flat(
                &children.iter().map(|c| c.flatten_node()).collect::<Result<Vec<_>>>()?,
                coeffs,
                *bias,
            ),
        }
    }

    /// Whether two nets share the node structure, layer shapes and masks,
    /// regardless of weight values.
    pub fn same_architecture(a: &NetRef, b: &NetRef) -> bool {
        let mut seen = HashSet::new();
        a.stats().same_architecture(&b.stats()) && Self::arch_eq(a, b, &mut seen)
    }

    fn arch_eq(a: &NetRef, b: &NetRef, seen: &mut HashSet<(usize, usize)>) -> bool {
        if !seen.insert((Arc::as_ptr(a) as usize, Arc::as_ptr(b) as usize)) {
            return true;
        }
        match (&a.kind, &b.kind) {
            (NodeKind::Leaf(x), NodeKind::Leaf(y)) => {
                x.depth() == y.depth()
                    && x.layers().iter().zip(y.layers()).all(|(l, m)| {
                        l.rows() == m.rows()
                            && l.cols() == m.cols()
                            && l.weight_mask() == m.weight_mask()
                            && l.bias_mask() == m.bias_mask()
                    })
            }
            (NodeKind::Serial(x), NodeKind::Serial(y))
            | (NodeKind::Parallel(x), NodeKind::Parallel(y)) => {
                x.len() == y.len() && x.iter().zip(y).all(|(p, q)| Self::arch_eq(p, q, seen))
            }
            (
                NodeKind::WeightedSum { children: x, bias: bx, .. },
                NodeKind::WeightedSum { children: y, bias: by, .. },
            ) => {
                let zero = C64::new(0.0, 0.0);
                x.len() == y.len()
                    && (*bx == zero) == (*by == zero)
                    && x.iter().zip(y).all(|(p, q)| Self::arch_eq(p, q, seen))
            }
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::AffineLayer;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn small_net() -> ModReLUNetwork {
        let l1 = AffineLayer::from_rows(
            &[vec![c(2.0, 1.0)], vec![c(-1.0, 0.5)], vec![c(0.0, 3.0)]],
            &[c(0.5, -1.0), c(3.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let l2 = AffineLayer::from_rows(&[vec![c(1.0, 0.0), c(0.0, -2.0), c(0.5, 0.5)]], &[c(0.25, 0.0)])
            .unwrap();
        ModReLUNetwork::new(vec![l1, l2]).unwrap()
    }

    #[test]
    fn stats_match_flattened() {
        let a = StructuredNet::leaf(small_net());
        let id = StructuredNet::leaf(identity_network(5.0, 1).unwrap());
        let scale =
            StructuredNet::leaf(ModReLUNetwork::new(vec![AffineLayer::from_real(&[&[0.5]], &[0.1]).unwrap()]).unwrap());
        let s = StructuredNet::serial(vec![scale.clone(), a.clone(), id.clone(), scale.clone()]).unwrap();
        let w = StructuredNet::weighted_sum(
            vec![s.clone(), StructuredNet::pad_depth(&a, s.depth(), 10.0).unwrap()],
            vec![c(1.0, 2.0), c(0.0, 0.0)],
            c(1.0, 0.0),
        )
        .unwrap();
        let p = StructuredNet::parallel(vec![w.clone(), w.clone()]).unwrap();
        for net in [&a, &s, &w, &p] {
            let flat = net.flatten().unwrap();
            let (x, y) = (net.stats(), flat.stats());
            assert!(x.same_architecture(&y), "{x:?} vs {y:?}");
            assert!((x.max_weight_magnitude - y.max_weight_magnitude).abs() <= 1e-12 * y.max_weight_magnitude);
            let input: Vec<C64> = (0..net.d_in()).map(|i| c(0.3 + i as f64, -0.2)).collect();
            let u = net.evaluate(&input).unwrap();
            let v = flat.evaluate(&input).unwrap();
            for (p, q) in u.iter().zip(&v) {
                assert!((p - q).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn depth_one_sums() {
        let scale = |k: f64| {
            StructuredNet::leaf(ModReLUNetwork::new(vec![AffineLayer::from_real(&[&[k]], &[0.0]).unwrap()]).unwrap())
        };
        let w = StructuredNet::weighted_sum(vec![scale(1.0), scale(2.0)], vec![c(1.0, 0.0), c(1.0, 0.0)], c(0.0, 0.0))
            .unwrap();
        assert_eq!(w.stats(), w.flatten().unwrap().stats());
        assert_eq!(w.evaluate(&[c(1.0, 1.0)]).unwrap(), vec![c(3.0, 3.0)]);
    }

    #[test]
    fn errors() {
        let a = StructuredNet::leaf(small_net());
        let id2 = StructuredNet::leaf(identity_network(1.0, 2).unwrap());
        assert!(StructuredNet::serial(vec![a.clone(), id2.clone()]).is_err());
        let one = StructuredNet::leaf(ModReLUNetwork::new(vec![AffineLayer::identity(1)]).unwrap());
        assert!(matches!(StructuredNet::parallel(vec![a.clone(), one]), Err(Error::DepthMismatch(_))));
        assert!(StructuredNet::pad_depth(&a, 1, 1.0).is_err());
        assert!(a.evaluate(&[c(0.0, 0.0); 2]).is_err());
    }
}
