//! Builders for the elementary networks, each with a plain-arithmetic
//! reference in [`reference`].

pub mod reference;

use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::json::AnyNet;
use crate::layer::AffineLayer;
use crate::network::{identity_network, ModReLUNetwork};
use crate::structured::{NetRef, StructuredNet};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const MINUS_I: C64 = C64::new(0.0, -1.0);

/// Scales above this use a plain power of two for the extractor.
const MANTISSA_SCALE_LIMIT: f64 = 17592186044416.0; // 2^44
const MAX_EXTRACTOR_SCALE: f64 = 2251799813685248.0; // 2^51

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    Identity,
    Re,
    Im,
    ReluRe,
    ReluIm,
    AbsRe,
    GRe,
    SquareRe,
    SquareIm,
    ProductRe,
    Product,
    PsiRe,
    PsiIm,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 13] = [
        Self::Identity,
        Self::Re,
        Self::Im,
        Self::ReluRe,
        Self::ReluIm,
        Self::AbsRe,
        Self::GRe,
        Self::SquareRe,
        Self::SquareIm,
        Self::ProductRe,
        Self::Product,
        Self::PsiRe,
        Self::PsiIm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Re => "re",
            Self::Im => "im",
            Self::ReluRe => "relu_re",
            Self::ReluIm => "relu_im",
            Self::AbsRe => "abs_re",
            Self::GRe => "g_re",
            Self::SquareRe => "square_re",
            Self::SquareIm => "square_im",
            Self::ProductRe => "product_re",
            Self::Product => "product",
            Self::PsiRe => "psi_re",
            Self::PsiIm => "psi_im",
        }
    }

    /// Number of complex inputs.
    pub fn inputs(self) -> usize {
        match self {
            Self::ProductRe | Self::Product => 2,
            _ => 1,
        }
    }
}

impl FromStr for PrimitiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::Parameter(format!("unknown primitive '{s}'")))
    }
}

/// Parameters of one primitive network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveSpec {
    pub kind: PrimitiveKind,
    pub radius: f64,
    #[serde(default)]
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    /// Sawtooth stages of the square network inside square and product kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sawtooth: Option<u32>,
}

impl PrimitiveSpec {
    pub fn new(kind: PrimitiveKind, radius: f64, eps: f64) -> Self {
        Self { kind, radius, eps, shift: None, bound: None, sawtooth: None }
    }

    pub fn with_shift(mut self, c: f64) -> Self {
        self.shift = Some(c);
        self
    }

    pub fn with_bound(mut self, m: f64) -> Self {
        self.bound = Some(m);
        self
    }

    /// Fills in derived fields.
    fn resolved(&self) -> Self {
        let mut s = self.clone();
        s.sawtooth = match self.kind {
            PrimitiveKind::SquareRe | PrimitiveKind::SquareIm => Some(sawtooth_count(self.eps / 18.0)),
            PrimitiveKind::ProductRe => {
                let m = self.bound.unwrap_or(1.0);
                Some(sawtooth_count(self.eps / (6.0 * m * m) / 18.0))
            }
            PrimitiveKind::Product => {
                let m = self.bound.unwrap_or(1.0);
                Some(sawtooth_count(self.eps / 4.0 / (6.0 * m * m) / 18.0))
            }
            _ => None,
        };
        s
    }

    /// Depth of the built network.
    pub fn predicted_depth(&self) -> usize {
        match self.kind {
            PrimitiveKind::Identity
            | PrimitiveKind::Re
            | PrimitiveKind::Im
            | PrimitiveKind::PsiRe
            | PrimitiveKind::PsiIm => 2,
            PrimitiveKind::ReluRe
            | PrimitiveKind::ReluIm
            | PrimitiveKind::AbsRe
            | PrimitiveKind::GRe => 3,
            _ => 2 * self.resolved().sawtooth.unwrap_or(0) as usize + 3,
        }
    }

    pub fn build(&self) -> Result<AnyNet> {
        let r = self.radius;
        let shift = || self.shift.ok_or_else(|| Error::Parameter("shift c is required".into()));
        let bound = || self.bound.ok_or_else(|| Error::Parameter("bound M is required".into()));
        Ok(match self.kind {
            PrimitiveKind::Identity => AnyNet::Flat(build_identity(r)?),
            PrimitiveKind::Re => AnyNet::Flat(build_re(r, self.eps)?),
            PrimitiveKind::Im => AnyNet::Flat(build_im(r, self.eps)?),
            PrimitiveKind::ReluRe => AnyNet::Flat(build_relu_re(r, shift()?, self.eps)?),
            PrimitiveKind::ReluIm => AnyNet::Flat(build_relu_im(r, shift()?, self.eps)?),
            PrimitiveKind::AbsRe => AnyNet::Flat(build_abs_re(r, self.eps)?),
            PrimitiveKind::GRe => AnyNet::Flat(build_g_re(r, self.eps)?),
            PrimitiveKind::SquareRe => AnyNet::Structured(Arc::new(build_square_re(r, self.eps)?)),
            PrimitiveKind::SquareIm => AnyNet::Structured(Arc::new(build_square_im(r, self.eps)?)),
            PrimitiveKind::ProductRe => {
                AnyNet::Structured(Arc::new(build_product_re(r, bound()?, self.eps)?))
            }
            PrimitiveKind::Product => AnyNet::Structured(Arc::new(build_product(r, bound()?, self.eps)?)),
            PrimitiveKind::PsiRe => AnyNet::Flat(build_psi_re()),
            PrimitiveKind::PsiIm => AnyNet::Flat(build_psi_im()),
        })
    }

    pub fn to_meta(&self) -> Value {
        json!({ "primitive": self.resolved() })
    }
}

/// `m = ⌈½ log₂(1/ε) − 1⌉`, at least 0.
pub fn sawtooth_count(eps: f64) -> u32 {
    let m = (0.5 * (1.0 / eps).log2() - 1.0).ceil();
    if m > 0.0 {
        m as u32
    } else {
        0
    }
}

fn check_radius(r: f64, min: f64) -> Result<()> {
    if r.is_finite() && r >= min {
        Ok(())
    } else {
        Err(Error::Parameter(format!("radius must be at least {min}, got {r}")))
    }
}

fn check_eps(eps: f64, max: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 && eps < max {
        Ok(())
    } else {
        Err(Error::Parameter(format!("accuracy must lie in (0, {max}), got {eps}")))
    }
}

/// Smallest `t ≥ (2 + 2R)/ε` of the form `(8 + j)/8 · 2^k`. Its square times
/// `2t + 1` is then exact in double precision, so the output bias carries no
/// rounding error. Past `2^44` a power of two is used instead.
pub fn extractor_scale(radius: f64, eps: f64) -> Result<f64> {
    let target = (2.0 + 2.0 * radius) / eps;
    if !target.is_finite() {
        return Err(Error::Parameter("extractor scale overflows".into()));
    }
    let mut base = 2f64.powi(target.log2().floor() as i32);
    while base > target {
        base *= 0.5;
    }
    while base * 2.0 <= target {
        base *= 2.0;
    }
    let mut t = (0..=8)
        .map(|j| base * (8 + j) as f64 / 8.0)
        .find(|&t| t >= target)
        .unwrap_or(base * 2.0);
    if t >= MANTISSA_SCALE_LIMIT {
        t = if base == target { base } else { base * 2.0 };
    }
    if t > MAX_EXTRACTOR_SCALE {
        return Err(Error::Unsupported(format!(
            "accuracy {eps} at radius {radius} needs an extractor scale above 2^51"
        )));
    }
    Ok(t)
}

/// Three-neuron real-part extractor; `rotate` pre-multiplies the input by `−i`.
fn extractor(radius: f64, eps: f64, rotate: bool) -> Result<ModReLUNetwork> {
    check_radius(radius, 1.0)?;
    check_eps(eps, 1.0)?;
    let t = extractor_scale(radius, eps)?;
    let h = 1.0 / t;
    let rot = if rotate { MINUS_I } else { ONE };
    let t2 = t * t;
    let first = AffineLayer::new(
        3,
        1,
        vec![rot * (2.0 * h), rot * h, rot * h],
        vec![
            C64::new(4.0 * t + 2.0, -2.0 * t),
            C64::new(2.0 * t + 1.0, -t),
            C64::new(0.0, -t),
        ],
    )?;
    let second = AffineLayer::new(
        1,
        3,
        vec![C64::new(t2, 0.0), C64::new(-t2, 0.0), C64::new(-t2, 0.0)],
        vec![C64::new(-t2 * (2.0 * t + 1.0), t2)],
    )?;
    ModReLUNetwork::new(vec![first, second])
}

fn single(w: C64, b: C64) -> Result<ModReLUNetwork> {
    ModReLUNetwork::new(vec![AffineLayer::new(1, 1, vec![w], vec![b])?])
}

/// Linear map on `width` inputs given by a dense row-major matrix.
fn linear(rows: usize, cols: usize, w: Vec<C64>) -> Result<NetRef> {
    let layer = AffineLayer::new(rows, cols, w, vec![ZERO; rows])?;
    Ok(StructuredNet::leaf(ModReLUNetwork::new(vec![layer])?))
}

/// `x ↦ (1/h)σ(1 + h(x + c))` with `h` a power of two at most `1/(2(R + |c|))`.
fn relu_outer(radius: f64, c: f64) -> Result<ModReLUNetwork> {
    let bound = 1.0 / (2.0 * (radius + c.abs()));
    let mut h = 2f64.powi(bound.log2().floor() as i32);
    while h > bound {
        h *= 0.5;
    }
    ModReLUNetwork::new(vec![
        AffineLayer::new(1, 1, vec![C64::new(h, 0.0)], vec![C64::new(1.0 + h * c, 0.0)])?,
        AffineLayer::with_masks(1, 1, vec![C64::new(1.0 / h, 0.0)], vec![ZERO], vec![true], vec![
            false,
        ])?,
    ])
}

fn meta_of(kind: PrimitiveKind, radius: f64, eps: f64) -> PrimitiveSpec {
    PrimitiveSpec::new(kind, radius, eps)
}

pub fn build_identity(radius: f64) -> Result<ModReLUNetwork> {
    Ok(identity_network(radius, 1)?.with_meta(meta_of(PrimitiveKind::Identity, radius, 0.0).to_meta()))
}

pub fn build_re(radius: f64, eps: f64) -> Result<ModReLUNetwork> {
    Ok(extractor(radius, eps, false)?.with_meta(meta_of(PrimitiveKind::Re, radius, eps).to_meta()))
}

pub fn build_im(radius: f64, eps: f64) -> Result<ModReLUNetwork> {
    Ok(extractor(radius, eps, true)?.with_meta(meta_of(PrimitiveKind::Im, radius, eps).to_meta()))
}

pub fn re_node(radius: f64, eps: f64) -> Result<NetRef> {
    Ok(StructuredNet::leaf(extractor(radius, eps, false)?))
}

pub fn im_node(radius: f64, eps: f64) -> Result<NetRef> {
    Ok(StructuredNet::leaf(extractor(radius, eps, true)?))
}

/// ReLU of the extracted part shifted by `c`, as extractor then outer block.
pub fn relu_node(extractor: &NetRef, radius: f64, c: f64) -> Result<NetRef> {
    if !c.is_finite() {
        return Err(Error::Parameter("shift must be finite".into()));
    }
    StructuredNet::serial(vec![extractor.clone(), StructuredNet::leaf(relu_outer(radius, c)?)])
}

pub fn build_relu_re(radius: f64, c: f64, eps: f64) -> Result<ModReLUNetwork> {
    let node = relu_node(&re_node(radius, eps)?, radius, c)?;
    let spec = meta_of(PrimitiveKind::ReluRe, radius, eps).with_shift(c);
    Ok(node.flatten()?.with_meta(spec.to_meta()))
}

pub fn build_relu_im(radius: f64, c: f64, eps: f64) -> Result<ModReLUNetwork> {
    let node = relu_node(&im_node(radius, eps)?, radius, c)?;
    let spec = meta_of(PrimitiveKind::ReluIm, radius, eps).with_shift(c);
    Ok(node.flatten()?.with_meta(spec.to_meta()))
}

/// `ϱ(Re z) + ϱ(Re(−z))`.
pub fn abs_node(radius: f64, eps: f64) -> Result<NetRef> {
    let relu = relu_node(&re_node(radius, eps)?, radius, 0.0)?;
    let neg = StructuredNet::leaf(single(-ONE, ZERO)?);
    StructuredNet::weighted_sum(
        vec![relu.clone(), StructuredNet::serial(vec![neg, relu])?],
        vec![ONE, ONE],
        ZERO,
    )
}

pub fn build_abs_re(radius: f64, eps: f64) -> Result<ModReLUNetwork> {
    check_radius(radius, 1.0)?;
    check_eps(eps, 1.0)?;
    Ok(abs_node(radius, eps)?.flatten()?.with_meta(meta_of(PrimitiveKind::AbsRe, radius, eps).to_meta()))
}

/// Tent map of the real part; the three ReLU branches share one extractor.
pub fn g_node(radius: f64, eps: f64) -> Result<NetRef> {
    let re = re_node(radius, eps)?;
    let branches = [0.0, -0.5, -1.0]
        .into_iter()
        .map(|c| relu_node(&re, radius, c))
        .collect::<Result<Vec<_>>>()?;
    StructuredNet::weighted_sum(
        branches,
        vec![C64::new(2.0, 0.0), C64::new(-4.0, 0.0), C64::new(2.0, 0.0)],
        ZERO,
    )
}

pub fn build_g_re(radius: f64, eps: f64) -> Result<ModReLUNetwork> {
    Ok(g_node(radius, eps)?.flatten()?.with_meta(meta_of(PrimitiveKind::GRe, radius, eps).to_meta()))
}

/// `Φ = f_{m,R,ε} ∘ Abs` at internal accuracy `eps`; returns the network and `m`.
pub fn square_node(radius: f64, eps: f64) -> Result<(NetRef, u32)> {
    check_radius(radius, 3.0)?;
    check_eps(eps, 1f64.min(radius / 8.0))?;
    let m = sawtooth_count(eps);
    let mu = m as usize;
    let depth = (2 * mu + 1).max(2);
    let pad = radius + 1.0;
    let mut branches = vec![StructuredNet::pad_depth(&re_node(radius, eps)?, depth, pad)?];
    let mut coeffs = vec![ONE];
    if m > 0 {
        let g = g_node(radius + m as f64, eps)?;
        let mut scale = 1.0;
        for s in 1..=mu {
            scale *= 0.25;
            let chain = StructuredNet::serial(vec![g.clone(); s])?;
            branches.push(StructuredNet::pad_depth(&chain, depth, pad)?);
            coeffs.push(C64::new(-scale, 0.0));
        }
    }
    let f = StructuredNet::weighted_sum(branches, coeffs, ZERO)?;
    Ok((StructuredNet::serial(vec![abs_node(radius, eps)?, f])?, m))
}

fn with_meta(node: NetRef, spec: &PrimitiveSpec) -> StructuredNet {
    Arc::unwrap_or_clone(node).with_meta(spec.to_meta())
}

pub fn build_square_re(radius: f64, eps_target: f64) -> Result<StructuredNet> {
    check_eps(eps_target, f64::INFINITY)?;
    let (node, _) = square_node(radius, eps_target / 18.0)?;
    Ok(with_meta(node, &meta_of(PrimitiveKind::SquareRe, radius, eps_target)))
}

pub fn build_square_im(radius: f64, eps_target: f64) -> Result<StructuredNet> {
    check_eps(eps_target, f64::INFINITY)?;
    let (node, _) = square_node(radius, eps_target / 18.0)?;
    let rot = StructuredNet::leaf(single(MINUS_I, ZERO)?);
    let net = StructuredNet::serial(vec![rot, node])?;
    Ok(with_meta(net, &meta_of(PrimitiveKind::SquareIm, radius, eps_target)))
}

fn check_product(radius: f64, bound: f64, eps_target: f64) -> Result<()> {
    check_radius(radius, 3.0)?;
    if !(bound.is_finite() && bound >= 1.0) {
        return Err(Error::Parameter(format!("bound M must be at least 1, got {bound}")));
    }
    check_eps(eps_target, 0.375)
}

/// `Re z · Re w` by polarization, accurate to `eps_target` on the certified domain.
pub fn product_re_node(radius: f64, bound: f64, eps_target: f64) -> Result<NetRef> {
    check_product(radius, bound, eps_target)?;
    let (phi, _) = square_node(radius, eps_target / (6.0 * bound * bound) / 18.0)?;
    let s = C64::new(0.5 / bound, 0.0);
    let scales = [vec![s, s], vec![s, ZERO], vec![ZERO, s]];
    let branches = scales
        .into_iter()
        .map(|w| StructuredNet::serial(vec![linear(1, 2, w)?, phi.clone()]))
        .collect::<Result<Vec<_>>>()?;
    let k = 2.0 * bound * bound;
    StructuredNet::weighted_sum(
        branches,
        vec![C64::new(k, 0.0), C64::new(-k, 0.0), C64::new(-k, 0.0)],
        ZERO,
    )
}

pub fn build_product_re(radius: f64, bound: f64, eps_target: f64) -> Result<StructuredNet> {
    let node = product_re_node(radius, bound, eps_target)?;
    let spec = meta_of(PrimitiveKind::ProductRe, radius, eps_target).with_bound(bound);
    Ok(with_meta(node, &spec))
}

/// Complex product `zw` from four real-part products of rotated inputs.
pub fn product_node(radius: f64, bound: f64, eps_target: f64) -> Result<NetRef> {
    check_product(radius, bound, eps_target)?;
    let p = product_re_node(radius, bound, eps_target / 4.0)?;
    let rot = |a: C64, b: C64| linear(2, 2, vec![a, ZERO, ZERO, b]);
    let branches = vec![
        p.clone(),
        StructuredNet::serial(vec![rot(MINUS_I, MINUS_I)?, p.clone()])?,
        StructuredNet::serial(vec![rot(ONE, MINUS_I)?, p.clone()])?,
        StructuredNet::serial(vec![rot(MINUS_I, ONE)?, p])?,
    ];
    let i = C64::new(0.0, 1.0);
    StructuredNet::weighted_sum(branches, vec![ONE, -ONE, i, i], ZERO)
}

pub fn build_product(radius: f64, bound: f64, eps_target: f64) -> Result<StructuredNet> {
    let node = product_node(radius, bound, eps_target)?;
    let spec = meta_of(PrimitiveKind::Product, radius, eps_target).with_bound(bound);
    Ok(with_meta(node, &spec))
}

/// Largest modulus of each factor for which [`build_product`] is certified.
pub fn product_domain(radius: f64, bound: f64) -> f64 {
    radius.min(bound)
}

fn psi(unit: C64) -> ModReLUNetwork {
    let half = unit * 0.5;
    ModReLUNetwork::new(vec![
        AffineLayer::new(2, 1, vec![ONE, ONE], vec![half, -half]).expect("fixed shape"),
        AffineLayer::new(1, 2, vec![-ONE, ONE], vec![unit]).expect("fixed shape"),
    ])
    .expect("fixed shape")
}

pub fn psi_re_net() -> ModReLUNetwork {
    psi(ONE)
}

pub fn psi_im_net() -> ModReLUNetwork {
    psi(C64::new(0.0, 1.0))
}

pub fn build_psi_re() -> ModReLUNetwork {
    psi_re_net().with_meta(meta_of(PrimitiveKind::PsiRe, 1.0, 0.0).to_meta())
}

pub fn build_psi_im() -> ModReLUNetwork {
    psi_im_net().with_meta(meta_of(PrimitiveKind::PsiIm, 1.0, 0.0).to_meta())
}

#[cfg(test)]
mod tests {
    use super::reference::*;
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn scale_is_short_mantissa() {
        for (r, e) in [(2.0, 0.1), (2.0, 0.001), (4.0, 1e-9), (7.5, 0.37)] {
            let t = extractor_scale(r, e).unwrap();
            let target = (2.0 + 2.0 * r) / e;
            assert!(t >= target && t < target * 1.126, "{t} {target}");
            let (mant, _) = frexp(t);
            assert_eq!((mant * 16.0).fract(), 0.0);
        }
    }

    fn frexp(x: f64) -> (f64, i32) {
        let e = x.log2().floor() as i32;
        (x / 2f64.powi(e), e)
    }

    #[test]
    fn re_leaf_counts() {
        let net = build_re(2.0, 0.01).unwrap();
        let s = net.stats();
        assert_eq!(s.hidden_neurons(), 3);
        assert_eq!(s.weight_count, 10);
        assert_eq!(s.depth, 2);
    }

    #[test]
    fn re_matches_reference() {
        let (r, e) = (2.0, 0.01);
        let net = build_re(r, e).unwrap();
        let h = 1.0 / extractor_scale(r, e).unwrap();
        for z in [c(1.5, -0.5), c(-2.0, 0.0), c(0.0, 2.0), c(0.3, 0.3)] {
            let out = net.evaluate(&[z]).unwrap()[0];
            assert!((out - ref_re_h(h, z)).norm() < 1e-9);
            assert!((out - z.re).norm() <= e);
        }
        let im = build_im(r, e).unwrap();
        let out = im.evaluate(&[c(0.4, -1.2)]).unwrap()[0];
        assert!((out - (-1.2)).norm() <= e);
    }

    #[test]
    fn relu_counts_and_values() {
        let node = relu_node(&re_node(2.0, 0.01).unwrap(), 2.0, -1.0).unwrap();
        let cs = node.component_stats();
        assert_eq!((cs.hidden_neurons, cs.weight_count), (4, 13));
        let flat = build_relu_re(2.0, -1.0, 0.01).unwrap();
        assert_eq!(flat.depth(), 3);
        let out = flat.evaluate(&[c(0.5, 0.0)]).unwrap()[0];
        assert!(out.norm() <= 0.01);
        let out = flat.evaluate(&[c(1.7, 0.9)]).unwrap()[0];
        assert!((out - 0.7).norm() <= 0.01);
    }

    #[test]
    fn abs_and_tent() {
        let abs = build_abs_re(2.0, 0.01).unwrap();
        for x in [-0.7, 0.7, 0.0] {
            let out = abs.evaluate(&[c(x, 0.3)]).unwrap()[0];
            assert!((out - x.abs()).norm() <= 0.02);
        }
        let g = build_g_re(2.0, 0.01).unwrap();
        for x in [-0.5, 0.1, 0.25, 0.5, 0.8, 1.4] {
            let out = g.evaluate(&[c(x, -0.2)]).unwrap()[0];
            assert!((out - ref_g(x)).norm() <= 0.08);
        }
    }

    #[test]
    fn square_depth_and_value() {
        let spec = PrimitiveSpec::new(PrimitiveKind::SquareRe, 3.0, 0.2);
        let net = build_square_re(3.0, 0.2).unwrap();
        assert_eq!(net.depth(), spec.predicted_depth());
        for z in [c(0.5, 1.0), c(-0.9, 0.2), c(0.0, 2.5)] {
            let out = net.evaluate(&[z]).unwrap()[0];
            assert!((out - z.re * z.re).norm() <= 0.2, "{z} {out}");
        }
        let im = build_square_im(3.0, 0.2).unwrap();
        let out = im.evaluate(&[c(1.5, 0.6)]).unwrap()[0];
        assert!((out - 0.36).norm() <= 0.2);
    }

    #[test]
    fn product_values() {
        let p = build_product(3.0, 1.0, 0.1).unwrap();
        let out = p.evaluate(&[c(0.6, 0.6), c(0.6, -0.6)]).unwrap()[0];
        assert!((out - 0.72).norm() <= 0.1, "{out}");
        let pr = build_product_re(3.0, 1.0, 0.1).unwrap();
        let out = pr.evaluate(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap()[0];
        assert!((out - 1.0).norm() <= 0.1);
    }

    #[test]
    fn psi_values() {
        let p = build_psi_re();
        for (x, y) in [(0.25, 1.0), (1.0, 0.5), (2.0, 0.0), (-1.2, 0.3)] {
            let out = p.evaluate(&[c(x, 0.0)]).unwrap()[0];
            assert!((out - y).norm() < 1e-12);
            assert!((y - ref_psi(x)).abs() < 1e-12);
        }
        let out = build_psi_im().evaluate(&[c(0.0, 0.25)]).unwrap()[0];
        assert!((out - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_re(0.5, 0.1).is_err());
        assert!(build_re(2.0, 1.0).is_err());
        assert!(build_square_re(2.0, 0.1).is_err());
        assert!(build_product(3.0, 0.5, 0.1).is_err());
        assert!(build_identity(0.0).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in PrimitiveKind::ALL {
            assert_eq!(k.name().parse::<PrimitiveKind>().unwrap(), k);
            assert_eq!(serde_json::to_value(k).unwrap(), json!(k.name()));
        }
    }
}
