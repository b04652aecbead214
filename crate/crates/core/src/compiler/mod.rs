//! Compiles a smooth target on the complex unit cube into a network:
//! a partition-of-unity Taylor approximant realized through chained
//! approximate products.

pub mod target;

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::layer::AffineLayer;
use crate::network::ModReLUNetwork;
use crate::primitives::reference::ref_psi;
use crate::primitives::{im_node, product_node, psi_im_net, psi_re_net, re_node};
use crate::structured::{NetRef, StructuredNet};
use crate::C64;

pub use target::{catalog, ComplexTarget, TargetFunction, CATALOG};

/// Radius and factor bound of the chained products.
pub const CHAIN_RADIUS: f64 = 4.0;

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// `2^{2d} d^n / n! · N^{−n}`.
pub fn step1_bound(d: usize, n: usize, big_n: u32) -> f64 {
    4f64.powi(d as i32) * (d as f64).powi(n as i32) / factorial(n as u32)
        * (big_n as f64).powi(-(n as i32))
}

/// Smallest `N` with `N ≥ (n!·ε / (2·2^{2d} d^n))^{−1/n}`.
pub fn choose_n(eps: f64, d: usize, n: usize) -> Result<u32> {
    if !(eps > 0.0 && eps < 0.375) {
        return Err(Error::Parameter(format!("accuracy must lie in (0, 3/8), got {eps}")));
    }
    if d == 0 || n == 0 {
        return Err(Error::Parameter("d and n must be positive".into()));
    }
    let base = factorial(n as u32) * eps / (2.0 * 4f64.powi(d as i32) * (d as f64).powi(n as i32));
    let x = base.powf(-1.0 / n as f64);
    let mut big_n = x.ceil().max(1.0) as u32;
    if big_n > 1 && ((big_n - 1) as f64) >= x * (1.0 - 1e-12) {
        big_n -= 1;
    }
    while step1_bound(d, n, big_n) > eps / 2.0 {
        big_n += 1;
    }
    Ok(big_n)
}

/// All `α ∈ ℕ₀^{dim}` with `|α| < n`, in lexicographic order.
pub fn multi_indices(dim: usize, n: usize) -> Vec<Vec<u32>> {
    fn rec(dim: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == dim {
            out.push(cur.clone());
            return;
        }
        for a in 0..=left {
            cur.push(a);
            rec(dim, left - a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(dim, n as u32 - 1, &mut Vec::with_capacity(dim), &mut out);
    }
    out
}

/// All grid indices `m ∈ {0, …, 2N}^{dim}`, last coordinate fastest.
pub fn grid_indices(dim: usize, big_n: u32) -> Vec<Vec<u32>> {
    let side = 2 * big_n + 1;
    let total = (side as usize).pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let mut m = vec![0u32; dim];
            for slot in m.iter_mut().rev() {
                *slot = (idx % side as usize) as u32;
                idx /= side as usize;
            }
            m
        })
        .collect()
}

/// Accuracy budget and sizes of one compilation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompilerPlan {
    pub d: usize,
    pub n: usize,
    /// Requested accuracy for the complex output.
    pub eps: f64,
    /// Accuracy budget of each real component.
    pub eps_component: f64,
    #[serde(rename = "N")]
    pub big_n: u32,
    pub eps_tilde: f64,
    pub delta: f64,
    /// Number of `(m, α)` terms.
    #[serde(rename = "S")]
    pub terms: u64,
    pub max_factors: usize,
    pub step1_bound: f64,
    /// Accuracy of the real and imaginary part extractors.
    pub extractor_eps: f64,
    pub multi_indices: Vec<Vec<u32>>,
}

impl CompilerPlan {
    pub fn new(d: usize, n: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.375) {
            return Err(Error::Parameter(format!("accuracy must lie in (0, 3/8), got {eps}")));
        }
        let eps_component = eps / std::f64::consts::SQRT_2;
        let big_n = choose_n(eps_component, d, n)?;
        let indices = multi_indices(2 * d, n);
        let side = (2 * big_n + 1) as u64;
        let terms = side.pow(2 * d as u32) * binomial((2 * d + n - 1) as u64, (2 * d) as u64);
        debug_assert_eq!(terms, side.pow(2 * d as u32) * indices.len() as u64);
        let eps_tilde = eps_component / (6.0 * (2 * d + n) as f64 * terms as f64);
        let delta = eps_tilde * eps_tilde;
        Ok(Self {
            d,
            n,
            eps,
            eps_component,
            big_n,
            eps_tilde,
            delta,
            terms,
            max_factors: 2 * d + n - 1,
            step1_bound: step1_bound(d, n, big_n),
            extractor_eps: delta / (8.0 * big_n as f64),
            multi_indices: indices,
        })
    }

    /// Grid point `m/2N`.
    pub fn node(&self, m: &[u32]) -> Vec<f64> {
        m.iter().map(|&k| k as f64 / (2 * self.big_n) as f64).collect()
    }
}

/// `φ_m(x) = Π_k ψ(4N x_k − 2m_k)`.
pub fn ref_phi(big_n: u32, m: &[u32], x: &[f64]) -> f64 {
    let s = 4.0 * big_n as f64;
    m.iter().zip(x).map(|(&mk, &xk)| ref_psi(s * xk - 2.0 * mk as f64)).product()
}

/// Grid indices whose bump does not vanish at `x`.
fn active_indices(big_n: u32, x: &[f64]) -> Vec<Vec<u32>> {
    let per_axis: Vec<Vec<u32>> = x
        .iter()
        .map(|&xk| {
            (0..=2 * big_n)
                .filter(|&m| ref_psi(4.0 * big_n as f64 * xk - 2.0 * m as f64) != 0.0)
                .collect()
        })
        .collect();
    let mut out = vec![Vec::new()];
    for axis in &per_axis {
        out = out
            .into_iter()
            .flat_map(|pre| {
                axis.iter().map(move |&m| {
                    let mut v = pre.clone();
                    v.push(m);
                    v
                })
            })
            .collect();
    }
    out
}

/// `Σ_m φ_m(x)`.
pub fn ref_partition_of_unity(big_n: u32, x: &[f64]) -> f64 {
    active_indices(big_n, x).iter().map(|m| ref_phi(big_n, m, x)).sum()
}

/// Taylor coefficient `D^α f(m/2N) / α!`.
pub fn taylor_coefficient(f: &TargetFunction, node: &[f64], alpha: &[u32]) -> Result<f64> {
    let denom: f64 = alpha.iter().map(|&a| factorial(a)).product();
    Ok(f.deriv(alpha, node)? / denom)
}

/// `f_*(x) = Σ_m φ_m(x) P_m(x)` with `P_m` the degree `n − 1` Taylor
/// polynomial of `f` at `m/2N`.
pub fn reference_f_star(f: &TargetFunction, big_n: u32, x: &[f64]) -> Result<f64> {
    if x.len() != 2 * f.d {
        return Err(Error::InputShape { expected: 2 * f.d, got: x.len() });
    }
    let indices = multi_indices(2 * f.d, f.n);
    let mut acc = 0.0;
    for m in active_indices(big_n, x) {
        let node: Vec<f64> = m.iter().map(|&k| k as f64 / (2 * big_n) as f64).collect();
        let mut p = 0.0;
        for alpha in &indices {
            let mono: f64 = alpha
                .iter()
                .zip(x.iter().zip(&node))
                .map(|(&a, (&xi, &ni))| (xi - ni).powi(a as i32))
                .product();
            p += taylor_coefficient(f, &node, alpha)? * mono;
        }
        acc += ref_phi(big_n, &m, x) * p;
    }
    Ok(acc)
}

/// One factor `β_k` of a product term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Factor {
    /// Bump in the real part of `z_k` centred at grid index `m`.
    PartRe { k: usize, m: u32 },
    PartIm { k: usize, m: u32 },
    /// `Re z_k − m/2N`.
    MonoRe { k: usize, m: u32 },
    /// `i(Im z_k − m/2N)`.
    MonoIm { k: usize, m: u32 },
}

/// Factors of the term `(m, α)`: partition factors first, then monomials.
fn factors(d: usize, m: &[u32], alpha: &[u32]) -> Vec<Factor> {
    let mut out: Vec<Factor> = (0..d).map(|k| Factor::PartRe { k, m: m[k] }).collect();
    out.extend((0..d).map(|k| Factor::PartIm { k, m: m[d + k] }));
    for (l, &a) in alpha.iter().enumerate() {
        for _ in 0..a {
            out.push(if l < d {
                Factor::MonoRe { k: l, m: m[l] }
            } else {
                Factor::MonoIm { k: l - d, m: m[l] }
            });
        }
    }
    out
}

/// Shared subnetworks of one compilation.
struct Builder<'a> {
    plan: &'a CompilerPlan,
    re_nat: NetRef,
    im_nat: NetRef,
    psi_re: NetRef,
    psi_im: NetRef,
    product: NetRef,
    duplicate: NetRef,
    selects: Vec<NetRef>,
    betas: HashMap<Factor, NetRef>,
    chains: HashMap<Vec<Factor>, NetRef>,
}

fn affine_leaf(w: C64, b: C64) -> Result<NetRef> {
    let layer = AffineLayer::new(1, 1, vec![w], vec![b])?;
    Ok(StructuredNet::leaf(ModReLUNetwork::new(vec![layer])?))
}

impl<'a> Builder<'a> {
    fn new(plan: &'a CompilerPlan) -> Result<Self> {
        let d = plan.d;
        let zero = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let mut dup = vec![zero; 2 * d * d];
        for k in 0..d {
            dup[k * d + k] = one;
            dup[(d + k) * d + k] = one;
        }
        let duplicate = StructuredNet::leaf(ModReLUNetwork::new(vec![AffineLayer::new(
            2 * d,
            d,
            dup,
            vec![zero; 2 * d],
        )?])?);
        let selects = (0..d)
            .map(|k| {
                let mut w = vec![zero; d];
                w[k] = one;
                let layer = AffineLayer::new(1, d, w, vec![zero])?;
                Ok(StructuredNet::leaf(ModReLUNetwork::new(vec![layer])?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            plan,
            re_nat: re_node(CHAIN_RADIUS, plan.extractor_eps)?,
            im_nat: im_node(CHAIN_RADIUS, plan.extractor_eps)?,
            psi_re: StructuredNet::leaf(psi_re_net()),
            psi_im: StructuredNet::leaf(psi_im_net()),
            product: product_node(CHAIN_RADIUS, CHAIN_RADIUS, plan.eps_tilde)?,
            duplicate,
            selects,
            betas: HashMap::new(),
            chains: HashMap::new(),
        })
    }

    fn beta(&mut self, f: Factor) -> Result<NetRef> {
        if let Some(b) = self.betas.get(&f) {
            return Ok(b.clone());
        }
        let nn = self.plan.big_n as f64;
        let i = C64::new(0.0, 1.0);
        let (k, stages) = match f {
            Factor::PartRe { k, m } => (
                k,
                vec![
                    self.re_nat.clone(),
                    affine_leaf(C64::new(4.0 * nn, 0.0), C64::new(-2.0 * m as f64, 0.0))?,
                    self.psi_re.clone(),
                ],
            ),
            Factor::PartIm { k, m } => (
                k,
                vec![
                    self.im_nat.clone(),
                    affine_leaf(i * (4.0 * nn), i * (-2.0 * m as f64))?,
                    self.psi_im.clone(),
                ],
            ),
            Factor::MonoRe { k, m } => (
                k,
                vec![
                    self.re_nat.clone(),
                    affine_leaf(C64::new(1.0, 0.0), C64::new(-(m as f64) / (2.0 * nn), 0.0))?,
                ],
            ),
            Factor::MonoIm { k, m } => {
                (k, vec![self.im_nat.clone(), affine_leaf(i, i * (-(m as f64) / (2.0 * nn)))?])
            }
        };
        let mut chain = Vec::with_capacity(stages.len() + 1);
        if self.plan.d > 1 {
            chain.push(self.selects[k].clone());
        }
        chain.extend(stages);
        let net = StructuredNet::serial(chain)?;
        self.betas.insert(f, net.clone());
        Ok(net)
    }

    /// `γ_1 = β_1`, `γ_{j+1} = ×̃(β_{j+1}, γ_j)`.
    fn chain(&mut self, fs: &[Factor]) -> Result<NetRef> {
        if let Some(g) = self.chains.get(fs) {
            return Ok(g.clone());
        }
        let last = *fs.last().ok_or_else(|| Error::Dimension("empty factor list".into()))?;
        let net = if fs.len() == 1 {
            self.beta(last)?
        } else {
            let inner = self.chain(&fs[..fs.len() - 1])?;
            let beta = self.beta(last)?;
            let depth = inner.depth().max(beta.depth());
            let pair = StructuredNet::parallel(vec![
                StructuredNet::pad_depth(&beta, depth, CHAIN_RADIUS)?,
                StructuredNet::pad_depth(&inner, depth, CHAIN_RADIUS)?,
            ])?;
            StructuredNet::serial(vec![self.duplicate.clone(), pair, self.product.clone()])?
        };
        self.chains.insert(fs.to_vec(), net.clone());
        Ok(net)
    }
}

/// The networks `β_k` of the term `(m, α)`, in chain order.
pub fn build_beta_networks(plan: &CompilerPlan, m: &[u32], alpha: &[u32]) -> Result<Vec<NetRef>> {
    check_term(plan, m, alpha)?;
    let mut b = Builder::new(plan)?;
    factors(plan.d, m, alpha).into_iter().map(|f| b.beta(f)).collect()
}

/// Chained product of the `β_k` of the term `(m, α)`. It approximates
/// `i^p φ_m(x)(x − m/2N)^α` where `p` counts the factors carrying `i`.
pub fn build_f_mn(plan: &CompilerPlan, m: &[u32], alpha: &[u32]) -> Result<NetRef> {
    check_term(plan, m, alpha)?;
    let mut b = Builder::new(plan)?;
    b.chain(&factors(plan.d, m, alpha))
}

/// Power of `i` carried by the term network of `(m, α)`.
pub fn term_phase(d: usize, alpha: &[u32]) -> u32 {
    d as u32 + alpha[d..].iter().sum::<u32>()
}

fn check_term(plan: &CompilerPlan, m: &[u32], alpha: &[u32]) -> Result<()> {
    let dim = 2 * plan.d;
    if m.len() != dim || alpha.len() != dim {
        return Err(Error::Dimension(format!("grid and multi-indices need {dim} entries")));
    }
    if m.iter().any(|&k| k > 2 * plan.big_n) {
        return Err(Error::Parameter(format!("grid index out of range 0..={}", 2 * plan.big_n)));
    }
    if alpha.iter().sum::<u32>() as usize >= plan.n {
        return Err(Error::Parameter(format!("multi-index degree must be below {}", plan.n)));
    }
    Ok(())
}

/// `i^{−p}`.
fn i_pow_neg(p: u32) -> C64 {
    match p % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, -1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 1.0),
    }
}

/// Compiles `g = g_Re + i g_Im` on the complex unit cube to accuracy `eps`.
/// Input `z ∈ ℂ^d`, one complex output.
pub fn compile(target: &ComplexTarget, eps: f64) -> Result<StructuredNet> {
    let (d, n) = (target.d(), target.n());
    if target.im.d != d || target.im.n != n {
        return Err(Error::Dimension("target components disagree on d or n".into()));
    }
    let plan = CompilerPlan::new(d, n, eps)?;
    let mut builder = Builder::new(&plan)?;
    let grid = grid_indices(2 * d, plan.big_n);
    let mut nets = Vec::with_capacity(plan.terms as usize);
    let mut coeffs = Vec::with_capacity(plan.terms as usize);
    for m in &grid {
        let node = plan.node(m);
        for alpha in &plan.multi_indices {
            let a = C64::new(
                taylor_coefficient(&target.re, &node, alpha)?,
                taylor_coefficient(&target.im, &node, alpha)?,
            );
            nets.push(builder.chain(&factors(d, m, alpha))?);
            coeffs.push(a * i_pow_neg(term_phase(d, alpha)));
        }
    }
    let depth = nets.iter().map(|t| t.depth()).max().unwrap_or(1);
    let nets = nets
        .iter()
        .map(|t| StructuredNet::pad_depth(t, depth, CHAIN_RADIUS))
        .collect::<Result<Vec<_>>>()?;
    let root = StructuredNet::weighted_sum(nets, coeffs, C64::new(0.0, 0.0))?;
    let meta = json!({
        "target": { "re": target.re.name, "im": target.im.name, "d": d, "n": n },
        "plan": plan,
    });
    Ok(Arc::unwrap_or_clone(root).with_meta(meta))
}

/// `x = (Re z, Im z)`.
pub fn point_to_input(x: &[f64]) -> Vec<C64> {
    let d = x.len() / 2;
    (0..d).map(|k| C64::new(x[k], x[d + k])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn choose_n_examples() {
        assert_eq!(choose_n(0.1, 1, 1).unwrap(), 80);
        assert_eq!(choose_n(0.3, 1, 2).unwrap(), 4);
        assert!(choose_n(0.4, 1, 2).is_err());
        assert!(choose_n(0.0, 1, 2).is_err());
    }

    #[test]
    fn multi_index_count() {
        assert_eq!(multi_indices(2, 2).len(), 3);
        assert_eq!(multi_indices(4, 3).len(), 15);
        assert_eq!(multi_indices(2, 1), vec![vec![0, 0]]);
    }

    #[test]
    fn plan_budget() {
        let p = CompilerPlan::new(1, 2, 0.3).unwrap();
        assert_eq!(p.big_n, 5);
        assert_eq!(p.terms, 363);
        assert!(p.step1_bound <= p.eps_component / 2.0);
        assert_eq!(p.delta, p.eps_tilde * p.eps_tilde);
    }

    #[test]
    fn f_star_exact_for_polynomials() {
        let t = catalog("quad", 1, 3).unwrap();
        for x in [[0.1, 0.9], [0.5, 0.5], [1.0, 0.0], [0.37, 0.61]] {
            let v = reference_f_star(&t.re, 3, &x).unwrap();
            assert!((v - t.re.eval(&x)).abs() < 1e-12);
        }
        let t = catalog("affine", 1, 2).unwrap();
        let v = reference_f_star(&t.im, 4, &[0.2, 0.3]).unwrap();
        assert!((v - t.im.eval(&[0.2, 0.3])).abs() < 1e-12);
    }

    #[test]
    fn partition_of_unity() {
        for n in [1, 5, 20] {
            for x in [[0.0, 1.0], [0.123, 0.5], [0.999, 0.4]] {
                assert!((ref_partition_of_unity(n, &x) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn factor_counts() {
        assert_eq!(factors(1, &[0, 0], &[0, 0]).len(), 2);
        assert_eq!(factors(1, &[3, 1], &[1, 0]).len(), 3);
        assert_eq!(term_phase(1, &[0, 1]), 2);
    }
}
