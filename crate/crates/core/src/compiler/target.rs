//! Target functions on the unit cube of `ℝ^{2d}` with derivative oracles.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// `D^α f(x)`; `None` when the oracle does not provide that order.
pub type DerivFn = Arc<dyn Fn(&[u32], &[f64]) -> Option<f64> + Send + Sync>;

/// One real component of a target, as a function of
/// `x = (Re z_1, …, Re z_d, Im z_1, …, Im z_d) ∈ [0,1]^{2d}`.
#[derive(Clone)]
pub struct TargetFunction {
    pub name: String,
    pub d: usize,
    pub n: usize,
    pub sobolev_bound: f64,
    eval: EvalFn,
    deriv: Option<DerivFn>,
}

impl fmt::Debug for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetFunction")
            .field("name", &self.name)
            .field("d", &self.d)
            .field("n", &self.n)
            .field("sobolev_bound", &self.sobolev_bound)
            .field("analytic_derivatives", &self.deriv.is_some())
            .finish()
    }
}

impl TargetFunction {
    pub fn new(name: impl Into<String>, d: usize, n: usize, sobolev_bound: f64, eval: EvalFn) -> Self {
        Self { name: name.into(), d, n, sobolev_bound, eval, deriv: None }
    }

    pub fn with_deriv(mut self, deriv: DerivFn) -> Self {
        self.deriv = Some(deriv);
        self
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.deriv.is_some()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// `D^α f(x)`, from the oracle or else by central differences.
    pub fn deriv(&self, alpha: &[u32], x: &[f64]) -> Result<f64> {
        if alpha.iter().all(|&a| a == 0) {
            return Ok(self.eval(x));
        }
        match &self.deriv {
            Some(d) => d(alpha, x).ok_or_else(|| {
                Error::Unsupported(format!(
                    "target '{}' has no derivative of order {alpha:?}",
                    self.name
                ))
            }),
            None => {
                let order: u32 = alpha.iter().sum();
                let h = f64::EPSILON.powf(1.0 / (2.0 + order as f64));
                let mut alpha = alpha.to_vec();
                let mut x = x.to_vec();
                Ok(self.central_difference(&mut alpha, &mut x, h))
            }
        }
    }

    fn central_difference(&self, alpha: &mut [u32], x: &mut [f64], h: f64) -> f64 {
        let Some(k) = alpha.iter().position(|&a| a > 0) else {
            return self.eval(x);
        };
        alpha[k] -= 1;
        let x0 = x[k];
        x[k] = x0 + h;
        let plus = self.central_difference(alpha, x, h);
        x[k] = x0 - h;
        let minus = self.central_difference(alpha, x, h);
        x[k] = x0;
        alpha[k] += 1;
        (plus - minus) / (2.0 * h)
    }
}

/// Real and imaginary components of a complex target `g = g_Re + i g_Im`.
#[derive(Debug, Clone)]
pub struct ComplexTarget {
    pub re: TargetFunction,
    pub im: TargetFunction,
}

impl ComplexTarget {
    pub fn d(&self) -> usize {
        self.re.d
    }

    pub fn n(&self) -> usize {
        self.re.n
    }

    /// `g(z)` for `z ∈ ℂ^d` given as its real coordinates.
    pub fn eval(&self, x: &[f64]) -> (f64, f64) {
        (self.re.eval(x), self.im.eval(x))
    }
}

pub const CATALOG: [&str; 4] = ["constant", "affine", "quad", "sine"];

fn constant(name: &str, d: usize, n: usize, c: f64) -> TargetFunction {
    TargetFunction::new(name, d, n, c.abs(), Arc::new(move |_| c))
        .with_deriv(Arc::new(|_, _| Some(0.0)))
}

/// `Σ w_j x_j + b`.
fn affine(name: &str, d: usize, n: usize, w: Vec<f64>, b: f64) -> TargetFunction {
    let bound = w.iter().map(|v| v.abs()).sum::<f64>() + b.abs();
    let we = w.clone();
    TargetFunction::new(
        name,
        d,
        n,
        bound,
        Arc::new(move |x| we.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + b),
    )
    .with_deriv(Arc::new(move |alpha, _| {
        let order: u32 = alpha.iter().sum();
        Some(if order == 1 { w[alpha.iter().position(|&a| a == 1).expect("order one")] } else { 0.0 })
    }))
}

/// `c Σ_{(j,k) ∈ pairs} x_j x_k`.
fn quadratic(name: &str, d: usize, n: usize, pairs: Vec<(usize, usize)>, c: f64) -> TargetFunction {
    let bound = 2.0 * c.abs() * pairs.len() as f64;
    let p = pairs.clone();
    TargetFunction::new(
        name,
        d,
        n,
        bound,
        Arc::new(move |x| c * p.iter().map(|&(j, k)| x[j] * x[k]).sum::<f64>()),
    )
    .with_deriv(Arc::new(move |alpha, x| {
        let order: u32 = alpha.iter().sum();
        let mut acc = 0.0;
        for &(j, k) in &pairs {
            acc += match order {
                1 => {
                    let i = alpha.iter().position(|&a| a == 1).expect("order one");
                    (if i == j { x[k] } else { 0.0 }) + (if i == k { x[j] } else { 0.0 })
                }
                2 => {
                    let mut e = vec![0u32; alpha.len()];
                    e[j] += 1;
                    e[k] += 1;
                    if e == alpha { if j == k { 2.0 } else { 1.0 } } else { 0.0 }
                }
                _ => 0.0,
            };
        }
        Some(c * acc)
    }))
}

/// `A sin(k·x + φ)`.
fn sinusoid(name: &str, d: usize, n: usize, amp: f64, k: Vec<f64>, phase: f64) -> TargetFunction {
    let kmax = k.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let ke = k.clone();
    TargetFunction::new(
        name,
        d,
        n,
        amp * kmax.powi(n as i32),
        Arc::new(move |x| amp * (ke.iter().zip(x).map(|(k, x)| k * x).sum::<f64>() + phase).sin()),
    )
    .with_deriv(Arc::new(move |alpha, x| {
        let kx: f64 = k.iter().zip(x).map(|(k, x)| k * x).sum();
        let coef: f64 = k.iter().zip(alpha).map(|(k, &a)| k.powi(a as i32)).product();
        let order: u32 = alpha.iter().sum();
        Some(amp * coef * (kx + phase + order as f64 * std::f64::consts::FRAC_PI_2).sin())
    }))
}

/// Built-in targets by name, each with `W^{n,∞}` norm at most 1 per component.
pub fn catalog(name: &str, d: usize, n: usize) -> Result<ComplexTarget> {
    if d == 0 || n == 0 {
        return Err(Error::Parameter("d and n must be positive".into()));
    }
    let dim = 2 * d;
    let df = d as f64;
    let t = match name {
        "constant" => ComplexTarget {
            re: constant("constant.re", d, n, 0.5),
            im: constant("constant.im", d, n, 0.25),
        },
        "affine" => ComplexTarget {
            re: affine("affine.re", d, n, vec![1.0 / (4.0 * df); dim], 0.0),
            im: affine("affine.im", d, n, vec![-1.0 / (8.0 * df); dim], 0.25),
        },
        "quad" | "quadratic" => ComplexTarget {
            re: quadratic("quad.re", d, n, (0..dim).map(|j| (j, j)).collect(), 1.0 / (8.0 * df)),
            im: quadratic("quad.im", d, n, (0..d).map(|j| (j, j + d)).collect(), 1.0 / (8.0 * df)),
        },
        "sine" => {
            let alt = (0..dim).map(|j| if j < d { 1.0 } else { -1.0 }).collect();
            ComplexTarget {
                re: sinusoid("sine.re", d, n, 0.25, vec![1.0; dim], 0.3),
                im: sinusoid("sine.im", d, n, 0.25, alt, 1.1),
            }
        }
        other => {
            return Err(Error::Parameter(format!(
                "unknown target '{other}', expected one of {}",
                CATALOG.join(", ")
            )))
        }
    };
    Ok(t)
}
