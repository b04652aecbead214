//! Empirical checks: sup-norm errors over certified domains, the
//! inequalities behind the constructions, and scaling sweeps.

pub mod oracles;
pub mod sampling;
pub mod suites;
pub mod sweep;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activation::modrelu;
use crate::error::{Error, Result};
use crate::json::AnyNet;
use crate::network::ModReLUNetwork;
use crate::structured::StructuredNet;
use crate::C64;

pub use sampling::{Domain, SampleRng};

/// Anything that maps `ℂ^{d_in}` to `ℂ`.
pub trait Evaluate: Sync {
    fn d_in(&self) -> usize;
    fn eval_point(&self, z: &[C64]) -> Result<C64>;
}

impl Evaluate for ModReLUNetwork {
    fn d_in(&self) -> usize {
        ModReLUNetwork::d_in(self)
    }
    fn eval_point(&self, z: &[C64]) -> Result<C64> {
        Ok(self.evaluate(z)?[0])
    }
}

impl Evaluate for StructuredNet {
    fn d_in(&self) -> usize {
        StructuredNet::d_in(self)
    }
    fn eval_point(&self, z: &[C64]) -> Result<C64> {
        Ok(self.evaluate(z)?[0])
    }
}

impl Evaluate for AnyNet {
    fn d_in(&self) -> usize {
        AnyNet::d_in(self)
    }
    fn eval_point(&self, z: &[C64]) -> Result<C64> {
        Ok(self.evaluate(z)?[0])
    }
}

/// Outcome of one bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub claim: String,
    pub samples: usize,
    pub max_error: f64,
    pub bound: f64,
    pub pass: bool,
    /// Where the maximum was attained, as `[re, im]` pairs.
    pub max_location: Vec<[f64; 2]>,
    pub grid_max: f64,
    pub random_max: f64,
    pub runtime_ms: f64,
}

impl VerificationReport {
    fn new(claim: &str, samples: usize, bound: f64) -> Self {
        Self {
            claim: claim.to_string(),
            samples,
            max_error: 0.0,
            bound,
            pass: true,
            max_location: Vec::new(),
            grid_max: 0.0,
            random_max: 0.0,
            runtime_ms: 0.0,
        }
    }

    fn finish(mut self, start: Instant) -> Self {
        self.max_error = self.grid_max.max(self.random_max);
        self.pass = self.max_error <= self.bound;
        self.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        self
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// One status line.
    pub fn summary(&self) -> String {
        format!(
            "{} {}: max error {:.3e} vs bound {:.3e} over {} samples ({:.0} ms)",
            if self.pass { "PASS" } else { "FAIL" },
            self.claim,
            self.max_error,
            self.bound,
            self.samples,
            self.runtime_ms
        )
    }
}

fn locate(z: &[C64]) -> Vec<[f64; 2]> {
    z.iter().map(|z| [z.re, z.im]).collect()
}

/// Largest value and its position, first occurrence winning ties.
fn ordered_max(errors: &[f64]) -> Option<(usize, f64)> {
    errors.iter().copied().enumerate().fold(None, |best, (i, e)| match best {
        Some((_, b)) if e <= b => best,
        _ => Some((i, e)),
    })
}

/// Sup of `|net(z) − reference(z)|` over a grid and `samples` random points.
pub fn sup_error<N, F>(
    claim: &str,
    net: &N,
    reference: F,
    domain: Domain,
    bound: f64,
    samples: usize,
    seed: u64,
) -> Result<VerificationReport>
where
    N: Evaluate + ?Sized,
    F: Fn(&[C64]) -> C64 + Sync,
{
    sup_weighted_error(claim, net, reference, |_| 1.0, domain, bound, samples, seed)
}

/// Sup of `|net(z) − reference(z)| / weight(z)`.
#[allow(clippy::too_many_arguments)]
pub fn sup_weighted_error<N, F, W>(
    claim: &str,
    net: &N,
    reference: F,
    weight: W,
    domain: Domain,
    bound: f64,
    samples: usize,
    seed: u64,
) -> Result<VerificationReport>
where
    N: Evaluate + ?Sized,
    F: Fn(&[C64]) -> C64 + Sync,
    W: Fn(&[C64]) -> f64 + Sync,
{
    if samples == 0 {
        return Err(Error::Parameter("at least one sample is required".into()));
    }
    domain.validate()?;
    if net.d_in() != domain.dim() {
        return Err(Error::Dimension(format!(
            "network takes {} inputs but the domain has {} coordinates",
            net.d_in(),
            domain.dim()
        )));
    }
    let start = Instant::now();
    let grid = domain.grid(samples);
    let mut rng = SampleRng::new(seed);
    let random: Vec<Vec<C64>> = (0..samples).map(|_| domain.sample(&mut rng)).collect();
    let errors = |pts: &[Vec<C64>]| -> Result<Vec<f64>> {
        pts.par_iter()
            .map(|z| {
                let e = (net.eval_point(z)? - reference(z)).norm() / weight(z);
                Ok(if e.is_nan() { f64::INFINITY } else { e })
            })
            .collect()
    };
    let grid_err = errors(&grid)?;
    let rand_err = errors(&random)?;
    let mut report = VerificationReport::new(claim, grid.len() + random.len(), bound);
    let g = ordered_max(&grid_err);
    let r = ordered_max(&rand_err);
    report.grid_max = g.map_or(0.0, |(_, e)| e);
    report.random_max = r.map_or(0.0, |(_, e)| e);
    report.max_location = match (g, r) {
        (Some((gi, ge)), Some((_, re))) if ge >= re => locate(&grid[gi]),
        (_, Some((ri, _))) => locate(&random[ri]),
        (Some((gi, _)), None) => locate(&grid[gi]),
        (None, None) => Vec::new(),
    };
    Ok(report.finish(start))
}

/// `|σ(z) − σ(w)| − |z − w|` over pairs stratified by which of `z, w` lie in
/// the unit disk; the reported error is the largest excess.
pub fn check_lipschitz(samples: usize, seed: u64) -> VerificationReport {
    let start = Instant::now();
    let mut report = VerificationReport::new("modrelu_lipschitz", samples, 1e-12);
    let per = samples.div_ceil(4);
    let results: Vec<(f64, [C64; 2])> = (0..4u64)
        .into_par_iter()
        .map(|branch| {
            let mut rng = SampleRng::new(seed.wrapping_mul(4).wrapping_add(branch));
            let mut draw = |inside: bool| if inside { rng.disk(1.0) } else { rng.annulus(1.0, 10.0) };
            let mut worst = (f64::NEG_INFINITY, [C64::new(0.0, 0.0); 2]);
            for _ in 0..per {
                let z = draw(branch & 1 == 0);
                let w = draw(branch & 2 == 0);
                let excess = (modrelu(z) - modrelu(w)).norm() - (z - w).norm();
                if excess > worst.0 {
                    worst = (excess, [z, w]);
                }
            }
            worst
        })
        .collect();
    let (excess, pair) = results
        .into_iter()
        .fold((f64::NEG_INFINITY, [C64::new(0.0, 0.0); 2]), |a, b| if b.0 > a.0 { b } else { a });
    report.samples = 4 * per;
    report.random_max = excess;
    report.grid_max = excess;
    report.max_location = locate(&pair);
    report.finish(start)
}

/// Sets the size of the global thread pool from `MODRELU_THREADS`
/// (0 or unset: one thread per core). Later calls have no effect.
pub fn init_threads() {
    let n = std::env::var("MODRELU_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok());
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n.unwrap_or(0)).build_global();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{build_identity, build_re};

    #[test]
    fn identity_is_exact() {
        let id = build_identity(2.0).unwrap();
        let r = sup_error("id", &id, |z| z[0], Domain::disk(2.0), 1e-10, 10_000, 1).unwrap();
        assert!(r.pass, "{}", r.summary());
    }

    #[test]
    fn deterministic_reports() {
        let net = build_re(2.0, 0.01).unwrap();
        let run = || {
            let mut r =
                sup_error("re", &net, |z| C64::new(z[0].re, 0.0), Domain::disk(2.0), 0.01, 500, 9)
                    .unwrap();
            r.runtime_ms = 0.0;
            r
        };
        let a = run();
        assert!(a.pass);
        assert_eq!(a, run());
    }

    #[test]
    fn lipschitz_small() {
        let r = check_lipschitz(10_000, 7);
        assert!(r.pass, "{}", r.summary());
        assert!(r.max_error <= 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let net = build_re(2.0, 0.01).unwrap();
        let dom = Domain::Disk { radius: 1.0, dim: 2 };
        assert!(sup_error("x", &net, |_| C64::new(0.0, 0.0), dom, 1.0, 10, 0).is_err());
    }
}
