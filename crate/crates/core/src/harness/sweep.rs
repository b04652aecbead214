//! Compile-and-verify sweeps over accuracies.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{sup_error, Domain};
use crate::compiler::{catalog, compile};
use crate::error::{Error, Result};
use crate::C64;

pub const CSV_HEADER: &str = "epsilon,depth,weights,max_weight,sup_error,build_ms,eval_ms";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub eps: Vec<f64>,
    pub d: usize,
    pub n: usize,
    pub target: String,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub depth: usize,
    pub weights: usize,
    pub max_weight: f64,
    pub sup_error: f64,
    pub build_ms: f64,
    pub eval_ms: f64,
    /// Set when this accuracy could not be compiled or evaluated.
    pub failure: Option<String>,
}

impl SweepRow {
    pub fn within_bound(&self) -> bool {
        self.failure.is_none() && self.sup_error <= self.epsilon
    }
}

/// Measured rows and fitted growth rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    /// Slope of `ln(weights)` against `ln(1/ε)`.
    pub weight_slope: f64,
    /// Slope of `ln(max_weight)` against `ln(1/ε)`.
    pub max_weight_slope: f64,
    /// `depth / ln(1/ε)` at the largest ε.
    pub depth_constant: f64,
    /// Largest `depth / (c ln(1/ε))` over the rows.
    pub depth_ratio_max: f64,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:e},{:e},{:.3},{:.3}",
                r.epsilon,
                r.depth,
                r.weights,
                r.max_weight,
                if r.failure.is_some() { f64::NAN } else { r.sup_error },
                r.build_ms,
                r.eval_ms
            );
        }
        s
    }

    pub fn all_within_bound(&self) -> bool {
        self.rows.iter().all(SweepRow::within_bound)
    }

    /// Monotone nonincreasing observed error along decreasing ε.
    pub fn errors_monotone(&self) -> bool {
        let mut rows: Vec<&SweepRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
        rows.windows(2).all(|w| w[1].sup_error <= w[0].sup_error)
    }
}

/// Least-squares slope of `y` on `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

fn run_row(cfg: &SweepConfig, eps: f64) -> Result<SweepRow> {
    let target = catalog(&cfg.target, cfg.d, cfg.n)?;
    let start = Instant::now();
    let net = compile(&target, eps)?;
    let build_ms = start.elapsed().as_secs_f64() * 1e3;
    let stats = net.stats();
    let start = Instant::now();
    let d = cfg.d;
    let report = sup_error(
        &format!("compiled_{}(eps={eps})", cfg.target),
        &net,
        |z| {
            let x: Vec<f64> = z.iter().map(|z| z.re).chain(z.iter().map(|z| z.im)).collect();
            let (re, im) = target.eval(&x);
            C64::new(re, im)
        },
        Domain::Cube { d },
        eps,
        cfg.samples,
        cfg.seed,
    )?;
    Ok(SweepRow {
        epsilon: eps,
        depth: stats.depth,
        weights: stats.weight_count,
        max_weight: stats.max_weight_magnitude,
        sup_error: report.max_error,
        build_ms,
        eval_ms: start.elapsed().as_secs_f64() * 1e3,
        failure: None,
    })
}

/// Compiles and verifies the target at each accuracy. A failing accuracy
/// is recorded in its row and the sweep continues.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    if cfg.eps.is_empty() {
        return Err(Error::Parameter("no accuracies given".into()));
    }
    if let Some(e) = cfg.eps.iter().find(|e| !(**e > 0.0 && **e < 0.375)) {
        return Err(Error::Parameter(format!("accuracy must lie in (0, 3/8), got {e}")));
    }
    catalog(&cfg.target, cfg.d, cfg.n)?;
    let rows: Vec<SweepRow> = cfg
        .eps
        .iter()
        .map(|&eps| {
            run_row(cfg, eps).unwrap_or_else(|e| SweepRow {
                epsilon: eps,
                depth: 0,
                weights: 0,
                max_weight: 0.0,
                sup_error: f64::INFINITY,
                build_ms: 0.0,
                eval_ms: 0.0,
                failure: Some(e.to_string()),
            })
        })
        .collect();
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.failure.is_none()).collect();
    let lx: Vec<f64> = ok.iter().map(|r| (1.0 / r.epsilon).ln()).collect();
    let weight_slope = fit_slope(&lx, &ok.iter().map(|r| (r.weights as f64).ln()).collect::<Vec<_>>());
    let max_weight_slope = fit_slope(&lx, &ok.iter().map(|r| r.max_weight.ln()).collect::<Vec<_>>());
    let (depth_constant, depth_ratio_max) = match ok.iter().max_by(|a, b| a.epsilon.total_cmp(&b.epsilon)) {
        Some(top) => {
            let c = top.depth as f64 / (1.0 / top.epsilon).ln();
            let worst = ok
                .iter()
                .map(|r| r.depth as f64 / (c * (1.0 / r.epsilon).ln()))
                .fold(0.0, f64::max);
            (c, worst)
        }
        None => (f64::NAN, f64::NAN),
    };
    Ok(SweepResult { config: cfg.clone(), rows, weight_slope, max_weight_slope, depth_constant, depth_ratio_max })
}
