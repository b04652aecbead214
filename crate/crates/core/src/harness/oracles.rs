//! Brute-force checks of the inequalities the constructions rely on.

use std::time::Instant;

use super::{sup_error, Domain, SampleRng, VerificationReport};
use crate::error::Result;
use crate::primitives::reference::{ref_f_m, ref_g, ref_im_h, ref_re_h};
use crate::primitives::{build_abs_re, build_g_re, build_psi_re, g_node};
use crate::C64;

fn report(claim: &str, samples: usize, bound: f64, max: f64, at: Vec<[f64; 2]>, start: Instant) -> VerificationReport {
    let mut r = VerificationReport::new(claim, samples, bound);
    r.grid_max = max;
    r.max_location = at;
    r.finish(start)
}

/// `|Re z − Re_h(z)| ≤ 2h|z|` (or the imaginary analogue) on a grid of the
/// hypothesis set `h < 1/(2 + 2|z|)`, capped at `|z| ≤ 40`. The reported
/// error is the largest ratio of the two sides.
pub fn lemma_re_h(h: f64, imaginary: bool, points: usize) -> VerificationReport {
    let start = Instant::now();
    let radius = (0.999 * (1.0 / (2.0 * h) - 1.0)).min(40.0);
    let grid = Domain::disk(radius).grid(points * 4 / 3);
    let (mut worst, mut at) = (0.0f64, [0.0; 2]);
    for z in &grid {
        let z = z[0];
        if z.norm() == 0.0 {
            continue;
        }
        let (val, exact) = if imaginary { (ref_im_h(h, z), z.im) } else { (ref_re_h(h, z), z.re) };
        let ratio = (val - exact).norm() / (2.0 * h * z.norm());
        if ratio > worst {
            worst = ratio;
            at = [z.re, z.im];
        }
    }
    let part = if imaginary { "im" } else { "re" };
    report(&format!("smooth_{part}_h_error_ratio(h={h})"), grid.len(), 1.0, worst, vec![at], start)
}

/// `|x² − f_m(x)| ≤ 2^{−2m−2}` on `[0, 1]`.
pub fn sawtooth_square(m: u32, points: usize) -> VerificationReport {
    let start = Instant::now();
    let (mut worst, mut at) = (0.0f64, 0.0);
    for k in 0..points {
        let x = k as f64 / (points - 1) as f64;
        let e = (x * x - ref_f_m(m, x)).abs();
        if e > worst {
            worst = e;
            at = x;
        }
    }
    report(&format!("sawtooth_square(m={m})"), points, 2f64.powi(-2 * m as i32 - 2), worst, vec![[at, 0.0]], start)
}

/// `f_m(x) = x` for `x ∉ [0, 1]`, checked on `[−3, 0) ∪ (1, 4]`.
pub fn sawtooth_outside(m: u32, points: usize) -> VerificationReport {
    let start = Instant::now();
    let (mut worst, mut at) = (0.0f64, 0.0);
    for k in 0..points {
        let u = k as f64 / (points - 1) as f64;
        for x in [-3.0 + 3.0 * u - 1e-9 * (1.0 - u), 1.0 + 1e-9 + 3.0 * u] {
            let e = (ref_f_m(m, x) - x).abs();
            if e > worst {
                worst = e;
                at = x;
            }
        }
    }
    report(&format!("sawtooth_outside(m={m})"), 2 * points, 0.0, worst, vec![[at, 0.0]], start)
}

/// Tent network within `8ε` of `g(Re z)` on `|z| ≤ R`.
pub fn tent_network(radius: f64, eps: f64, samples: usize, seed: u64) -> Result<VerificationReport> {
    let net = build_g_re(radius, eps)?;
    sup_error(
        &format!("tent_network(R={radius},eps={eps})"),
        &net,
        |z| C64::new(ref_g(z[0].re), 0.0),
        Domain::disk(radius),
        8.0 * eps,
        samples,
        seed,
    )
}

/// Absolute-value network within `2ε` of `|Re z|` on `|z| ≤ R`.
pub fn abs_network(radius: f64, eps: f64, samples: usize, seed: u64) -> Result<VerificationReport> {
    let net = build_abs_re(radius, eps)?;
    sup_error(
        &format!("abs_network(R={radius},eps={eps})"),
        &net,
        |z| C64::new(z[0].re.abs(), 0.0),
        Domain::disk(radius),
        2.0 * eps,
        samples,
        seed,
    )
}

/// Iterates of the tent network at radius `R + s_max` keep `|z| ≤ R + 1`
/// inside the same disk, on the boundary circle and the interior.
pub fn tent_iterates_bounded(
    radius: f64,
    eps: f64,
    s_max: u32,
    samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let g = g_node(radius + s_max as f64, eps)?;
    let outer = radius + 1.0;
    let mut rng = SampleRng::new(seed);
    let (mut worst, mut at) = (0.0f64, [0.0; 2]);
    for k in 0..samples {
        let z0 = if k % 2 == 0 {
            C64::from_polar(outer, std::f64::consts::TAU * rng.unit())
        } else {
            rng.disk(outer)
        };
        let mut z = z0;
        for _ in 0..s_max {
            z = g.evaluate(&[z])?[0];
            if z.norm() > worst {
                worst = z.norm();
                at = [z0.re, z0.im];
            }
        }
    }
    Ok(report(
        &format!("tent_iterates_bounded(R={radius},eps={eps},s={s_max})"),
        samples,
        outer,
        worst,
        vec![at],
        start,
    ))
}

fn unit_towards(v: C64, rng: &mut SampleRng) -> C64 {
    if v.norm() > 0.0 && rng.unit() < 0.75 {
        v / v.norm()
    } else {
        C64::from_polar(1.0, std::f64::consts::TAU * rng.unit())
    }
}

/// Simulates `γ_1 = β_1`, `γ_{j+1} = ×̃(β_{j+1}, γ_j)` with `|α_j| ≤ 1`,
/// `|β_j − α_j| ≤ δ` and `|×̃(z, w) − zw| ≤ ε`, perturbations mostly aligned
/// with the running error. Returns the worst final error over `trials` as a
/// fraction of `3Mε`, and the worst step error as a fraction of its running
/// budget `κ_1 = δ`, `κ_{j+1} = ε + δ + (1 + δ)κ_j`.
pub fn chained_product(
    factors: usize,
    eps: f64,
    delta: f64,
    trials: usize,
    seed: u64,
) -> (VerificationReport, VerificationReport) {
    let start = Instant::now();
    let mut rng = SampleRng::new(seed);
    let (mut final_worst, mut step_worst) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let m = if factors == 0 { 2 + (rng.next_u64() % 9) as usize } else { factors };
        let mut theta = C64::new(1.0, 0.0);
        let mut gamma = C64::new(1.0, 0.0);
        let mut kappa = 0.0;
        for j in 0..m {
            let alpha = if rng.unit() < 0.5 {
                C64::from_polar(1.0, std::f64::consts::TAU * rng.unit())
            } else {
                rng.disk(1.0)
            };
            let err_dir = gamma - theta;
            let beta = alpha + delta * unit_towards(err_dir, &mut rng);
            if j == 0 {
                gamma = beta;
                theta = alpha;
                kappa = delta;
            } else {
                let exact = beta * gamma;
                let target = alpha * theta;
                gamma = exact + eps * unit_towards(exact - target, &mut rng);
                theta = target;
                kappa = eps + delta + (1.0 + delta) * kappa;
            }
            step_worst = step_worst.max((gamma - theta).norm() / kappa);
        }
        final_worst = final_worst.max((gamma - theta).norm() / (3.0 * m as f64 * eps));
    }
    let label = if factors == 0 { "2..10".to_string() } else { factors.to_string() };
    (
        report(
            &format!("chained_product_error_over_3Meps(M={label},eps={eps},delta={delta})"),
            trials,
            1.0,
            final_worst,
            Vec::new(),
            start,
        ),
        report(
            &format!("chained_product_step_budget(M={label},eps={eps},delta={delta})"),
            trials,
            // the budget is attained with equality, so allow rounding
            1.0 + 1e-12,
            step_worst,
            Vec::new(),
            start,
        ),
    )
}

/// `Σ_{m=0}^{2N} ψ^Re(4N(x − m/2N)) = 1` on `[0, 1]`, using the bump network.
pub fn partition_of_unity(big_n: u32, points: usize, seed: u64) -> Result<VerificationReport> {
    let start = Instant::now();
    let psi = build_psi_re();
    let mut rng = SampleRng::new(seed);
    let nn = big_n as f64;
    let (mut worst, mut at) = (0.0f64, 0.0);
    for k in 0..points {
        let x = if k % 2 == 0 { k as f64 / (points - 1).max(1) as f64 } else { rng.unit() };
        let mut sum = C64::new(0.0, 0.0);
        for m in 0..=2 * big_n {
            sum += psi.evaluate(&[C64::new(4.0 * nn * x - 2.0 * m as f64, 0.0)])?[0];
        }
        let e = (sum - 1.0).norm();
        if e > worst {
            worst = e;
            at = x;
        }
    }
    Ok(report(&format!("partition_of_unity(N={big_n})"), points, 1e-10, worst, vec![[at, 0.0]], start))
}

/// The standard set of direct inequality checks.
pub fn lemma_oracles() -> Result<Vec<VerificationReport>> {
    let mut out = Vec::new();
    for h in [0.01, 0.001] {
        out.push(lemma_re_h(h, false, 10_000));
        out.push(lemma_re_h(h, true, 10_000));
    }
    for m in 0..=6 {
        out.push(sawtooth_square(m, 100_001));
        out.push(sawtooth_outside(m, 1_000));
    }
    out.push(tent_network(2.0, 0.01, 2_000, 1)?);
    out.push(abs_network(2.0, 0.01, 2_000, 2)?);
    out.push(tent_iterates_bounded(3.0, 0.3, 6, 1_000, 3)?);
    let (a, b) = chained_product(7, 0.01, 1e-4, 1_000, 4);
    out.extend([a, b]);
    let (a, b) = chained_product(0, 0.01, 1e-4, 1_000, 5);
    out.extend([a, b]);
    for n in [1, 5, 20] {
        out.push(partition_of_unity(n, 1_000, 6)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_extractor_bound() {
        for h in [0.01, 0.001] {
            for im in [false, true] {
                let r = lemma_re_h(h, im, 2_000);
                assert!(r.pass, "{}", r.summary());
            }
        }
    }

    #[test]
    fn sawtooth_bounds() {
        for m in 0..=6 {
            assert!(sawtooth_square(m, 10_001).pass);
            assert!(sawtooth_outside(m, 100).pass);
        }
    }

    #[test]
    fn chained_product_within_budget() {
        let (a, b) = chained_product(7, 0.01, 1e-4, 200, 1);
        assert!(a.pass && b.pass, "{} {}", a.summary(), b.summary());
    }
}
