//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use modrelu::compiler::{catalog, compile, point_to_input};
use modrelu::harness::oracles::{chained_product, lemma_re_h, partition_of_unity, sawtooth_outside, sawtooth_square};
use modrelu::harness::sweep::{sweep, SweepConfig};
use modrelu::harness::{check_lipschitz, sup_error, sup_weighted_error, Domain, SampleRng, VerificationReport};
use modrelu::json::parse_network;
use modrelu::primitives::{build_identity, build_im, build_product, build_re, build_square_re, product_domain, PrimitiveKind, PrimitiveSpec};
use modrelu::{StructuredNet, C64};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, u64, fn() -> Outcome);

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn all_pass(reports: &[VerificationReport]) -> (bool, String) {
    let worst = reports
        .iter()
        .map(|r| r.max_error / r.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.claim.as_str()).collect();
    let detail = if failed.is_empty() {
        format!("{} checks, worst error/bound {worst:.3e}", reports.len())
    } else {
        format!("failed: {}", failed.join(", "))
    };
    (failed.is_empty(), detail)
}

fn lipschitz() -> Outcome {
    let r = check_lipschitz(1_000_000, 1);
    Ok((r.pass, format!("max excess {:.3e} over {} pairs", r.max_error, r.samples)))
}

fn identity() -> Outcome {
    let mut reports = Vec::new();
    for r in [1.0, 10.0, 100.0] {
        let net = build_identity(r).map_err(|e| e.to_string())?;
        reports.push(
            sup_weighted_error("identity", &net, |z| z[0], |z| 1.0 + z[0].norm(), Domain::disk(r), 1e-10, 10_000, 2)
                .map_err(|e| e.to_string())?,
        );
    }
    Ok(all_pass(&reports))
}

fn smooth_extractor() -> Outcome {
    let mut reports = Vec::new();
    for h in [0.01, 0.001] {
        reports.push(lemma_re_h(h, false, 10_000));
        reports.push(lemma_re_h(h, true, 10_000));
    }
    Ok(all_pass(&reports))
}

fn extractors() -> Outcome {
    let mut reports = Vec::new();
    let mut counts_ok = true;
    for eps in [0.1, 0.01, 0.001] {
        let re = build_re(2.0, eps).map_err(|e| e.to_string())?;
        let im = build_im(2.0, eps).map_err(|e| e.to_string())?;
        for net in [&re, &im] {
            let s = net.stats();
            counts_ok &= s.hidden_neurons() == 3 && s.weight_count == 10;
        }
        let dom = Domain::disk(2.0);
        reports.push(sup_error("re", &re, |z| real(z[0].re), dom, eps, 100_000, 3).map_err(|e| e.to_string())?);
        reports.push(sup_error("im", &im, |z| real(z[0].im), dom, eps, 100_000, 3).map_err(|e| e.to_string())?);
    }
    let (pass, detail) = all_pass(&reports);
    Ok((pass && counts_ok, format!("{detail}; 3 neurons / 10 weights: {counts_ok}")))
}

fn sawtooth() -> Outcome {
    let mut reports = Vec::new();
    for m in 0..=6 {
        reports.push(sawtooth_square(m, 100_000));
        reports.push(sawtooth_outside(m, 10_000));
    }
    Ok(all_pass(&reports))
}

fn square() -> Outcome {
    let net = build_square_re(3.0, 0.2).map_err(|e| e.to_string())?;
    let dom = Domain::DiskWithRealBound { radius: 3.0, bound: 1.0, dim: 1 };
    let r = sup_error("square_re", &net, |z| real(z[0].re * z[0].re), dom, 0.2, 10_000, 4)
        .map_err(|e| e.to_string())?;
    Ok((r.pass, format!("sup error {:.3e} over {} samples, depth {}", r.max_error, r.samples, net.depth())))
}

fn product() -> Outcome {
    let net = build_product(3.0, 1.0, 0.1).map_err(|e| e.to_string())?;
    let dom = Domain::Disk { radius: product_domain(3.0, 1.0), dim: 2 };
    let r = sup_error("product", &net, |z| z[0] * z[1], dom, 0.1, 10_000, 5).map_err(|e| e.to_string())?;
    Ok((r.pass, format!("sup error {:.3e} over {} pairs", r.max_error, r.samples)))
}

fn partition() -> Outcome {
    let reports = [1, 5, 20]
        .into_iter()
        .map(|n| partition_of_unity(n, 1_000, 6))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(all_pass(&reports))
}

fn chained() -> Outcome {
    let (a, b) = chained_product(0, 0.01, 1e-4, 1_000, 7);
    let (c, d) = chained_product(10, 0.01, 1e-4, 1_000, 8);
    Ok(all_pass(&[a, b, c, d]))
}

fn end_to_end() -> Outcome {
    let eps = 0.3;
    let target = catalog("quad", 1, 2).map_err(|e| e.to_string())?;
    let net = compile(&target, eps).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for i in 0..41 {
        for j in 0..41 {
            let x = [i as f64 / 40.0, j as f64 / 40.0];
            let out = net.evaluate(&point_to_input(&x)).map_err(|e| e.to_string())?[0];
            let (re, im) = target.eval(&x);
            worst = worst.max((out - C64::new(re, im)).norm());
        }
    }
    let other = catalog("sine", 1, 2).map_err(|e| e.to_string())?;
    let net2 = compile(&other, eps).map_err(|e| e.to_string())?;
    let s = net.stats();
    let same = s.same_architecture(&net2.stats())
        && StructuredNet::same_architecture(&Arc::new(net.clone()), &Arc::new(net2));
    Ok((
        worst <= eps && same,
        format!(
            "grid sup error {worst:.3e}, depth {}, weights {}, same architecture for another target: {same}",
            s.depth, s.weight_count
        ),
    ))
}

fn scaling() -> Outcome {
    let cfg = SweepConfig {
        eps: vec![0.3, 0.25, 0.2, 0.15],
        d: 1,
        n: 2,
        target: "quad".into(),
        samples: 400,
        seed: 11,
    };
    let res = sweep(&cfg).map_err(|e| e.to_string())?;
    let rows_ok = res.all_within_bound();
    let (d, n) = (cfg.d as f64, cfg.n as f64);
    let slope_ok = res.weight_slope <= 2.0 * d / n + 1.0;
    let depth_ok = res.depth_ratio_max <= 2.0;
    let mut sorted = res.rows.clone();
    sorted.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    let mw_ok = sorted.iter().all(|r| r.max_weight.is_finite())
        && sorted.windows(2).all(|w| w[1].max_weight >= w[0].max_weight);
    let errors: Vec<String> = sorted.iter().map(|r| format!("{:.2e}", r.sup_error)).collect();
    Ok((
        rows_ok && slope_ok && depth_ok && mw_ok,
        format!(
            "errors [{}], weight slope {:.3}, depth c {:.2} worst ratio {:.3}, max weight slope {:.2}",
            errors.join(", "),
            res.weight_slope,
            res.depth_constant,
            res.depth_ratio_max,
            res.max_weight_slope
        ),
    ))
}

fn random_spec(rng: &mut SampleRng) -> PrimitiveSpec {
    let kind = PrimitiveKind::ALL[(rng.next_u64() % PrimitiveKind::ALL.len() as u64) as usize];
    let eps = rng.uniform(0.05, 0.3);
    match kind {
        PrimitiveKind::SquareRe | PrimitiveKind::SquareIm => PrimitiveSpec::new(kind, rng.uniform(3.0, 5.0), eps),
        PrimitiveKind::ProductRe | PrimitiveKind::Product => {
            PrimitiveSpec::new(kind, rng.uniform(3.0, 5.0), eps).with_bound(rng.uniform(1.0, 2.0))
        }
        PrimitiveKind::ReluRe | PrimitiveKind::ReluIm => {
            PrimitiveSpec::new(kind, rng.uniform(1.0, 5.0), eps).with_shift(rng.uniform(-1.0, 1.0))
        }
        _ => PrimitiveSpec::new(kind, rng.uniform(1.0, 5.0), eps),
    }
}

fn round_trip() -> Outcome {
    let mut rng = SampleRng::new(12);
    for _ in 0..100 {
        let spec = random_spec(&mut rng);
        let net = spec.build().map_err(|e| e.to_string())?;
        let back = parse_network(&net.to_json()).map_err(|e| e.to_string())?;
        let dom = Domain::Disk { radius: spec.radius, dim: spec.kind.inputs() };
        for _ in 0..100 {
            let z = dom.sample(&mut rng);
            let a = net.evaluate(&z).map_err(|e| e.to_string())?;
            let b = back.evaluate(&z).map_err(|e| e.to_string())?;
            let same = a.iter().zip(&b).all(|(x, y)| {
                x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()
            });
            if !same {
                return Ok((false, format!("{spec:?} differs at {z:?}")));
            }
        }
    }
    Ok((true, "100 primitives, 100 points each, bit-identical".into()))
}

fn main() -> ExitCode {
    modrelu::harness::init_threads();
    let criteria: [Criterion; 12] = [
        ("modReLU is 1-Lipschitz", 5, lipschitz),
        ("identity network is exact", 1, identity),
        ("smooth extractor error within 2h|z|", 5, smooth_extractor),
        ("real/imaginary part networks within eps", 10, extractors),
        ("sawtooth approximation of x^2", 5, sawtooth),
        ("squared real part within eps", 30, square),
        ("complex product within eps", 60, product),
        ("partition of unity", 1, partition),
        ("chained product within 3M eps", 5, chained),
        ("compiled approximant within eps", 300, end_to_end),
        ("scaling sweep", 1200, scaling),
        ("serialization round trip", 5, round_trip),
    ];
    let mut failures = 0;
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let in_time = took < Duration::from_secs(limit);
        let (pass, detail) = match outcome {
            Ok((p, d)) => (p && in_time, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {detail} [{:.2} s, limit {limit} s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            took.as_secs_f64()
        );
    }
    println!("{} of 12 criteria passed", 12 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
