//! Named groups of checks run by the command-line `verify`.

use super::oracles::{lemma_oracles, partition_of_unity};
use super::{check_lipschitz, sup_error, sup_weighted_error, Domain, VerificationReport};
use crate::error::{Error, Result};
use crate::primitives::{
    build_identity, build_im, build_product, build_product_re, build_re, build_square_im,
    build_square_re, product_domain,
};
use crate::C64;

pub const SUITES: [&str; 8] =
    ["lipschitz", "identity", "extractors", "lemmas", "square", "product", "partition", "all"];

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(samples: usize, seed: u64) -> Result<Vec<VerificationReport>> {
    [1.0, 10.0, 100.0]
        .into_iter()
        .map(|r| {
            let net = build_identity(r)?;
            sup_weighted_error(
                &format!("identity_over_1_plus_abs(R={r})"),
                &net,
                |z| z[0],
                |z| 1.0 + z[0].norm(),
                Domain::disk(r),
                1e-10,
                samples,
                seed,
            )
        })
        .collect()
}

pub fn extractors(samples: usize, seed: u64) -> Result<Vec<VerificationReport>> {
    let mut out = Vec::new();
    for eps in [0.1, 0.01, 0.001] {
        let re = build_re(2.0, eps)?;
        out.push(sup_error(&format!("re(R=2,eps={eps})"), &re, |z| real(z[0].re), Domain::disk(2.0), eps, samples, seed)?);
        let im = build_im(2.0, eps)?;
        out.push(sup_error(&format!("im(R=2,eps={eps})"), &im, |z| real(z[0].im), Domain::disk(2.0), eps, samples, seed)?);
    }
    Ok(out)
}

pub fn square(samples: usize, seed: u64) -> Result<Vec<VerificationReport>> {
    let dom = Domain::DiskWithRealBound { radius: 3.0, bound: 1.0, dim: 1 };
    let re = build_square_re(3.0, 0.2)?;
    let im = build_square_im(3.0, 0.2)?;
    let dom_im = Domain::Disk { radius: 1.0, dim: 1 };
    Ok(vec![
        sup_error("square_re(R=3,eps=0.2)", &re, |z| real(z[0].re * z[0].re), dom, 0.2, samples, seed)?,
        sup_error("square_im(R=3,eps=0.2)", &im, |z| real(z[0].im * z[0].im), dom_im, 0.2, samples, seed)?,
    ])
}

pub fn product(samples: usize, seed: u64) -> Result<Vec<VerificationReport>> {
    let (r, m, eps) = (3.0, 1.0, 0.1);
    let dom = Domain::Disk { radius: product_domain(r, m), dim: 2 };
    let p = build_product(r, m, eps)?;
    let pr = build_product_re(r, m, eps)?;
    Ok(vec![
        sup_error("product(R=3,M=1,eps=0.1)", &p, |z| z[0] * z[1], dom, eps, samples, seed)?,
        sup_error("product_re(R=3,M=1,eps=0.1)", &pr, |z| real(z[0].re * z[1].re), dom, eps, samples, seed)?,
    ])
}

/// Runs the named suite.
pub fn run_suite(name: &str, samples: usize, seed: u64) -> Result<Vec<VerificationReport>> {
    match name {
        "lipschitz" => Ok(vec![check_lipschitz(samples, seed)]),
        "identity" => identity(samples, seed),
        "extractors" => extractors(samples, seed),
        "lemmas" => lemma_oracles(),
        "square" => square(samples, seed),
        "product" => product(samples, seed),
        "partition" => [1, 5, 20].into_iter().map(|n| partition_of_unity(n, 1_000, seed)).collect(),
        "all" => {
            let mut out = Vec::new();
            for s in &SUITES[..SUITES.len() - 1] {
                out.extend(run_suite(s, samples, seed)?);
            }
            Ok(out)
        }
        other => Err(Error::Parameter(format!(
            "unknown suite '{other}', expected one of {}",
            SUITES.join(", ")
        ))),
    }
}
