use modrelu::harness::oracles::{chained_product, lemma_oracles, sawtooth_square};
use modrelu::harness::suites::run_suite;
use modrelu::harness::sweep::{sweep, SweepConfig, CSV_HEADER};
use modrelu::harness::{check_lipschitz, sup_error, Domain, VerificationReport};
use modrelu::primitives::{build_identity, build_re};
use modrelu::{modrelu, C64};

#[test]
fn sup_error_examples() {
    let id = build_identity(2.0).unwrap();
    let r = sup_error("id", &id, |z| z[0], Domain::disk(2.0), 1e-10, 10_000, 1).unwrap();
    assert!(r.pass && r.max_error <= 1e-10);
    let re = build_re(2.0, 0.01).unwrap();
    let run = || {
        let mut r = sup_error("re", &re, |z| C64::new(z[0].re, 0.0), Domain::disk(2.0), 0.01, 2_000, 5).unwrap();
        r.runtime_ms = 0.0;
        r
    };
    let a = run();
    assert!(a.pass);
    assert_eq!(a, run());
    assert!(a.max_error == a.grid_max.max(a.random_max));
    let line = a.to_json_line();
    let back: VerificationReport = serde_json::from_str(&line).unwrap();
    assert_eq!(back, a);
    assert!(sup_error("re", &re, |_| C64::new(0.0, 0.0), Domain::disk(2.0), 1.0, 0, 1).is_err());
}

#[test]
fn lipschitz_branches() {
    let r = check_lipschitz(100_000, 7);
    assert!(r.pass, "{}", r.summary());
    let z = C64::new(3.0, -2.0);
    assert_eq!((modrelu(z) - modrelu(z)).norm(), 0.0);
    for (z, w) in [(C64::new(0.3, 0.2), C64::new(-0.9, 0.1)), (C64::new(0.0, 1.0), C64::new(0.5, -0.5))] {
        assert_eq!(modrelu(z) - modrelu(w), C64::new(0.0, 0.0));
    }
}

#[test]
fn all_lemma_oracles_pass() {
    for r in lemma_oracles().unwrap() {
        assert!(r.pass, "{}", r.summary());
    }
    let r = sawtooth_square(0, 10_001);
    assert_eq!(r.max_error, 0.25);
    let (a, _) = chained_product(7, 0.01, 1e-4, 500, 3);
    assert!(a.pass);
}

#[test]
fn suites_run() {
    for name in ["lipschitz", "identity", "partition"] {
        assert!(run_suite(name, 1_000, 42).unwrap().iter().all(|r| r.pass));
    }
    assert!(run_suite("nope", 10, 1).is_err());
}

#[test]
fn small_sweep_csv() {
    let cfg = SweepConfig { eps: vec![0.3], d: 1, n: 2, target: "constant".into(), samples: 16, seed: 1 };
    let res = sweep(&cfg).unwrap();
    assert_eq!(res.rows.len(), 1);
    assert!(res.all_within_bound());
    let csv = res.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 7);
    assert_eq!(row[0], "0.3");
    assert!(lines.next().is_none());
}

#[test]
fn domain_grids() {
    assert_eq!(Domain::Cube { d: 1 }.grid(10_000).len(), 10_000);
    let disk = Domain::disk(1.0).grid(10_000);
    assert!(disk.len() > 7_000 && disk.len() < 8_000);
}
