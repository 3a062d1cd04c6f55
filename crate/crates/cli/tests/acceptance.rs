//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the verdict lines always reach the
//! terminal. The process exits nonzero when any criterion fails.

use std::process::Command;
use std::time::Instant;

use fano_core::bounds::{
    continuous_fano_bound, distance_fano_bound, fano_relation_bound, solve_diffusion, BoundInputs, ContinuousVariant,
};
use fano_core::markov_sim::{
    certify, enumerate_chain, random_experiment, CertifyOptions, Estimator, Experiment, UniformNoiseDemo,
};
use fano_core::relations::{ContinuousDomain, ContinuousMetric, Metric, Relation, RelationBounds, VolumeMethod};
use fano_core::rng::{dirichlet_unit, stream_rng, uniform};
use fano_core::verifier::{
    sweep_diffusion, sweep_support_bound, verify_binary_data_processing, verify_limit, verify_power_sum, SweepSpec,
};
use fano_core::{Channel, FiniteDistribution, JointDistribution, LogBase};
use rand::Rng;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn exhaustive_sweep() -> Verdict {
    let spec = SweepSpec {
        outcome_counts: vec![2, 3],
        weight_grid_denominator: 8,
        alphas: vec![0.25, 0.5, 2.0, 4.0],
        tolerance: 1e-9,
        random_pairs: 0,
        ..SweepSpec::default()
    };
    let start = Instant::now();
    let s = sweep_diffusion(&spec).expect("sweep runs");
    let secs = start.elapsed().as_secs_f64();
    for o in &s.by_order {
        println!(
            "    order {:>4}: {} instances, {} violations, max violation {:.3e} nats",
            o.alpha, o.instances, o.violations, o.max_violation
        );
    }
    if let Some(w) = &s.worst_instance {
        println!("    worst: {} (P(E) = {}, bound {})", w.id, w.p_event, w.bound_value);
    }
    verdict(
        s.violations == 0 && s.instances >= 10_000 && secs <= 60.0,
        format!("{} instances, {} violations, {secs:.2} s", s.instances, s.violations),
    )
}

fn tightness_witness() -> Verdict {
    let labels: Vec<String> = (1..=4).map(|i| i.to_string()).collect();
    let weights = (0..4)
        .map(|i| (0..4).map(|j| if i == j { 0.25 } else { 0.0 }).collect())
        .collect();
    let joint = JointDistribution::new(labels.clone(), labels, weights).unwrap();
    let bounds = RelationBounds::explicit(0.25, 0.25).unwrap();
    let r = fano_relation_bound(&joint, None, &Relation::Equality, &bounds, LogBase::NATURAL).unwrap();
    let slack = r.reconstruction.slack.unwrap();
    verdict(slack.abs() <= 1e-12, format!("slack {slack:e}"))
}

fn renyi_limit() -> Verdict {
    let mut rng = stream_rng(3, 0);
    let mut worst_gap = 0.0f64;
    let mut worst_loose = 0.0f64;
    let mut non_monotone = 0;
    for i in 0..100 {
        let k = rng.random_range(2..=5);
        let p = dirichlet_unit(&mut rng, k);
        let q = dirichlet_unit(&mut rng, k);
        // nonempty proper event
        let mask = rng.random_range(1..(1usize << k) - 1);
        let mut event: Vec<bool> = (0..k).map(|i| mask >> i & 1 == 1).collect();
        let q_e: f64 = q.iter().zip(&event).filter(|(_, e)| **e).map(|(w, _)| w).sum();
        // keep Q(E) < 1/2 so that p_min = p_max = Q(E) is admissible
        if q_e >= 0.5 {
            event.iter_mut().for_each(|e| *e = !*e);
        }
        let q_e: f64 = q.iter().zip(&event).filter(|(_, e)| **e).map(|(w, _)| w).sum();
        let t = verify_limit(&p, &q, &event, q_e, q_e, 6).unwrap();
        if !t.monotone() {
            non_monotone += 1;
        }
        if t.final_gap() > 1e-4 {
            println!(
                "    pair {i}: Q(E) = {q_e:.6}, relative-entropy RHS = {:.4}, gap at k = 6: {:.3e}",
                t.kl_rhs,
                t.final_gap()
            );
        }
        worst_gap = worst_gap.max(t.final_gap());
        let loose = verify_limit(&p, &q, &event, 0.0, q_e, 6).unwrap();
        worst_loose = worst_loose.max(loose.final_gap());
    }
    println!("    same pairs at (p_min, p_max) = (0, Q(E)): largest gap at k = 6: {worst_loose:.3e}");
    verdict(
        non_monotone == 0 && worst_gap <= 1e-4,
        format!(
            "100 pairs at p_min = p_max = Q(E), {non_monotone} non-monotone, largest gap at k = 6: {worst_gap:.3e}"
        ),
    )
}

fn data_processing() -> Verdict {
    let mut chain_failures = 0;
    let mut worst_chain = f64::INFINITY;
    for seed in 0..1000u64 {
        let mut rng = stream_rng(seed, 1);
        let nx = rng.random_range(2..=4);
        let ny = rng.random_range(2..=4);
        let exp = random_experiment(seed, 0, nx, ny, nx).unwrap();
        match enumerate_chain(&exp) {
            Ok(s) => {
                let slack = s.i_xy - s.i_xxhat;
                worst_chain = worst_chain.min(slack);
                if slack < -1e-10 {
                    chain_failures += 1;
                }
            }
            Err(_) => chain_failures += 1,
        }
    }
    let alphas = [0.25, 0.5, 1.0, 2.0, 4.0];
    let mut rng = stream_rng(4, 0);
    let mut instances = 0;
    let mut worst_binary = f64::INFINITY;
    for _ in 0..1000 {
        let k = rng.random_range(2..=4);
        let p = dirichlet_unit(&mut rng, k);
        let q = dirichlet_unit(&mut rng, k);
        let (n, s) = verify_binary_data_processing(&p, &q, &alphas).unwrap();
        instances += n;
        worst_binary = worst_binary.min(s);
    }
    verdict(
        chain_failures == 0 && worst_binary >= -1e-10,
        format!(
            "1000 chains, min I(X;Y) - I(X;Xhat) = {worst_chain:.3e}; {instances} binary reductions, min slack {worst_binary:.3e}"
        ),
    )
}

fn independent_samples() -> Verdict {
    let mut instances = 0;
    let mut failures = Vec::new();
    for seed in 0..60u64 {
        let mut rng = stream_rng(seed, 2);
        let n = 1 + (seed % 6) as u32;
        let a = uniform(&mut rng);
        let prior = FiniteDistribution::new(vec!["0", "1"], vec![a, 1.0 - a]).unwrap();
        let rows = (0..2)
            .map(|_| {
                let e = uniform(&mut rng);
                vec![e, 1.0 - e]
            })
            .collect();
        let channel = Channel::new(vec!["0", "1"], vec!["0", "1"], rows).unwrap();
        let exp = Experiment::new(prior, channel, n, Estimator::Ml, Relation::Equality).unwrap();
        let s = enumerate_chain(&exp).unwrap();
        let nf = n as f64;
        let chain = s.i_xy <= nf * s.i_xy_single + 1e-10 && nf * s.i_xy_single <= nf * s.beta + 1e-10;
        let cert = certify(&exp, &CertifyOptions::default()).unwrap();
        let samples_hold = cert
            .reports
            .iter()
            .filter(|r| r.bound.starts_with("samples-"))
            .all(|r| r.holds);
        let present = cert.reports.iter().filter(|r| r.bound.starts_with("samples-")).count() == 2;
        let (p_min, p_max) = (cert.bounds.p_min, cert.bounds.p_max);
        let solved = [nf * s.i_xy_single, nf * s.beta].iter().all(|&d| {
            solve_diffusion(&BoundInputs::kl(d, p_min, p_max))
                .map(|r| r.feasible_sup.unwrap() >= s.p_r - 1e-10)
                .unwrap_or(false)
        });
        instances += 1;
        if !(chain && samples_hold && present && solved) {
            failures.push(seed);
        }
    }
    verdict(
        failures.is_empty(),
        format!("{instances} experiments with n = 1..6, failing seeds {failures:?}"),
    )
}

fn distance_corollary() -> Verdict {
    let mut instances = 0;
    let mut worst_gap = 0.0f64;
    let mut violations = 0;
    let mut errors = 0;
    for m in [4usize, 6, 8] {
        let labels: Vec<String> = (1..=m).map(|i| i.to_string()).collect();
        for t in [0.0, 1.0, 2.0] {
            for seed in 0..100u64 {
                let mut rng = stream_rng(seed, (m * 10) as u64 + t as u64);
                let weights = (0..m)
                    .map(|_| dirichlet_unit(&mut rng, m).into_iter().map(|w| w / m as f64).collect())
                    .collect();
                let joint = JointDistribution::new(labels.clone(), labels.clone(), weights).unwrap();
                instances += 1;
                match distance_fano_bound(&joint, &Metric::Abs, t, LogBase::NATURAL) {
                    Ok(r) => {
                        let gap = (r.report.bound_value - r.entropy_version.bound_value - r.log_m_slack).abs();
                        worst_gap = worst_gap.max(gap);
                        if !r.report.holds() {
                            violations += 1;
                        }
                    }
                    Err(_) => errors += 1,
                }
            }
        }
    }
    verdict(
        worst_gap <= 1e-12 && violations == 0 && errors == 0,
        format!("{instances} estimators, max RHS gap {worst_gap:.3e}, {violations} violations, {errors} errors"),
    )
}

fn continuous_demo() -> Verdict {
    let start = Instant::now();
    let demo = UniformNoiseDemo::new(0.2).unwrap();
    let closed = demo.mutual_information();
    let grid = demo.discretized_mutual_information(8000).unwrap();
    let t = 0.01;
    let (p_t, se) = demo.error_probability(t, 1_000_000, 11).unwrap();
    let domain = ContinuousDomain::interval(0.0, 1.0, ContinuousMetric::L1, t).unwrap();
    let mut ok = (closed - grid).abs() <= 1e-3;
    let mut parts = vec![format!("I = {closed:.6} (grid {grid:.6}), P_t = {p_t:.5} ± {se:.1e}")];
    for variant in [ContinuousVariant::Log2, ContinuousVariant::Entropy] {
        let r = continuous_fano_bound(closed, p_t, &domain, VolumeMethod::Exact, variant, LogBase::NATURAL).unwrap();
        let slack = r.report.slack.unwrap();
        ok &= slack >= -3.0 * se;
        parts.push(format!("{variant:?} slack {slack:.4}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs <= 30.0;
    parts.push(format!("{secs:.2} s"));
    verdict(ok, parts.join(", "))
}

fn support_and_power_sum() -> Verdict {
    let support = sweep_support_bound(&[2, 3, 4], 8).unwrap();
    let power = verify_power_sum(&[0.25, 0.5, 1.0, 2.0, 4.0], 1e-4).unwrap();
    verdict(
        support.violations == 0 && power.passed() && support.tight_slack.abs() <= 1e-12,
        format!(
            "support: {} pairs, {} violations, tight slack {:e}; power sum: {} points, {} violations",
            support.instances, support.violations, support.tight_slack, power.points, power.violations
        ),
    )
}

fn fano(args: &[&str], threads: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_fano"))
        .args(args)
        .env("FANO_THREADS", threads)
        .output()
        .expect("fano runs");
    assert!(
        matches!(out.status.code(), Some(0 | 1)),
        "fano {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn determinism() -> Verdict {
    let dir = std::env::temp_dir().join(format!("fano-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let exp = dir.join("experiment.json");
    // 3 * 3^14 states exceed the enumeration cap, so certify simulates
    std::fs::write(
        &exp,
        r#"{"prior": {"outcomes": ["0", "1", "2"], "weights": [0.5, 0.3, 0.2]},
            "channel": {"inputs": ["0", "1", "2"], "outputs": ["a", "b", "c"],
                        "rows": [[0.7, 0.2, 0.1], [0.2, 0.6, 0.2], [0.1, 0.3, 0.6]]},
            "n": 14}"#,
    )
    .unwrap();
    let exp = exp.to_str().unwrap();
    let runs: [&[&str]; 2] = [
        &[
            "sweep",
            "--seed",
            "7",
            "--k",
            "2,3",
            "--random-pairs",
            "200",
            "--format",
            "json",
        ],
        &["certify", exp, "--seed", "7", "--trials", "300000", "--format", "json"],
    ];
    let mut identical = true;
    for args in runs {
        let reference = fano(args, "1");
        for threads in ["1", "2", "8"] {
            identical &= fano(args, threads) == reference;
        }
    }
    std::fs::remove_dir_all(&dir).ok();
    verdict(
        identical,
        "sweep and certify JSON compared across FANO_THREADS = 1, 2, 8",
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 exhaustive diffusion sweep", exhaustive_sweep),
        ("2 tightness witness", tightness_witness),
        ("3 order-one limit", renyi_limit),
        ("4 data processing", data_processing),
        ("5 independent samples", independent_samples),
        ("6 distance corollary", distance_corollary),
        ("7 continuous corollary", continuous_demo),
        ("8 support bound and power sum", support_and_power_sum),
        ("9 determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        let v = run();
        println!(
            "{} criterion {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        if !v.pass {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: {} failing: {}", failed.len(), failed.join(", "));
        std::process::exit(1);
    }
}
