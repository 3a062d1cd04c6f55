//! `fano`: command-line front end for fano-core.
//!
//! Exit status: 0 when every evaluated inequality holds, 1 on a violation or
//! a failed verification, 2 on malformed input or usage.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fano_core::bounds::{
    check_diffusion, continuous_fano_bound, continuous_fano_solve, mi_distance_bound, mi_distance_solve,
    solve_diffusion, BoundInputs, BoundReport, ContinuousFanoReport, ContinuousVariant, Order,
};
use fano_core::divergences::renyi_divergence;
use fano_core::markov_sim::{certify, Certification, CertifyOptions, Experiment};
use fano_core::relations::{sup_ball_volume, ContinuousDomain, DomainSpec, VolumeEstimate, VolumeMethod};
use fano_core::verifier::{sweep_diffusion_rows, SweepSpec, SweepSummary};
use fano_core::{FanoError, FiniteDistribution, LogBase};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use output::{Format, Table};

const AFTER_HELP: &str = "\
Inputs (distributions, experiments, domains, sweep specs) are JSON, given as a \
file path or inline text starting with `{`.

Output per command:
  divergence  {alpha, base, divergence}
  bound       bound report (mode, bound_value, observed, slack, feasible_sup, ...)
  solve       bound report with feasible_sup set
  certify     chain summary, relation bounds, one named report per inequality
  sweep       sweep summary; CSV lists every instance
  volume      {value, error_estimate, center}

CSV columns for reports: instance-id,mode,alpha,p_min,p_max,divergence,\
bound_value,observed,slack,feasible_sup

Exit status: 0 all checks hold, 1 violation or failed verification, 2 input or \
usage error. FANO_THREADS caps the number of worker threads.";

#[derive(Parser)]
#[command(name = "fano", version, about = "Generalized Fano bounds: evaluate, solve, certify, sweep", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Logarithm base of reported and supplied information values: `e`, `2`, or any real > 1.
    #[arg(long, global = true, value_parser = parse_base)]
    base: Option<LogBase>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    /// Write output to this file (atomically) instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Slack allowed before a check counts as a violation [default: 1e-9].
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    /// Seed for every random stream [default: 0].
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Add wall-clock time to sweep summaries.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Rényi divergence D_alpha(P || Q) between two distributions.
    Divergence {
        /// Distribution P: {"outcomes": [...], "weights": [...]}.
        p: String,
        /// Distribution Q over the same outcomes.
        q: String,
        /// Order: `kl`, `inf` or a real >= 0.
        #[arg(long, default_value = "kl", value_parser = parse_divergence_order)]
        alpha: f64,
    },
    /// Check a bound at an observed probability.
    Bound(BoundArgs),
    /// Largest probability consistent with a bound.
    Solve(BoundArgs),
    /// Evaluate every applicable bound on a Markov chain X -> Y -> Xhat.
    Certify {
        /// Experiment: {"prior", "channel", "n", "estimator", "relation"}.
        experiment: String,
        /// Number of independent channel uses (overrides the experiment).
        #[arg(long)]
        n: Option<u32>,
        /// Monte Carlo trials when the chain is too large to enumerate.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Looser p_min than the one computed from the prior.
        #[arg(long)]
        pmin: Option<f64>,
        /// Looser p_max than the one computed from the prior.
        #[arg(long)]
        pmax: Option<f64>,
    },
    /// Exhaustive and randomized sweep of the diffusion bounds.
    Sweep {
        /// Sweep spec JSON; flags override its fields.
        spec: Option<String>,
        /// Weights are multiples of 1/denominator.
        #[arg(long)]
        denominator: Option<u32>,
        /// Outcome counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        /// Rényi orders, comma separated (relative entropy is always included).
        #[arg(long, value_delimiter = ',')]
        alpha: Option<Vec<f64>>,
        /// Random full-support pairs added per outcome count.
        #[arg(long)]
        random_pairs: Option<usize>,
    },
    /// Largest volume of a radius-t ball intersected with a box.
    Volume {
        /// Domain: {"lower", "upper", "metric", "t"}.
        domain: String,
        #[command(flatten)]
        method: MethodArgs,
    },
}

#[derive(Args)]
struct BoundArgs {
    /// Bound inputs JSON: {"divergence", "alpha", "p_min", "p_max", "base"}; flags override it.
    input: Option<String>,
    /// Which inequality.
    #[arg(long, value_enum, default_value_t = Kind::Diffusion)]
    kind: Kind,
    /// Divergence, or mutual information for `mi-distance` and `continuous`.
    #[arg(long, alias = "info")]
    divergence: Option<f64>,
    /// Order: `kl` or a real in (0, 1) or (1, inf).
    #[arg(long, value_parser = parse_order)]
    alpha: Option<Order>,
    #[arg(long)]
    pmin: Option<f64>,
    #[arg(long)]
    pmax: Option<f64>,
    /// Observed probability: P(E_R) for `diffusion`, P_t otherwise (check mode only).
    #[arg(long)]
    p: Option<f64>,
    /// Alphabet size M (`mi-distance`).
    #[arg(long)]
    m: Option<usize>,
    /// Largest ball count N_t^max (`mi-distance`).
    #[arg(long)]
    n_max: Option<usize>,
    /// Domain JSON (`continuous`).
    #[arg(long)]
    domain: Option<String>,
    /// Constant next to the information term (`continuous`).
    #[arg(long, value_enum, default_value_t = Variant::Log2)]
    variant: Variant,
    #[command(flatten)]
    method: MethodArgs,
}

#[derive(Args)]
struct MethodArgs {
    /// Ball volume method.
    #[arg(long, value_enum, default_value_t = Method::Exact)]
    method: Method,
    /// Samples per candidate center (`monte-carlo`).
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    /// Cells per axis (`grid`).
    #[arg(long, default_value_t = 1000)]
    resolution: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Diffusion,
    MiDistance,
    Continuous,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Log2,
    Entropy,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    MonteCarlo,
    Grid,
}

fn parse_base(s: &str) -> std::result::Result<LogBase, String> {
    let v = match s {
        "e" => std::f64::consts::E,
        _ => s.parse::<f64>().map_err(|e| e.to_string())?,
    };
    LogBase::new(v).map_err(|e| e.to_string())
}

fn parse_order(s: &str) -> std::result::Result<Order, String> {
    serde_json::from_value::<Order>(match s {
        "kl" => serde_json::Value::from("kl"),
        _ => serde_json::Value::from(s.parse::<f64>().map_err(|e| e.to_string())?),
    })
    .map_err(|e| e.to_string())
}

fn parse_divergence_order(s: &str) -> std::result::Result<f64, String> {
    match s {
        "kl" => Ok(1.0),
        "inf" => Ok(f64::INFINITY),
        _ => s.parse::<f64>().map_err(|e| e.to_string()),
    }
}

/// Reads JSON from a file or from inline text.
fn load<T: DeserializeOwned>(field: &str, source: &str) -> Result<T> {
    let trimmed = source.trim_start();
    let text = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        source.to_string()
    } else {
        std::fs::read_to_string(source).with_context(|| format!("{field}: cannot read {source}"))?
    };
    serde_json::from_str(&text).with_context(|| field.to_string())
}

struct Settings {
    base: Option<LogBase>,
    format: Format,
    tolerance: f64,
    tolerance_given: bool,
    seed: Option<u64>,
    timing: bool,
}

impl Settings {
    fn base(&self) -> LogBase {
        self.base.unwrap_or(LogBase::NATURAL)
    }

    fn tolerance_flag(&self) -> Option<f64> {
        self.tolerance_given.then_some(self.tolerance)
    }
}

/// Rendered output and whether every check held.
struct Outcome {
    text: String,
    ok: bool,
}

#[derive(Serialize, Deserialize)]
struct DivergenceOutput {
    #[serde(with = "fano_core::bounds::extended")]
    alpha: f64,
    base: f64,
    #[serde(with = "fano_core::bounds::extended")]
    divergence: f64,
}

fn run_divergence(s: &Settings, p: &str, q: &str, alpha: f64) -> Result<Outcome> {
    let p: FiniteDistribution = load("P", p)?;
    let q: FiniteDistribution = load("Q", q)?;
    let value = renyi_divergence(&p, &q, alpha, s.base()).context("alpha")?;
    let out = DivergenceOutput {
        alpha,
        base: s.base().value(),
        divergence: value,
    };
    let text = match s.format {
        Format::Json => output::json(&out)?,
        Format::Csv => output::csv(&["alpha", "base", "divergence"], &[(alpha, out.base, value)])?,
        Format::Table => Table::default()
            .row("alpha", alpha)
            .row("base", out.base)
            .row("divergence", value)
            .render(),
    };
    Ok(Outcome { text, ok: true })
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| anyhow!("missing {flag}"))
}

fn diffusion_inputs(s: &Settings, a: &BoundArgs) -> Result<BoundInputs> {
    let mut inputs = match &a.input {
        Some(src) => load::<BoundInputs>("bound inputs", src)?,
        None => BoundInputs {
            divergence: require(a.divergence, "--divergence")?,
            order: a.alpha.unwrap_or(Order::Kl),
            p_min: require(a.pmin, "--pmin")?,
            p_max: require(a.pmax, "--pmax")?,
            base: LogBase::NATURAL,
        },
    };
    if let Some(d) = a.divergence {
        inputs.divergence = d;
    }
    if let Some(o) = a.alpha {
        inputs.order = o;
    }
    if let Some(v) = a.pmin {
        inputs.p_min = v;
    }
    if let Some(v) = a.pmax {
        inputs.p_max = v;
    }
    if let Some(b) = s.base {
        inputs.base = b;
    }
    Ok(inputs)
}

fn volume_method(s: &Settings, m: &MethodArgs) -> VolumeMethod {
    match m.method {
        Method::Exact => VolumeMethod::Exact,
        Method::MonteCarlo => VolumeMethod::MonteCarlo {
            samples: m.trials,
            seed: s.seed.unwrap_or(0),
        },
        Method::Grid => VolumeMethod::Grid {
            resolution: m.resolution,
        },
    }
}

fn render_report(s: &Settings, inputs: Option<&BoundInputs>, report: &BoundReport) -> Result<String> {
    Ok(match s.format {
        Format::Json => output::json(report)?,
        Format::Csv => output::report_csv(&[output::report_row("cli", inputs, report)])?,
        Format::Table => Table::default().report(report).render(),
    })
}

fn run_bound(s: &Settings, a: &BoundArgs, check: bool) -> Result<Outcome> {
    let observed = || require(a.p, "--p");
    let judge = |r: BoundReport| if check { r.with_tolerance(s.tolerance) } else { r };
    match a.kind {
        Kind::Diffusion => {
            let inputs = diffusion_inputs(s, a)?;
            let report = judge(if check {
                check_diffusion(observed()?, &inputs)?
            } else {
                solve_diffusion(&inputs)?
            });
            let text = render_report(s, Some(&inputs), &report)?;
            Ok(Outcome {
                text,
                ok: report.holds(),
            })
        }
        Kind::MiDistance => {
            let info = require(a.divergence, "--divergence")?;
            let m = require(a.m, "--m")?;
            let n_max = require(a.n_max, "--n-max")?;
            let report = judge(if check {
                mi_distance_bound(info, observed()?, m, n_max, s.base())?
            } else {
                mi_distance_solve(info, m, n_max, s.base())?
            });
            let text = render_report(s, None, &report)?;
            Ok(Outcome {
                text,
                ok: report.holds(),
            })
        }
        Kind::Continuous => {
            let info = require(a.divergence, "--divergence")?;
            let spec: DomainSpec = load("domain", &require(a.domain.clone(), "--domain")?)?;
            let domain = ContinuousDomain::try_from(spec).context("domain")?;
            let method = volume_method(s, &a.method);
            let variant = match a.variant {
                Variant::Log2 => ContinuousVariant::Log2,
                Variant::Entropy => ContinuousVariant::Entropy,
            };
            let mut full: ContinuousFanoReport = if check {
                continuous_fano_bound(info, observed()?, &domain, method, variant, s.base())?
            } else {
                continuous_fano_solve(info, &domain, method, variant, s.base())?
            };
            full.report = judge(full.report);
            let text = match s.format {
                Format::Json => output::json(&full)?,
                Format::Table => Table::default()
                    .report(&full.report)
                    .row("domain_volume", full.domain_volume)
                    .row("ball_volume", full.ball_volume.value)
                    .row("bound_low", full.bound_low)
                    .row("bound_high", full.bound_high)
                    .render(),
                Format::Csv => render_report(s, None, &full.report)?,
            };
            Ok(Outcome {
                text,
                ok: full.report.holds(),
            })
        }
    }
}

fn run_certify(
    s: &Settings,
    source: &str,
    n: Option<u32>,
    trials: u64,
    pmin: Option<f64>,
    pmax: Option<f64>,
) -> Result<Outcome> {
    let mut exp: Experiment = load("experiment", source)?;
    if let Some(n) = n {
        exp.n = n;
    }
    if let Some(b) = s.base {
        exp.base = b;
    }
    exp.validate().context("experiment")?;
    let options = CertifyOptions {
        trials,
        seed: s.seed.unwrap_or(0),
        p_min: pmin,
        p_max: pmax,
        tolerance: s.tolerance,
        ..CertifyOptions::default()
    };
    let cert: Certification = certify(&exp, &options)?;
    let text = match s.format {
        Format::Json => output::json(&cert)?,
        Format::Csv => {
            let rows: Vec<_> = cert
                .reports
                .iter()
                .map(|r| {
                    let mut row = output::report_row(&r.bound, None, &r.report);
                    row.p_min = Some(cert.bounds.p_min);
                    row.p_max = Some(cert.bounds.p_max);
                    row
                })
                .collect();
            output::report_csv(&rows)?
        }
        Format::Table => {
            let sm = &cert.summary;
            let mut t = Table::default();
            t.row("exact", sm.exact)
                .row("p_r", sm.p_r)
                .row("p_r stderr", sm.mc_stderr)
                .row("I(X;Y)", sm.i_xy)
                .row("I(X;Y_1)", sm.i_xy_single)
                .row("I(X;Xhat)", sm.i_xxhat)
                .row("H(X|Xhat)", sm.h_x_given_xhat)
                .row("beta", sm.beta)
                .row("p_min", cert.bounds.p_min)
                .row("p_max", cert.bounds.p_max);
            for r in &cert.reports {
                let verdict = if r.holds { "holds" } else { "VIOLATED" };
                t.row(
                    &r.bound,
                    format!(
                        "{verdict}: bound {} observed {}",
                        r.report.bound_value,
                        r.report.observed.map_or_else(|| "-".into(), |v| v.to_string())
                    ),
                );
            }
            for skipped in &cert.skipped {
                t.row("skipped", skipped);
            }
            t.render()
        }
    };
    Ok(Outcome {
        text,
        ok: cert.all_hold(),
    })
}

fn run_sweep(
    s: &Settings,
    source: Option<&str>,
    denominator: Option<u32>,
    k: Option<Vec<usize>>,
    alpha: Option<Vec<f64>>,
    random_pairs: Option<usize>,
) -> Result<Outcome> {
    let mut spec: SweepSpec = match source {
        Some(src) => load("sweep spec", src)?,
        None => SweepSpec::default(),
    };
    if let Some(d) = denominator {
        spec.weight_grid_denominator = d;
    }
    if let Some(k) = k {
        spec.outcome_counts = k;
    }
    if let Some(a) = alpha {
        spec.alphas = a;
    }
    if let Some(r) = random_pairs {
        spec.random_pairs = r;
    }
    if let Some(t) = s.tolerance_flag() {
        spec.tolerance = t;
    }
    if let Some(seed) = s.seed {
        spec.seed = seed;
    }
    let start = Instant::now();
    let (mut summary, rows): (SweepSummary, _) = sweep_diffusion_rows(&spec, s.format == Format::Csv)?;
    if s.timing {
        summary.elapsed_ms = Some(start.elapsed().as_millis() as u64);
    }
    let text = match s.format {
        Format::Json => output::json(&summary)?,
        Format::Csv => output::report_csv(&rows)?,
        Format::Table => {
            let mut t = Table::default();
            t.row("instances", summary.instances)
                .row("violations", summary.violations)
                .row("max_violation", format!("{:.3e}", summary.max_violation));
            if let Some(w) = &summary.worst_instance {
                t.row("worst", &w.id);
            }
            for o in &summary.by_order {
                t.row(
                    format!("alpha={}", o.alpha),
                    format!(
                        "{} instances, {} violations, max {:.3e}",
                        o.instances, o.violations, o.max_violation
                    ),
                );
            }
            t.row(
                "regression",
                format!("{} slack {}", summary.regression.id, summary.regression.slack),
            );
            if let Some(ms) = summary.elapsed_ms {
                t.row("elapsed_ms", ms);
            }
            t.render()
        }
    };
    Ok(Outcome {
        text,
        ok: summary.passed(),
    })
}

fn run_volume(s: &Settings, source: &str, m: &MethodArgs) -> Result<Outcome> {
    let spec: DomainSpec = load("domain", source)?;
    let domain = ContinuousDomain::try_from(spec).context("domain")?;
    let est: VolumeEstimate = sup_ball_volume(&domain, volume_method(s, m))?;
    let text = match s.format {
        Format::Json => output::json(&est)?,
        Format::Csv => {
            let center = est.center.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
            output::csv(
                &["value", "error_estimate", "center"],
                &[(est.value, est.error_estimate, center)],
            )?
        }
        Format::Table => Table::default()
            .row("value", est.value)
            .row("error_estimate", est.error_estimate)
            .row("center", format!("{:?}", est.center))
            .render(),
    };
    Ok(Outcome { text, ok: true })
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("FANO_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| anyhow!("FANO_THREADS: expected a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("FANO_THREADS")?;
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome> {
    configure_threads()?;
    if let Some(t) = cli.tolerance {
        if !(t >= 0.0 && t.is_finite()) {
            bail!("--tolerance: expected a finite value >= 0, got {t}");
        }
    }
    let s = Settings {
        base: cli.base,
        format: cli.format,
        tolerance: cli.tolerance.unwrap_or(1e-9),
        tolerance_given: cli.tolerance.is_some(),
        seed: cli.seed,
        timing: cli.timing,
    };
    match &cli.command {
        Command::Divergence { p, q, alpha } => run_divergence(&s, p, q, *alpha),
        Command::Bound(a) => run_bound(&s, a, true),
        Command::Solve(a) => run_bound(&s, a, false),
        Command::Certify {
            experiment,
            n,
            trials,
            pmin,
            pmax,
        } => run_certify(&s, experiment, *n, *trials, *pmin, *pmax),
        Command::Sweep {
            spec,
            denominator,
            k,
            alpha,
            random_pairs,
        } => run_sweep(
            &s,
            spec.as_deref(),
            *denominator,
            k.clone(),
            alpha.clone(),
            *random_pairs,
        ),
        Command::Volume { domain, method } => run_volume(&s, domain, method),
    }
}

/// Errors that mean a bound failed rather than that the input was bad.
fn is_violation(err: &anyhow::Error) -> bool {
    matches!(
        err.downcast_ref::<FanoError>(),
        Some(FanoError::DataProcessingViolation { .. } | FanoError::NoFeasiblePoint)
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    match run(cli) {
        Ok(outcome) => {
            let written = match &out {
                Some(path) => output::write_atomic(path, &outcome.text),
                None => {
                    print!("{}", outcome.text);
                    Ok(())
                }
            };
            match written {
                Err(e) => {
                    eprintln!("fano: {}", format!("{e:#}").replace('\n', " "));
                    ExitCode::from(2)
                }
                Ok(()) if outcome.ok => ExitCode::SUCCESS,
                Ok(()) => ExitCode::from(1),
            }
        }
        Err(e) => {
            eprintln!("fano: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::from(if is_violation(&e) { 1 } else { 2 })
        }
    }
}
