//! Command-line front end: `simulate`, `fit`, `test`, `experiment`, and
//! `sampson` subcommands over the library pipeline.
//!
//! Every stochastic command takes `--seed` and is bit-reproducible from it.
//! `test` also accepts `--config <json>` holding the same knobs as the
//! flags; explicit flags win over the file.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::experiment::{run_experiment, ExperimentSpec};
use crate::fiber::{FiberLaw, WalkConfig};
use crate::gof::{exact_test, resolve_m_index, StatKind, TestConfig};
use crate::mmsbm::{fit, simulate_network, GibbsSchedule, Hyperparams};
use crate::netio::{emit_dense_csv, emit_edge_list, load_sampson, parse_dense_csv, parse_edge_list, AdjacencyMatrix};
use crate::numeric::{derive_stream, derive_subseed};
use crate::report::{to_json_string, write_report, CurvePlot};

#[derive(Parser)]
#[command(
    name = "mmsbm-gof",
    version,
    about = "Exact goodness-of-fit testing for mixed membership stochastic block models"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate networks from the generative model and write edge lists
    /// plus ground-truth JSON.
    Simulate(SimulateArgs),
    /// Fit the posterior and write tie probabilities and realizations.
    Fit(FitArgs),
    /// Run the exact goodness-of-fit test on one network.
    Test(TestArgs),
    /// Run a size/power experiment grid from a JSON spec.
    Experiment(ExperimentArgs),
    /// Analyze the bundled monastery network across a range of K.
    Sampson(SampsonArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Second Beta shape on the diagonal of the block matrix (first shape
    /// is 1 everywhere).
    #[arg(long, default_value_t = 1.0)]
    beta_diag: f64,
    #[arg(long, default_value_t = 1.0)]
    beta_off: f64,
    #[arg(long, default_value_t = 1)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    network: PathBuf,
    /// Node count; required for edge-list files.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    beta_diag: f64,
    #[arg(long, default_value_t = 1.0)]
    beta_off: f64,
    #[arg(long, default_value_t = 1100)]
    sweeps: usize,
    #[arg(long, default_value_t = 100)]
    gibbs_burn_in: usize,
    #[arg(long, default_value_t = 100)]
    n_realizations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args, Default)]
struct TestArgs {
    #[arg(long)]
    network: Option<PathBuf>,
    /// Node count; required for edge-list files.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    beta_diag: Option<f64>,
    #[arg(long)]
    beta_off: Option<f64>,
    /// Posterior realizations N.
    #[arg(long)]
    n_realizations: Option<usize>,
    /// Fiber samples M per realization.
    #[arg(long)]
    m_fiber: Option<usize>,
    /// Fiber walk burn-in steps.
    #[arg(long)]
    burn_in: Option<usize>,
    /// Fiber walk thinning interval.
    #[arg(long)]
    thin: Option<usize>,
    /// Stationary law of the walk: uniform or multinomial.
    #[arg(long)]
    fiber_law: Option<String>,
    /// Retain the observed table as the first fiber sample.
    #[arg(long)]
    include_initial: bool,
    /// Restrict fiber entries to {0,1} (no exactness guarantee).
    #[arg(long)]
    bounded01: bool,
    /// chi2, d1, d2 or dinf.
    #[arg(long)]
    stat: Option<String>,
    /// Partial-conjunction index: an integer m or a fraction u in (0,1).
    #[arg(long)]
    m_index: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    gibbs_burn_in: Option<usize>,
    /// Use the (1+count)/(M+1) p-value estimator.
    #[arg(long)]
    smoothed_p: bool,
    /// Count only strictly larger fiber statistics into the p-value
    /// (ties-inclusive counting is the default).
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// JSON file with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// File form of the `test` flags.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct TestFileConfig {
    network: Option<PathBuf>,
    d: Option<usize>,
    k: Option<usize>,
    lambda: Option<f64>,
    beta_diag: Option<f64>,
    beta_off: Option<f64>,
    n_realizations: Option<usize>,
    m_fiber: Option<usize>,
    burn_in: Option<usize>,
    thin: Option<usize>,
    fiber_law: Option<String>,
    include_initial: Option<bool>,
    bounded01: Option<bool>,
    stat: Option<String>,
    m_index: Option<f64>,
    alpha: Option<f64>,
    sweeps: Option<usize>,
    gibbs_burn_in: Option<usize>,
    smoothed_p: Option<bool>,
    strict: Option<bool>,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment spec JSON (see the README for the schema).
    #[arg(long)]
    config: PathBuf,
    /// Override the spec's master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

/// The monastery analysis runs the published pipeline: binary-restricted
/// fibers sampled as the chain's first M consecutive states from the
/// observed network, with strict exceedance counting.
#[derive(Args)]
struct SampsonArgs {
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 6)]
    k_max: usize,
    #[arg(long, default_value = "chi2")]
    stat: String,
    #[arg(long, default_value_t = 50.0)]
    m_index: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 100)]
    n_realizations: usize,
    #[arg(long, default_value_t = 100)]
    m_fiber: usize,
    #[arg(long, default_value_t = 100)]
    sweeps: usize,
    #[arg(long, default_value_t = 0)]
    gibbs_burn_in: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

fn parse_fiber_law(s: &str) -> Result<FiberLaw> {
    match s {
        "uniform" => Ok(FiberLaw::Uniform),
        "multinomial" => Ok(FiberLaw::Multinomial),
        other => Err(Error::Config(format!(
            "unknown fiber law {other:?}; expected uniform or multinomial"
        ))),
    }
}

/// Load a network file: dense CSV when the content is comma-separated,
/// otherwise an edge list (which needs the node count).
pub fn load_network(path: &Path, d: Option<usize>) -> Result<AdjacencyMatrix> {
    let text = fs::read_to_string(path)?;
    let looks_dense = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .map(|l| l.contains(','))
        .unwrap_or(false);
    if looks_dense {
        parse_dense_csv(&text)
    } else {
        let d = d.ok_or_else(|| {
            Error::Config(format!(
                "--d is required to read the edge list {}",
                path.display()
            ))
        })?;
        parse_edge_list(&text, d)
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let hyper = Hyperparams::with_beta_pattern(args.k, args.lambda, args.beta_diag, args.beta_off)?;
    fs::create_dir_all(&args.out_dir)?;
    for rep in 0..args.replicates {
        let mut rng = derive_stream(derive_subseed(args.seed, rep as u64), 0);
        let sim = simulate_network(&hyper, args.d, &mut rng)?;
        let net_path = args.out_dir.join(format!("network_{rep:03}.txt"));
        fs::write(&net_path, emit_edge_list(&sim.y))?;
        let truth_path = args.out_dir.join(format!("truth_{rep:03}.json"));
        fs::write(&truth_path, to_json_string(&sim)?)?;
        println!(
            "replicate {rep}: {} edges -> {} / {}",
            sim.y.edge_count(),
            net_path.display(),
            truth_path.display()
        );
    }
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let y = load_network(&args.network, args.d)?;
    let hyper = Hyperparams::with_beta_pattern(args.k, args.lambda, args.beta_diag, args.beta_off)?;
    let schedule = GibbsSchedule {
        sweeps: args.sweeps,
        burn_in: args.gibbs_burn_in,
    };
    let mut rng = derive_stream(args.seed, 0);
    let summary = fit(&y, &hyper, schedule, args.n_realizations, &mut rng)?;
    fs::create_dir_all(&args.out_dir)?;
    fs::write(
        args.out_dir.join("posterior.json"),
        to_json_string(&summary)?,
    )?;
    // Dense D x D matrix of fitted tie probabilities, zero diagonal.
    let d = y.node_count();
    let dy = y.dyads();
    let mut csv = String::new();
    for i in 0..d {
        let row: Vec<String> = (0..d)
            .map(|j| {
                if i == j {
                    "0".to_string()
                } else {
                    format!("{}", summary.p_hat[dy.index(i, j)])
                }
            })
            .collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    fs::write(args.out_dir.join("p_hat.csv"), csv)?;
    println!(
        "fitted K={} on {} nodes; wrote {}/posterior.json and p_hat.csv",
        args.k,
        d,
        args.out_dir.display()
    );
    Ok(())
}

fn merged_test_config(args: &TestArgs) -> Result<(PathBuf, Option<usize>, Hyperparams, TestConfig, u64, PathBuf)> {
    let file: TestFileConfig = match &args.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => TestFileConfig::default(),
    };
    let network = args
        .network
        .clone()
        .or(file.network)
        .ok_or_else(|| Error::Config("--network is required".into()))?;
    let d = args.d.or(file.d);
    let k = args
        .k
        .or(file.k)
        .ok_or_else(|| Error::Config("--k is required".into()))?;
    let lambda = args.lambda.or(file.lambda).unwrap_or(1.0);
    let beta_diag = args.beta_diag.or(file.beta_diag).unwrap_or(1.0);
    let beta_off = args.beta_off.or(file.beta_off).unwrap_or(1.0);
    let hyper = Hyperparams::with_beta_pattern(k, lambda, beta_diag, beta_off)?;

    let n = args
        .n_realizations
        .or(file.n_realizations)
        .unwrap_or(100);
    let walk = WalkConfig {
        samples: args.m_fiber.or(file.m_fiber).unwrap_or(100),
        burn_in: args.burn_in.or(file.burn_in).unwrap_or(1000),
        thin: args.thin.or(file.thin).unwrap_or(10),
        bounded01: args.bounded01 || file.bounded01.unwrap_or(false),
        law: parse_fiber_law(
            args.fiber_law
                .as_deref()
                .or(file.fiber_law.as_deref())
                .unwrap_or("multinomial"),
        )?,
        include_initial: args.include_initial || file.include_initial.unwrap_or(false),
    };
    let stat = StatKind::parse(args.stat.as_deref().or(file.stat.as_deref()).unwrap_or("chi2"))?;
    let m_raw = args.m_index.or(file.m_index).unwrap_or(50.0);
    let cfg = TestConfig {
        n_realizations: n,
        stat,
        m_index: resolve_m_index(m_raw, n)?,
        alpha: args.alpha.or(file.alpha).unwrap_or(0.05),
        gibbs: GibbsSchedule {
            sweeps: args.sweeps.or(file.sweeps).unwrap_or(1100),
            burn_in: args.gibbs_burn_in.or(file.gibbs_burn_in).unwrap_or(100),
        },
        walk,
        smoothed_p: args.smoothed_p || file.smoothed_p.unwrap_or(false),
        strict_exceedance: args.strict || file.strict.unwrap_or(false),
    };
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let out_dir = args
        .out_dir
        .clone()
        .or(file.out_dir)
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((network, d, hyper, cfg, seed, out_dir))
}

fn cmd_test(args: &TestArgs) -> Result<()> {
    let (network, d, hyper, cfg, seed, out_dir) = merged_test_config(args)?;
    let y = load_network(&network, d)?;
    let report = exact_test(&y, &hyper, &cfg, seed)?;
    write_report(&report, &out_dir, "report")?;
    println!(
        "stat={} m={} pc={:.6} -> {}",
        report.stat,
        report.m_index,
        report.pc_at_m,
        if report.reject { "REJECT" } else { "no rejection" }
    );
    println!(
        "wrote {}/report.json, report.csv, report.svg",
        out_dir.display()
    );
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<()> {
    let mut spec: ExperimentSpec = serde_json::from_str(&fs::read_to_string(&args.config)?)?;
    if let Some(seed) = args.seed {
        spec.master_seed = seed;
    }
    let result = run_experiment(&spec, &args.out_dir)?;
    println!("experiment {:?}: {} replicates", spec.name, result.replicates_done);
    print!("stat");
    for m in &spec.m_indices {
        print!("\tm={m}");
    }
    println!();
    for (si, stat) in spec.stats.iter().enumerate() {
        print!("{}", stat.name());
        for mi in 0..spec.m_indices.len() {
            print!("\t{:.3}", result.rates[si][mi]);
        }
        println!();
    }
    println!("artifacts in {}", args.out_dir.display());
    Ok(())
}

fn cmd_sampson(args: &SampsonArgs) -> Result<()> {
    if args.k_min < 1 || args.k_max < args.k_min {
        return Err(Error::Config("need 1 <= k-min <= k-max".into()));
    }
    let y = load_sampson()?;
    let stat = StatKind::parse(&args.stat)?;
    fs::create_dir_all(&args.out_dir)?;
    let mut curves = Vec::new();
    println!("monastery network: {} nodes, {} edges", y.node_count(), y.edge_count());
    for k in args.k_min..=args.k_max {
        // Block tie priors: Beta(1, 2) on the diagonal, Beta(1, 1) off it.
        let hyper = Hyperparams::with_beta_pattern(k, 1.0, 2.0, 1.0)?;
        let cfg = TestConfig {
            n_realizations: args.n_realizations,
            stat,
            m_index: resolve_m_index(args.m_index, args.n_realizations)?,
            alpha: args.alpha,
            gibbs: GibbsSchedule {
                sweeps: args.sweeps,
                burn_in: args.gibbs_burn_in,
            },
            walk: WalkConfig {
                samples: args.m_fiber,
                ..TestConfig::paper_experiment().walk
            },
            ..TestConfig::paper_experiment()
        };
        let report = exact_test(&y, &hyper, &cfg, derive_subseed(args.seed, k as u64))?;
        println!(
            "K={k}: pc({}) = {:.6} -> {}",
            report.m_index,
            report.pc_at_m,
            if report.reject { "REJECT" } else { "no rejection" }
        );
        write_report(&report, &args.out_dir, &format!("sampson_k{k}"))?;
        curves.push((format!("K={k}"), report.pc_curve.clone()));
    }
    let plot = CurvePlot {
        x_label: "m",
        y_label: "pc(m)",
        alpha: Some(args.alpha),
        series: curves,
    };
    fs::write(args.out_dir.join("sampson_curves.svg"), plot.to_svg())?;
    println!("artifacts in {}", args.out_dir.display());
    Ok(())
}

/// Entry point for the `mmsbm-gof` binary.
pub fn run() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Test(args) => cmd_test(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Sampson(args) => cmd_sampson(args),
    }
}
