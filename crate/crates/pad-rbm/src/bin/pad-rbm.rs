use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use pad_rbm::checks::{check_bound, check_gradient, check_lemma1, CheckReport};
use pad_rbm::data::{
    generate_bars_and_stripes, load_text_dataset, save_model, save_visible_rows,
    save_text_dataset, load_model,
};
use pad_rbm::descend::perturb_and_descend;
use pad_rbm::model::{
    avg_log_likelihood_exact, hidden_conditional, visible_conditional, BinaryState, Dataset,
    MAX_ENUM_SIDE,
};
use pad_rbm::perturb::perturb_first_order;
use pad_rbm::samplers::{gibbs_sweep, perturb_and_map_exact, MAX_JOINT_BITS};
use pad_rbm::training::{train, MetricsRecord, NoiseSharing, TrainConfig};
use pad_rbm::{Algorithm, NoiseSource, PerturbOrder, RbmError};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "pad-rbm", version, about = "Binary RBM training with perturb-and-descend, CD and PCD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a config file, writing a model file and metrics CSV
    Train(TrainArgs),
    /// Evaluate a saved model on a dataset
    Eval(EvalArgs),
    /// Draw visible samples from a saved model
    Sample(SampleArgs),
    /// Run a statistical/numerical self-check on a small model
    Check(CheckArgs),
    /// Generate a synthetic dataset
    GenData(GenDataArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    // Flag overrides; flags win over the config file.
    #[arg(long)]
    algorithm: Option<AlgorithmArg>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_hidden: Option<usize>,
    #[arg(long)]
    model_out: Option<PathBuf>,
    #[arg(long)]
    metrics_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    method: SampleMethod,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gibbs burn-in sweeps
    #[arg(long, default_value_t = 1000)]
    burnin: usize,
    /// Keep every thin-th Gibbs sweep
    #[arg(long, default_value_t = 10)]
    thin: usize,
    /// PD noise scale
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// PD descent sweep cap
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Seed PD descents from this dataset instead of uniform random bits
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    check: CheckKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset for gradcheck; a small seeded random set is used when absent
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long, default_value = "bars-stripes")]
    kind: DataKind,
    /// Image side length
    #[arg(long)]
    d: usize,
    #[arg(long)]
    out: PathBuf,
    /// Sample this many patterns instead of exhaustive enumeration
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Pd,
    Cd,
    Pcd,
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleMethod {
    Gibbs,
    Pd,
    Pmap,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckKind {
    Lemma1,
    Bound,
    Gradcheck,
}

#[derive(Clone, Copy, ValueEnum)]
enum DataKind {
    BarsStripes,
}

/// On-disk run configuration; unknown keys are rejected.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfigFile {
    dataset: PathBuf,
    #[serde(default = "default_model_out")]
    model_out: PathBuf,
    #[serde(default = "default_metrics_out")]
    metrics_out: PathBuf,
    #[serde(default = "default_algorithm")]
    algorithm: String,
    #[serde(default = "default_k")]
    k: usize,
    #[serde(default = "default_beta")]
    beta: f64,
    #[serde(default = "default_perturb_order")]
    perturb_order: String,
    #[serde(default = "default_noise_sharing")]
    noise_sharing: String,
    #[serde(default = "default_matching_cadence")]
    matching_cadence: usize,
    #[serde(default = "default_learning_rate")]
    learning_rate: f64,
    #[serde(default = "default_epochs")]
    epochs: usize,
    #[serde(default = "default_batch_size")]
    batch_size: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    weight_decay: f64,
    #[serde(default)]
    momentum: f64,
    #[serde(default = "default_particle_count")]
    particle_count: usize,
    #[serde(default)]
    pd_mean_field_hidden: bool,
    #[serde(default = "default_n_hidden")]
    n_hidden: usize,
}

fn default_model_out() -> PathBuf {
    PathBuf::from("model.json")
}
fn default_metrics_out() -> PathBuf {
    PathBuf::from("metrics.csv")
}
fn default_algorithm() -> String {
    "pd".into()
}
fn default_k() -> usize {
    10
}
fn default_beta() -> f64 {
    1.0
}
fn default_perturb_order() -> String {
    "first".into()
}
fn default_noise_sharing() -> String {
    "per-particle".into()
}
fn default_matching_cadence() -> usize {
    1
}
fn default_learning_rate() -> f64 {
    0.05
}
fn default_epochs() -> usize {
    100
}
fn default_batch_size() -> usize {
    16
}
fn default_particle_count() -> usize {
    16
}
fn default_n_hidden() -> usize {
    16
}

fn parse_algorithm(s: &str) -> Result<Algorithm, RbmError> {
    match s {
        "pd" => Ok(Algorithm::Pd),
        "cd" => Ok(Algorithm::Cd),
        "pcd" => Ok(Algorithm::Pcd),
        other => Err(RbmError::InvalidArgument(format!(
            "unknown algorithm {other:?} (expected pd, cd, or pcd)"
        ))),
    }
}

fn parse_perturb_order(s: &str) -> Result<PerturbOrder, RbmError> {
    match s {
        "first" => Ok(PerturbOrder::First),
        "second" => Ok(PerturbOrder::Second),
        other => Err(RbmError::InvalidArgument(format!(
            "unknown perturbation order {other:?} (expected first or second)"
        ))),
    }
}

fn parse_noise_sharing(s: &str) -> Result<NoiseSharing, RbmError> {
    match s {
        "per-particle" => Ok(NoiseSharing::PerParticle),
        "per-minibatch" => Ok(NoiseSharing::PerMinibatch),
        other => Err(RbmError::InvalidArgument(format!(
            "unknown noise sharing {other:?} (expected per-particle or per-minibatch)"
        ))),
    }
}

fn exit_code_for(err: &RbmError) -> u8 {
    match err {
        RbmError::Io(_) => EXIT_IO,
        RbmError::Parse { .. } | RbmError::Format(_) | RbmError::Version { .. } => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn fail(err: RbmError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code_for(&err))
}

fn format_float(x: f64) -> String {
    // Shortest representation that round-trips, stable across runs.
    let mut buf = ryu_format(x);
    if buf.ends_with(".0") {
        buf.truncate(buf.len() - 2);
    }
    buf
}

fn ryu_format(x: f64) -> String {
    // serde_json's float writer (ryu) keeps CSV output byte-stable.
    serde_json::to_string(&x).unwrap_or_else(|_| format!("{x}"))
}

fn write_metrics_csv(metrics: &[MetricsRecord], path: &Path) -> Result<(), RbmError> {
    let mut out = String::from(
        "epoch,step,exact_avg_loglik,recon_error,grad_norm,mean_hidden_activation,wall_ms\n",
    );
    for r in metrics {
        let loglik = r
            .exact_avg_loglik
            .map(format_float)
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.epoch,
            r.step,
            loglik,
            format_float(r.recon_error),
            format_float(r.grad_norm),
            format_float(r.mean_hidden_activation),
            format_float(r.wall_ms),
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<(), RbmError> {
    let raw = std::fs::read_to_string(&args.config)?;
    let file: RunConfigFile = toml::from_str(&raw).map_err(|e| RbmError::InvalidArgument(
        format!("bad config {}: {e}", args.config.display()),
    ))?;

    let mut cfg = TrainConfig {
        algorithm: parse_algorithm(&file.algorithm)?,
        k: file.k,
        beta: file.beta,
        perturb_order: parse_perturb_order(&file.perturb_order)?,
        noise_sharing: parse_noise_sharing(&file.noise_sharing)?,
        matching_cadence: file.matching_cadence,
        learning_rate: file.learning_rate,
        epochs: file.epochs,
        batch_size: file.batch_size,
        seed: file.seed,
        weight_decay: file.weight_decay,
        momentum: file.momentum,
        particle_count: file.particle_count,
        pd_mean_field_hidden: file.pd_mean_field_hidden,
        n_hidden: file.n_hidden,
    };
    if let Some(a) = args.algorithm {
        cfg.algorithm = match a {
            AlgorithmArg::Pd => Algorithm::Pd,
            AlgorithmArg::Cd => Algorithm::Cd,
            AlgorithmArg::Pcd => Algorithm::Pcd,
        };
    }
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    if let Some(lr) = args.learning_rate {
        cfg.learning_rate = lr;
    }
    if let Some(bs) = args.batch_size {
        cfg.batch_size = bs;
    }
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if let Some(beta) = args.beta {
        cfg.beta = beta;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(m) = args.n_hidden {
        cfg.n_hidden = m;
    }
    cfg.validate()?;

    let dataset = load_text_dataset(&file.dataset)?;
    let (params, metrics) = train(&dataset, &cfg)?;

    let model_out = args.model_out.as_ref().unwrap_or(&file.model_out);
    let metrics_out = args.metrics_out.as_ref().unwrap_or(&file.metrics_out);
    save_model(&params, model_out)?;
    write_metrics_csv(&metrics, metrics_out)?;
    println!(
        "trained {} steps; model -> {}, metrics -> {}",
        metrics.len(),
        model_out.display(),
        metrics_out.display()
    );
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), RbmError> {
    let model = load_model(&args.model)?;
    let data = load_text_dataset(&args.data)?;
    if data.n != model.n_visible() {
        return Err(RbmError::DimensionMismatch(format!(
            "dataset has {} visible bits, model expects {}",
            data.n,
            model.n_visible()
        )));
    }
    if model.n_visible().min(model.n_hidden()) <= MAX_ENUM_SIDE {
        let loglik = avg_log_likelihood_exact(&data, &model)?;
        println!("exact_avg_loglik {loglik}");
    } else {
        println!(
            "note: model too large for the exact-likelihood oracle \
             (min(n, m) > {MAX_ENUM_SIDE}); reporting reconstruction error"
        );
        let mut total = 0.0;
        for v in &data.examples {
            let h: Vec<u8> = hidden_conditional(v, &model)?
                .iter()
                .map(|&q| u8::from(q > 0.5))
                .collect();
            let probs = visible_conditional(&h, &model)?;
            let mism = v
                .iter()
                .zip(probs.iter())
                .filter(|&(&vi, &q)| u8::from(q > 0.5) != vi)
                .count();
            total += mism as f64 / v.len() as f64;
        }
        println!("recon_error {}", total / data.len() as f64);
    }
    Ok(())
}

fn cmd_sample(args: &SampleArgs) -> Result<(), RbmError> {
    let model = load_model(&args.model)?;
    let (n, m) = (model.n_visible(), model.n_hidden());
    let mut src = NoiseSource::new(args.seed, 0);
    let mut rows: Vec<Vec<u8>> = Vec::with_capacity(args.count);
    match args.method {
        SampleMethod::Gibbs => {
            if args.thin == 0 {
                return Err(RbmError::InvalidArgument("thin must be >= 1".into()));
            }
            let mut state = BinaryState::zeros(n, m);
            for _ in 0..args.burnin {
                state = gibbs_sweep(&state, &model, &mut src)?;
            }
            while rows.len() < args.count {
                for _ in 0..args.thin {
                    state = gibbs_sweep(&state, &model, &mut src)?;
                }
                rows.push(state.v.clone());
            }
        }
        SampleMethod::Pd => {
            let seeds: Option<Dataset> = match &args.data {
                Some(path) => {
                    let d = load_text_dataset(path)?;
                    if d.n != n {
                        return Err(RbmError::DimensionMismatch(format!(
                            "seed dataset has {} bits, model expects {n}",
                            d.n
                        )));
                    }
                    Some(d)
                }
                None => None,
            };
            for idx in 0..args.count {
                let v0: Vec<u8> = match &seeds {
                    Some(d) => d.examples[idx % d.len()].clone(),
                    None => (0..n).map(|_| u8::from(src.uniform_open() < 0.5)).collect(),
                };
                let pp = perturb_first_order(&model, args.beta, &mut src)?;
                rows.push(perturb_and_descend(&v0, &pp, args.k)?.state.v);
            }
        }
        SampleMethod::Pmap => {
            if n + m > MAX_JOINT_BITS {
                return Err(RbmError::Capacity(format!(
                    "pmap requires n + m <= {MAX_JOINT_BITS}, model has {}",
                    n + m
                )));
            }
            for _ in 0..args.count {
                rows.push(perturb_and_map_exact(&model, &mut src)?.v);
            }
        }
    }
    save_visible_rows(&rows, &args.out)?;
    println!("wrote {} samples to {}", rows.len(), args.out.display());
    Ok(())
}

fn print_report(report: &CheckReport) {
    println!(
        "{}: statistic {:.6} threshold {:.6} detail: {} -> {}",
        report.name,
        report.statistic,
        report.threshold,
        report.detail,
        if report.passed { "PASS" } else { "FAIL" }
    );
}

fn cmd_check(args: &CheckArgs) -> Result<bool, RbmError> {
    let model = load_model(&args.model)?;
    let mut src = NoiseSource::new(args.seed, 0);
    let report = match args.check {
        CheckKind::Lemma1 => check_lemma1(&model, 200_000, 0.02, &mut src)?,
        CheckKind::Bound => check_bound(&model, 10_000, &mut src)?,
        CheckKind::Gradcheck => {
            let data = match &args.data {
                Some(path) => load_text_dataset(path)?,
                None => {
                    // Small seeded random dataset; the gradient identity holds
                    // for any data.
                    let n = model.n_visible();
                    let examples = (0..8)
                        .map(|_| (0..n).map(|_| u8::from(src.uniform_open() < 0.5)).collect())
                        .collect();
                    Dataset::new(n, examples)?
                }
            };
            if data.n != model.n_visible() {
                return Err(RbmError::DimensionMismatch(format!(
                    "dataset has {} bits, model expects {}",
                    data.n,
                    model.n_visible()
                )));
            }
            check_gradient(&model, &data, 1e-4)?
        }
    };
    print_report(&report);
    Ok(report.passed)
}

fn cmd_gen_data(args: &GenDataArgs) -> Result<(), RbmError> {
    let DataKind::BarsStripes = args.kind;
    let mut src = NoiseSource::new(args.seed, 0);
    let dataset = match args.count {
        Some(count) => generate_bars_and_stripes(args.d, Some((count, &mut src)))?,
        None => generate_bars_and_stripes(args.d, None)?,
    };
    save_text_dataset(&dataset, &args.out)?;
    println!(
        "wrote {} examples ({} bits each) to {}",
        dataset.len(),
        dataset.n,
        args.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Check(args) => {
            return match cmd_check(args) {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => ExitCode::from(EXIT_CHECK_FAILED),
                Err(err) => fail(err),
            }
        }
        Command::GenData(args) => cmd_gen_data(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => fail(err),
    }
}
