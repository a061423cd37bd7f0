//! `sbl`: sparse Bayesian learning with posterior-propriety gating.
//!
//! Subcommands: check-propriety, fit-rvm, predict, gibbs-rvm,
//! fit-classifier, verify-bounds, estimate-marginal, demo-impropriety.
//! check-propriety exits 0 for Proper, 2 for Improper and 3 for
//! Undetermined so the gate is scriptable in CI.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sbl_cli::{
    cross_validate_theta, ingest_csv, ingest_features_csv, parse_grid, run_verification_suites,
    Dataset,
};
use sbl_core::classifier::{predict_prob_detailed, run_classifier_mcmc, ClassifierModel, LossKind};
use sbl_core::error::{Error, Result};
use sbl_core::gibbs::run_chain;
use sbl_core::kernel::{
    build_design_matrix, build_prediction_row, CovariateSet, KernelKind, KernelSpec,
};
use sbl_core::lab::{divergence_probe, impropriety_demo};
use sbl_core::mcmc::{summarize, GibbsConfig, McmcTrace};
use sbl_core::propriety::{
    check_classifier_propriety, check_rvm_propriety, ClassifierPriorSpec, LambdaPriorKind,
    ProprietyStatus, ProprietyVerdict, RvmHyperParams, RvmPrior,
};
use sbl_core::record::{format_matrix, parse_matrix, saved_fit, Record, SavedRvmFit};
use sbl_core::regression::{fit_type2_ml, predict as rvm_predict, FitOptions};

#[derive(Parser)]
#[command(
    name = "sbl",
    version,
    about = "Sparse Bayesian learning toolkit: RVM regression, RKHS classification, and posterior-propriety gating"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Judge a hyperparameter configuration: exit 0 Proper, 2 Improper, 3 Undetermined.
    CheckPropriety(CheckArgs),
    /// Fit the RVM by type-II maximum likelihood (gate consulted and recorded).
    FitRvm(FitRvmArgs),
    /// Apply a saved fit (RVM or classifier) to new rows.
    Predict(PredictArgs),
    /// Fully Bayesian RVM via Gibbs sampling.
    GibbsRvm(GibbsArgs),
    /// RKHS classification via Metropolis-within-Gibbs.
    FitClassifier(FitClassifierArgs),
    /// Run the numerical verification suites; nonzero exit on any failure.
    VerifyBounds(VerifyArgs),
    /// Truncated-mass estimate of the marginal density m(y) on a T-grid.
    EstimateMarginal(MarginalArgs),
    /// Side-by-side impropriety demonstration (gate + chain + divergence probe).
    DemoImpropriety(DemoArgs),
}

#[derive(Args)]
struct PriorArgs {
    /// Shape of the lambda prior kernel lambda^(a-1) e^(-b lambda).
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Rate of the lambda prior kernel.
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    /// Shape of the precision prior kernel (1/sigma^2)^(c-1) e^(-d/sigma^2).
    #[arg(long, allow_hyphen_values = true)]
    c: f64,
    /// Rate of the precision prior kernel.
    #[arg(long, allow_hyphen_values = true)]
    d: f64,
    /// Lambda prior family: gamma | power | jeffreys | half-cauchy | gumbel.
    /// Defaults to the (a, b) reading.
    #[arg(long)]
    lambda_prior: Option<String>,
    /// Scale parameter for half-cauchy / rate for gumbel.
    #[arg(long)]
    prior_scale: Option<f64>,
}

impl PriorArgs {
    fn lambda_kind(&self) -> Result<LambdaPriorKind> {
        match self.lambda_prior.as_deref() {
            None | Some("gamma") | Some("power") => {
                let a = self.a.ok_or_else(|| {
                    Error::InvalidConfig("--a is required for gamma/power lambda priors".into())
                })?;
                let b = self.b.ok_or_else(|| {
                    Error::InvalidConfig("--b is required for gamma/power lambda priors".into())
                })?;
                Ok(RvmHyperParams::new(a, b, self.c, self.d)?.lambda_prior())
            }
            Some("jeffreys") => Ok(LambdaPriorKind::Jeffreys),
            Some("half-cauchy") => {
                let scale = self.prior_scale.ok_or_else(|| {
                    Error::InvalidConfig("--prior-scale is required for half-cauchy".into())
                })?;
                Ok(LambdaPriorKind::HalfCauchyRootInverse { scale })
            }
            Some("gumbel") => {
                let rate = self.prior_scale.ok_or_else(|| {
                    Error::InvalidConfig("--prior-scale is required for gumbel".into())
                })?;
                Ok(LambdaPriorKind::GumbelType2 { rate })
            }
            Some(other) => Err(Error::InvalidConfig(format!(
                "unknown lambda prior '{other}'"
            ))),
        }
    }

    fn rvm_prior(&self) -> Result<RvmPrior> {
        Ok(RvmPrior {
            lambda: self.lambda_kind()?,
            c: self.c,
            d: self.d,
        })
    }

    fn hyperparams(&self) -> Result<RvmHyperParams> {
        let a = self
            .a
            .ok_or_else(|| Error::InvalidConfig("--a is required".into()))?;
        let b = self
            .b
            .ok_or_else(|| Error::InvalidConfig("--b is required".into()))?;
        RvmHyperParams::new(a, b, self.c, self.d)
    }
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Name of the response column.
    #[arg(long)]
    response: String,
    /// Kernel family: gaussian | laplace | polynomial | linear.
    #[arg(long, default_value = "gaussian")]
    kernel: String,
    /// Kernel parameter theta.
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
}

impl DataArgs {
    fn load(&self) -> Result<(Dataset, KernelSpec)> {
        let ds = ingest_csv(&self.data, &self.response)?;
        let spec = KernelSpec::new(KernelKind::parse(&self.kernel)?, self.theta)?;
        Ok((ds, spec))
    }
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    prior: PriorArgs,
    /// Sample size, when no data file is supplied.
    #[arg(long)]
    n: Option<usize>,
    /// Optional data file (needed when d <= 0: the residual condition).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    response: Option<String>,
    #[arg(long, default_value = "gaussian")]
    kernel: String,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Judge the classification hierarchy instead of the regression one.
    #[arg(long)]
    classifier: bool,
    /// Lower endpoint of the uniform theta support (classifier).
    #[arg(long)]
    u1: Option<f64>,
    /// Upper endpoint of the uniform theta support (classifier).
    #[arg(long)]
    u2: Option<f64>,
    /// Fixed intercept precision (classifier).
    #[arg(long, default_value_t = 1e-4)]
    lambda0: f64,
}

fn cmd_check(args: &CheckArgs) -> Result<ProprietyVerdict> {
    if args.classifier {
        let (u1, u2) = match (args.u1, args.u2) {
            (Some(u1), Some(u2)) => (u1, u2),
            _ => {
                return Err(Error::InvalidConfig(
                    "--u1 and --u2 are required with --classifier".into(),
                ))
            }
        };
        let spec = ClassifierPriorSpec::new(
            args.prior.lambda_kind()?,
            args.prior.c,
            args.prior.d,
            u1,
            u2,
            args.lambda0,
        )?;
        return check_classifier_propriety(&spec);
    }
    let prior = args.prior.rvm_prior()?;
    match &args.data {
        Some(path) => {
            let response = args
                .response
                .as_deref()
                .ok_or_else(|| Error::InvalidConfig("--response is required with --data".into()))?;
            let ds = ingest_csv(path, response)?;
            let spec = KernelSpec::new(KernelKind::parse(&args.kernel)?, args.theta)?;
            let k = build_design_matrix(&ds.x, &spec)?;
            check_rvm_propriety(&prior, Some((&ds.y, &k)), args.n)
        }
        None => check_rvm_propriety(&prior, None, args.n),
    }
}

#[derive(Args)]
struct FitRvmArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated theta grid; when present, theta is chosen by k-fold
    /// cross validation and --theta is ignored.
    #[arg(long)]
    theta_grid: Option<String>,
    /// Folds for the theta cross validation.
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 1e12)]
    prune_threshold: f64,
    /// Output path for the fit artifact.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_fit_rvm(args: &FitRvmArgs) -> Result<()> {
    let ds = ingest_csv(&args.data.data, &args.data.response)?;
    let kind = KernelKind::parse(&args.data.kernel)?;
    let opts = FitOptions {
        max_iter: args.max_iter,
        tol: args.tol,
        prune_threshold: args.prune_threshold,
    };
    let rows: Vec<Vec<f64>> = (0..ds.n())
        .map(|i| ds.x.row(i).iter().cloned().collect())
        .collect();
    let theta = match &args.theta_grid {
        Some(grid) => {
            let grid = parse_grid(grid)?;
            let (best, table) = cross_validate_theta(&rows, &ds.y, kind, &grid, args.folds, &opts)?;
            for (t, rmse) in &table {
                println!("cv theta={t} rmse={rmse:.6e}");
            }
            println!("cv selected_theta={best}");
            best
        }
        None => args.data.theta,
    };
    let spec = KernelSpec::new(kind, theta)?;
    let k = build_design_matrix(&ds.x, &spec)?;
    // The flat-prior Bayesian reading of type-II ML is (a,b,c,d) = (1,0,1,0);
    // the gate records what that reading implies.
    let flat = RvmHyperParams::new(1.0, 0.0, 1.0, 0.0)?;
    let gate = check_rvm_propriety(&flat.prior(), Some((&ds.y, &k)), None)?;
    println!("gate {}", gate.record());
    if gate.status == ProprietyStatus::Improper {
        println!(
            "note=\"prediction with (lambda, sigma2) fixed at their marginal-likelihood estimates \
             is valid as a plug-in rule, but its flat-prior Bayesian reading has an improper \
             posterior; fully Bayesian inference needs a gate-Proper configuration\""
        );
    }
    let fit = fit_type2_ml(&ds.y, &k, None, &opts)?;
    println!(
        "fit kernel={} theta={} sigma2_hat={:.8e} relevance_count={} log_evidence={:.8e} iterations={} converged={}",
        kind.name(),
        theta,
        fit.sigma2_hat,
        fit.relevance_indices.len(),
        fit.log_evidence,
        fit.iterations,
        fit.converged
    );
    if fit.degenerate {
        println!(
            "warning=\"degenerate fit: all columns pruned with nonzero response; intercept-only model\""
        );
    }
    let saved = saved_fit(spec, ds.x.clone(), ds.y.clone(), fit, &gate);
    let mut out = BufWriter::new(File::create(&args.out).map_err(io_err)?);
    writeln!(out, "{}", saved.to_record().to_line()).map_err(io_err)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

#[derive(Args)]
struct PredictArgs {
    /// Fit artifact written by fit-rvm or fit-classifier.
    #[arg(long)]
    fit: PathBuf,
    /// CSV of new covariate rows (a response column, if present, is dropped
    /// via --response).
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    response: Option<String>,
    /// Output path for prediction records (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace CSV override for classifier artifacts.
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.fit)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", args.fit.display())))?;
    let first = text
        .lines()
        .next()
        .ok_or_else(|| Error::Parse("empty fit artifact".into()))?;
    let record = Record::parse_line(first)?;
    let (rows, _) = ingest_features_csv(&args.data, args.response.as_deref())?;
    let mut lines = Vec::new();
    match record.require("type")? {
        "rvm_fit" => {
            let saved = SavedRvmFit::from_record(&record)?;
            for (i, row) in rows.iter().enumerate() {
                let k_new = build_prediction_row(&saved.x, row, &saved.kernel)?;
                let p = rvm_predict(&saved.fit, &k_new)?;
                lines.push(format!(
                    "row={} x={} mean={:.10e} variance={:.10e}",
                    i,
                    row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
                    p.mean,
                    p.variance
                ));
            }
        }
        "classifier_fit" => {
            let (model, x_train, trace_path) = load_classifier_artifact(&record)?;
            let trace_path = args.trace.clone().unwrap_or(trace_path);
            let trace = McmcTrace::from_csv(BufReader::new(File::open(&trace_path).map_err(
                |e| Error::Parse(format!("cannot open trace {}: {e}", trace_path.display())),
            )?))?;
            for (i, row) in rows.iter().enumerate() {
                let (p, mcse) = predict_prob_detailed(&trace, &x_train, row, &model)?;
                let class = if p > 0.5 { 1 } else { 0 };
                lines.push(format!(
                    "row={} x={} probability={:.6} mcse={:.3e} class={}",
                    i,
                    row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
                    p,
                    mcse,
                    class
                ));
            }
        }
        other => {
            return Err(Error::Parse(format!(
                "unknown artifact type '{other}' (expected rvm_fit or classifier_fit)"
            )))
        }
    }
    match &args.out {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
            for l in &lines {
                writeln!(out, "{l}").map_err(io_err)?;
            }
            println!("wrote {}", path.display());
        }
        None => {
            for l in &lines {
                println!("{l}");
            }
        }
    }
    Ok(())
}

#[derive(Args)]
struct ChainArgs {
    #[arg(long, default_value_t = 5000)]
    iters: usize,
    #[arg(long, default_value_t = 1000)]
    burn_in: usize,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long, default_value_t = 17)]
    seed: u64,
}

impl ChainArgs {
    fn config(&self) -> Result<GibbsConfig> {
        GibbsConfig::new(self.iters, self.burn_in, self.thin, self.seed)
    }
}

#[derive(Args)]
struct GibbsArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    prior: PriorArgs,
    #[command(flatten)]
    chain: ChainArgs,
    /// Run even when the gate does not certify the posterior as Proper.
    #[arg(long)]
    allow_improper: bool,
    /// Output path for the trace CSV.
    #[arg(long)]
    out_trace: PathBuf,
}

fn cmd_gibbs(args: &GibbsArgs) -> Result<()> {
    let (ds, spec) = args.data.load()?;
    let k = build_design_matrix(&ds.x, &spec)?;
    let hp = args.prior.hyperparams()?;
    let gate = check_rvm_propriety(&hp.prior(), Some((&ds.y, &k)), None)?;
    println!("gate {}", gate.record());
    let cfg = args.chain.config()?.allow_improper(args.allow_improper);
    let trace = run_chain(&ds.y, &k, &hp, &cfg)?;
    let mut out = BufWriter::new(File::create(&args.out_trace).map_err(io_err)?);
    // The gate verdict travels with the artifact.
    writeln!(out, "# gate {}", gate.record()).map_err(io_err)?;
    trace.to_csv(&mut out).map_err(io_err)?;
    println!(
        "wrote {} ({} kept iterations)",
        args.out_trace.display(),
        trace.n_kept()
    );
    if !trace.step_errors.is_empty() {
        println!("step_errors={}", trace.step_errors.len());
    }
    for line in summarize(&trace)?.records() {
        println!("summary {line}");
    }
    Ok(())
}

#[derive(Args)]
struct FitClassifierArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    prior: PriorArgs,
    #[command(flatten)]
    chain: ChainArgs,
    /// Loss function: logistic | hinge.
    #[arg(long, default_value = "logistic")]
    loss: String,
    /// Uniform support for theta.
    #[arg(long)]
    u1: f64,
    #[arg(long)]
    u2: f64,
    #[arg(long, default_value_t = 1e-4)]
    lambda0: f64,
    #[arg(long)]
    allow_improper: bool,
    /// Output path for the trace CSV.
    #[arg(long)]
    out_trace: PathBuf,
    /// Output path for the model artifact.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_fit_classifier(args: &FitClassifierArgs) -> Result<()> {
    let ds = ingest_csv(&args.data.data, &args.data.response)?;
    ds.require_binary_response()?;
    let kind = KernelKind::parse(&args.data.kernel)?;
    let priors = ClassifierPriorSpec::new(
        args.prior.lambda_kind()?,
        args.prior.c,
        args.prior.d,
        args.u1,
        args.u2,
        args.lambda0,
    )?;
    let gate = check_classifier_propriety(&priors)?;
    println!("gate {}", gate.record());
    let model = ClassifierModel::new(LossKind::parse(&args.loss)?, priors, kind)?;
    let cfg = args.chain.config()?.allow_improper(args.allow_improper);
    let trace = run_classifier_mcmc(&ds.y, &ds.x, &model, &cfg)?;
    let mut out = BufWriter::new(File::create(&args.out_trace).map_err(io_err)?);
    writeln!(out, "# gate {}", gate.record()).map_err(io_err)?;
    trace.to_csv(&mut out).map_err(io_err)?;
    println!(
        "wrote {} ({} kept iterations)",
        args.out_trace.display(),
        trace.n_kept()
    );
    for acc in &trace.accepted_meta {
        println!("acceptance block={} rate={:.3}", acc.block, acc.rate);
    }
    for line in summarize(&trace)?.records() {
        println!("summary {line}");
    }
    let mut r = Record::new();
    r.push("type", "classifier_fit");
    r.push("loss", &args.loss);
    r.push("kernel", kind.name());
    r.push("lambda_prior", model.priors.lambda_prior.describe());
    r.push("c", model.priors.c);
    r.push("d", model.priors.d);
    r.push("u1", model.priors.u1);
    r.push("u2", model.priors.u2);
    r.push("lambda0", model.priors.lambda0);
    r.push("gate_status", gate.status.name());
    r.push("gate_rule", gate.rule.name());
    r.push("trace", args.out_trace.display());
    r.push("x", format_matrix(ds.x.matrix()));
    let mut out = BufWriter::new(File::create(&args.out).map_err(io_err)?);
    writeln!(out, "{}", r.to_line()).map_err(io_err)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn load_classifier_artifact(r: &Record) -> Result<(ClassifierModel, CovariateSet, PathBuf)> {
    let kind = KernelKind::parse(r.require("kernel")?)?;
    let loss = LossKind::parse(r.require("loss")?)?;
    let lambda_prior = parse_lambda_prior_desc(r.require("lambda_prior")?)?;
    let priors = ClassifierPriorSpec::new(
        lambda_prior,
        r.require_f64("c")?,
        r.require_f64("d")?,
        r.require_f64("u1")?,
        r.require_f64("u2")?,
        r.require_f64("lambda0")?,
    )?;
    let model = ClassifierModel::new(loss, priors, kind)?;
    let x = CovariateSet::new(parse_matrix(r.require("x")?)?)?;
    Ok((model, x, PathBuf::from(r.require("trace")?)))
}

/// Parse the `describe()` form of a lambda prior, e.g.
/// `gamma(shape=1,rate=1)` or `jeffreys`.
fn parse_lambda_prior_desc(s: &str) -> Result<LambdaPriorKind> {
    if s == "jeffreys" {
        return Ok(LambdaPriorKind::Jeffreys);
    }
    let take = |prefix: &str| -> Option<&str> { s.strip_prefix(prefix)?.strip_suffix(')') };
    if let Some(body) = take("gamma(") {
        let mut shape = None;
        let mut rate = None;
        for part in body.split(',') {
            if let Some(v) = part.strip_prefix("shape=") {
                shape = v.parse().ok();
            }
            if let Some(v) = part.strip_prefix("rate=") {
                rate = v.parse().ok();
            }
        }
        if let (Some(shape), Some(rate)) = (shape, rate) {
            return Ok(LambdaPriorKind::Gamma { shape, rate });
        }
    }
    if let Some(body) = take("power(") {
        for part in body.split(',') {
            if let Some(v) = part.strip_prefix("a=") {
                if let Ok(exponent) = v.parse() {
                    return Ok(LambdaPriorKind::ImproperPower { exponent });
                }
            }
        }
    }
    if let Some(body) = take("half-cauchy(") {
        if let Some(v) = body.strip_prefix("scale=") {
            if let Ok(scale) = v.parse() {
                return Ok(LambdaPriorKind::HalfCauchyRootInverse { scale });
            }
        }
    }
    if let Some(body) = take("gumbel-type2(") {
        if let Some(v) = body.strip_prefix("rate=") {
            if let Ok(rate) = v.parse() {
                return Ok(LambdaPriorKind::GumbelType2 { rate });
            }
        }
    }
    Err(Error::Parse(format!("cannot parse lambda prior '{s}'")))
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    instances: usize,
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    let outcomes = run_verification_suites(args.seed, args.instances)?;
    let mut all_pass = true;
    for o in &outcomes {
        println!("{}", o.record());
        all_pass &= o.failures == 0;
    }
    Ok(all_pass)
}

#[derive(Args)]
struct MarginalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    prior: PriorArgs,
    /// Geometric grid of truncation bounds, e.g. 10,100,1000,10000.
    #[arg(long, default_value = "10,100,1000,10000,100000")]
    t_grid: String,
    /// Optional path for the plot-ready (T, I(T)) CSV.
    #[arg(long)]
    out_curve: Option<PathBuf>,
}

fn cmd_marginal(args: &MarginalArgs) -> Result<()> {
    let (ds, spec) = args.data.load()?;
    let k = build_design_matrix(&ds.x, &spec)?;
    let prior = args.prior.rvm_prior()?;
    let grid = parse_grid(&args.t_grid)?;
    let report = divergence_probe(&ds.y, &k, &prior, &grid)?;
    println!("probe {}", report.record());
    if let Some(path) = &args.out_curve {
        let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
        report.to_csv(&mut out).map_err(io_err)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[derive(Args)]
struct DemoArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    prior: PriorArgs,
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long, default_value = "10,100,1000,10000,100000")]
    t_grid: String,
    #[arg(long)]
    out_curve: Option<PathBuf>,
}

fn cmd_demo(args: &DemoArgs) -> Result<()> {
    let (ds, spec) = args.data.load()?;
    let k = build_design_matrix(&ds.x, &spec)?;
    let hp = args.prior.hyperparams()?;
    // The subcommand itself is the explicit opt-in to sample an improper
    // posterior.
    let cfg = args.chain.config()?.allow_improper(true);
    let grid = parse_grid(&args.t_grid)?;
    let report = impropriety_demo(&ds.y, &k, &hp, &cfg, &grid)?;
    for line in report.records() {
        println!("{line}");
    }
    if let Some(path) = &args.out_curve {
        let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
        report.probe.to_csv(&mut out).map_err(io_err)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn io_err(e: std::io::Error) -> Error {
    Error::Parse(e.to_string())
}

fn main() -> ExitCode {
    // Die quietly on a closed pipe (e.g. `sbl ... | head`) instead of
    // panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result: Result<ExitCode> = match &cli.cmd {
        Cmd::CheckPropriety(args) => cmd_check(args).map(|verdict| {
            println!("{}", verdict.record());
            match verdict.status {
                ProprietyStatus::Proper => ExitCode::SUCCESS,
                ProprietyStatus::Improper => ExitCode::from(2),
                ProprietyStatus::Undetermined => ExitCode::from(3),
            }
        }),
        Cmd::FitRvm(args) => cmd_fit_rvm(args).map(|()| ExitCode::SUCCESS),
        Cmd::Predict(args) => cmd_predict(args).map(|()| ExitCode::SUCCESS),
        Cmd::GibbsRvm(args) => cmd_gibbs(args).map(|()| ExitCode::SUCCESS),
        Cmd::FitClassifier(args) => cmd_fit_classifier(args).map(|()| ExitCode::SUCCESS),
        Cmd::VerifyBounds(args) => cmd_verify(args).map(|pass| {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }),
        Cmd::EstimateMarginal(args) => cmd_marginal(args).map(|()| ExitCode::SUCCESS),
        Cmd::DemoImpropriety(args) => cmd_demo(args).map(|()| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_prior_descriptions_round_trip() {
        for kind in [
            LambdaPriorKind::Gamma {
                shape: 1.5,
                rate: 2.0,
            },
            LambdaPriorKind::Jeffreys,
            LambdaPriorKind::ImproperPower { exponent: -0.25 },
            LambdaPriorKind::HalfCauchyRootInverse { scale: 0.7 },
            LambdaPriorKind::GumbelType2 { rate: 1.25 },
        ] {
            let desc = kind.describe();
            let back = parse_lambda_prior_desc(&desc).unwrap();
            assert_eq!(kind, back, "{desc}");
        }
    }
}
