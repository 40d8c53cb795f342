//! `fstglm`: fit, apply, and tune sparse binary classifiers with
//! heavy-tailed and skewed link functions.
//!
//! Exit codes: 0 success, 2 usage or validation problem, 3 unreadable or
//! malformed input file, 4 numerical failure during fitting.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use fstglm::dist::student_t_quantile;
use fstglm::eval::{
    category_table_csv, grid_rows_to_csv, protocol_report_csv, refit_and_test, test_report_csv,
    CorpusProtocolConfig, Objective,
};
use fstglm::eval::corpus_protocol;
use fstglm::{
    fit, gen_example1, gen_example2, load_model, save_model, skew_t_pdf, Corpus, Dataset64, Error,
    FitConfig64, FitTrace64, FittedModel64, GridSpec64, LinkFamily, LinkSpec64, PriorSpec64,
    Result, SkewTDensityParams, Stoplist,
};

#[derive(Parser)]
#[command(
    name = "fstglm",
    version,
    about = "Sparse binary regression with Student-t and skewed Student-t links"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one of the built-in simulation designs and write it as CSV
    Simulate(SimulateArgs),
    /// Fit a model on a labeled CSV and save it as JSON
    Fit(FitArgs),
    /// Write per-row probabilities and labels for a saved model
    Predict(PredictArgs),
    /// Score a saved model against labeled data
    Evaluate(EvaluateArgs),
    /// Grid-search hyperparameters on tabular splits or a text corpus
    Grid(GridArgs),
    /// Tabulate link, quantile, prior, or density curves as CSV
    Curve(CurveArgs),
}

/// Knobs of the EM fitting loop, shared by every command that fits models.
#[derive(Args, Debug, Clone)]
struct RunConfig {
    /// Stop when the relative L2 change of the coefficients falls below this
    #[arg(long, default_value_t = 0.005)]
    delta_tol: f64,
    /// Ridge added to the least-squares initializer
    #[arg(long, default_value_t = 1e-6)]
    eps_init: f64,
    /// Iteration cap for the EM loop
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Magnitude below which a coefficient is frozen at exact zero
    #[arg(long, default_value_t = 1e-10)]
    zero_threshold: f64,
    /// Prepend an intercept column, penalized like any other coefficient
    #[arg(long)]
    intercept: bool,
}

impl RunConfig {
    fn to_fit_config(&self) -> FitConfig64 {
        FitConfig64 {
            delta_tol: self.delta_tol,
            eps_init: self.eps_init,
            max_iter: self.max_iter,
            zero_threshold: self.zero_threshold,
            intercept: self.intercept,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Which design to draw: 1 (independent binary) or 2 (correlated thresholded)
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    example: u8,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Labeled CSV: header `y,<names...>`, labels 0/1
    #[arg(long)]
    data: PathBuf,
    /// Link degrees of freedom
    #[arg(long)]
    nu: f64,
    /// Link asymmetry; omit for the symmetric link (same as --delta 1)
    #[arg(long)]
    delta: Option<f64>,
    /// Sparsity hyperparameter; larger values prune more coefficients
    #[arg(long)]
    gamma: f64,
    #[command(flatten)]
    run: RunConfig,
    /// Output model JSON path
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV of the objective and step-size history
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Model JSON written by `fit`
    #[arg(long)]
    model: PathBuf,
    /// Labeled CSV with the model's features (the y column is ignored)
    #[arg(long)]
    data: PathBuf,
    /// Output CSV path (columns prob,label)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Model JSON written by `fit`
    #[arg(long)]
    model: PathBuf,
    /// Labeled CSV to score against
    #[arg(long)]
    data: PathBuf,
    /// Output CSV path; printed to stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    /// Symmetric Student-t link (delta fixed at 1)
    Symmetric,
    /// Skewed link; the grid's delta values are searched
    Skew,
}

impl FamilyArg {
    fn to_family(self) -> LinkFamily {
        match self {
            FamilyArg::Symmetric => LinkFamily::Symmetric,
            FamilyArg::Skew => LinkFamily::Skew,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ObjectiveArg {
    /// Maximize F1 on the validation part
    F1,
    /// Minimize the misclassification rate on the validation part
    Misclassification,
}

impl ObjectiveArg {
    fn to_objective(self) -> Objective {
        match self {
            ObjectiveArg::F1 => Objective::F1,
            ObjectiveArg::Misclassification => Objective::Misclassification,
        }
    }
}

#[derive(Args)]
struct GridArgs {
    /// Tabular mode: training CSV
    #[arg(long)]
    train: Option<PathBuf>,
    /// Tabular mode: validation CSV used to pick hyperparameters
    #[arg(long)]
    val: Option<PathBuf>,
    /// Tabular mode: held-out CSV scored after refitting on train+val
    #[arg(long)]
    test: Option<PathBuf>,
    /// Corpus mode: labeled TSV of documents (one-vs-rest per category)
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Corpus mode: stop-word file, one word per line (default: bundled list)
    #[arg(long)]
    stoplist: Option<PathBuf>,
    /// Corpus mode: vocabulary size kept per category
    #[arg(long, default_value_t = 100)]
    top_k: usize,
    /// Corpus mode: number of repeated seeded splits
    #[arg(long, default_value_t = 5)]
    splits: usize,
    /// Seed for the data splits
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated degrees-of-freedom values (default: built-in grid)
    #[arg(long)]
    nu_grid: Option<String>,
    /// Comma-separated sparsity values (default: built-in grid)
    #[arg(long)]
    gamma_grid: Option<String>,
    /// Comma-separated asymmetry values (default: built-in grid)
    #[arg(long)]
    delta_grid: Option<String>,
    #[arg(long, value_enum, default_value_t = FamilyArg::Skew)]
    family: FamilyArg,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::F1)]
    objective: ObjectiveArg,
    #[command(flatten)]
    run: RunConfig,
    /// Output CSV: every grid row (tabular) or per-category winners (corpus)
    #[arg(long)]
    out_table: PathBuf,
    /// Output CSV: held-out test report
    #[arg(long)]
    out_report: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CurveKind {
    /// Success probability against the linear predictor
    Link,
    /// Student-t quantiles against logistic quantiles
    Qq,
    /// Density of the coefficient-scale prior
    Hyperprior,
    /// Density of the mode-zero skewed t
    Skewpdf,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, value_enum)]
    kind: CurveKind,
    /// Degrees of freedom (link, qq, skewpdf)
    #[arg(long, default_value_t = 8.0)]
    nu: f64,
    /// Asymmetry (link, skewpdf); omit for symmetric
    #[arg(long)]
    delta: Option<f64>,
    /// Prior rate (hyperprior)
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Grid(a) => cmd_grid(&a),
        Command::Curve(a) => cmd_curve(&a),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        let code = match &e {
            Error::Validation(_) => 2,
            e if e.is_input_format() => 3,
            _ => 4,
        };
        std::process::exit(code);
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

fn link_from_flags(nu: f64, delta: Option<f64>) -> Result<LinkSpec64> {
    match delta {
        None => LinkSpec64::symmetric(nu),
        Some(d) => LinkSpec64::skew(nu, d),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let data = match args.example {
        1 => gen_example1::<f64>(args.seed),
        _ => gen_example2::<f64>(args.seed)?,
    };
    data.write_csv(&args.out)
}

fn trace_csv(trace: &FitTrace64) -> String {
    let mut out = String::from("iteration,objective,rel_change\n");
    out.push_str(&format!("0,{},\n", trace.objective[0]));
    for i in 0..trace.iterations {
        out.push_str(&format!(
            "{},{},{}\n",
            i + 1,
            trace.objective[i + 1],
            trace.rel_change[i]
        ));
    }
    out
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let data = Dataset64::read_csv(&args.data)?;
    let link = link_from_flags(args.nu, args.delta)?;
    let prior = PriorSpec64::new(args.gamma)?;
    let (model, trace) = fit(&data, link, prior, &args.run.to_fit_config())?;
    save_model(&model, &args.out)?;
    if let Some(path) = &args.trace {
        write_text(path, &trace_csv(&trace))?;
    }
    println!(
        "converged={} iterations={} nonzero={}/{} objective={}",
        trace.converged,
        trace.iterations,
        model.beta.len() - model.sparsity_count(),
        model.beta.len(),
        trace.objective[trace.iterations]
    );
    Ok(())
}

fn load_model_and_data(model: &Path, data: &Path) -> Result<(FittedModel64, Dataset64)> {
    let model = load_model::<f64>(model)?;
    let data = Dataset64::read_csv(data)?;
    model.check_features(data.feature_names())?;
    Ok((model, data))
}

fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let (model, data) = load_model_and_data(&args.model, &args.data)?;
    let probs = model.predict_proba_rows(data.design())?;
    let labels = model.classify_rows(data.design())?;
    let mut out = String::from("prob,label\n");
    for (p, l) in probs.iter().zip(&labels) {
        out.push_str(&format!("{},{}\n", p, u8::from(*l)));
    }
    write_text(&args.out, &out)
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let (model, data) = load_model_and_data(&args.model, &args.data)?;
    let preds = model.classify_rows(data.design())?;
    let counts = fstglm::ConfusionCounts::from_predictions(&preds, data.labels())?;
    let report = fstglm::eval::TestReport::<f64> {
        counts,
        metrics: fstglm::precision_recall_f1(&counts),
        misclassification: fstglm::misclassification_rate(&preds, data.labels())?,
    };
    let csv = test_report_csv(&report);
    match &args.out {
        Some(path) => write_text(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn parse_grid_list(flag: &str, text: &str) -> Result<Vec<f64>> {
    let mut vals = Vec::new();
    for part in text.split(',') {
        let trimmed = part.trim();
        if trimmed.is_empty() {
            return Err(Error::Validation(format!("empty value in --{flag}")));
        }
        let v: f64 = trimmed
            .parse()
            .map_err(|_| Error::Validation(format!("bad number {trimmed:?} in --{flag}")))?;
        vals.push(v);
    }
    Ok(vals)
}

fn grid_from_flags(args: &GridArgs, default: GridSpec64) -> Result<GridSpec64> {
    let mut grid = default;
    if let Some(s) = &args.nu_grid {
        grid.nu_values = parse_grid_list("nu-grid", s)?;
    }
    if let Some(s) = &args.gamma_grid {
        grid.gamma_values = parse_grid_list("gamma-grid", s)?;
    }
    if let Some(s) = &args.delta_grid {
        grid.delta_values = parse_grid_list("delta-grid", s)?;
    }
    grid.validate()?;
    Ok(grid)
}

fn cmd_grid(args: &GridArgs) -> Result<()> {
    match (&args.corpus, &args.train) {
        (Some(corpus), None) => grid_corpus(args, corpus),
        (None, Some(train)) => grid_tabular(args, train),
        (Some(_), Some(_)) => Err(Error::Validation(
            "--corpus and --train are mutually exclusive".into(),
        )),
        (None, None) => Err(Error::Validation(
            "grid needs either --train/--val/--test or --corpus".into(),
        )),
    }
}

fn grid_tabular(args: &GridArgs, train: &Path) -> Result<()> {
    let (val, test) = match (&args.val, &args.test) {
        (Some(v), Some(t)) => (v, t),
        _ => {
            return Err(Error::Validation(
                "tabular grid needs --val and --test alongside --train".into(),
            ))
        }
    };
    let train = Dataset64::read_csv(train)?;
    let val = Dataset64::read_csv(val)?;
    let test = Dataset64::read_csv(test)?;
    let grid = grid_from_flags(args, GridSpec64::simulation_default())?;
    let config = args.run.to_fit_config();
    let outcome = fstglm::grid_search(
        &train,
        &val,
        args.family.to_family(),
        &grid,
        args.objective.to_objective(),
        &config,
    )?;
    write_text(&args.out_table, &grid_rows_to_csv(&outcome.rows))?;
    let pooled = train.concat(&val)?;
    let (_, report) = refit_and_test(&pooled, &test, outcome.best_link, outcome.best_gamma, &config)?;
    write_text(&args.out_report, &test_report_csv(&report))?;
    println!(
        "selected nu={} delta={} gamma={} validation={} test_f1={} test_misclassification={}",
        outcome.best_link.nu,
        outcome.best_link.delta,
        outcome.best_gamma,
        outcome.best_value,
        report.metrics.f1,
        report.misclassification
    );
    Ok(())
}

fn grid_corpus(args: &GridArgs, corpus: &Path) -> Result<()> {
    let corpus = Corpus::read_tsv(corpus)?;
    let stoplist = match &args.stoplist {
        Some(path) => Stoplist::from_file(path)?,
        None => Stoplist::bundled(),
    };
    let cfg = CorpusProtocolConfig::<f64> {
        grid: grid_from_flags(args, GridSpec64::corpus_default())?,
        family: args.family.to_family(),
        objective: args.objective.to_objective(),
        top_k: args.top_k,
        fit: args.run.to_fit_config(),
    };
    let rep = corpus_protocol(&corpus, &stoplist, &cfg, args.seed, args.splits)?;
    // Per-category winners of every split, tagged by split number.
    let mut table = String::from("split,category,nu,delta,gamma,validation_objective,test_f1\n");
    for (i, run) in rep.runs.iter().enumerate() {
        for line in category_table_csv(run).lines().skip(1) {
            table.push_str(&format!("{},{}\n", i + 1, line));
        }
    }
    write_text(&args.out_table, &table)?;
    write_text(&args.out_report, &protocol_report_csv(&rep))?;
    println!(
        "splits={} mean_micro_f1={} sd_micro_f1={} mean_macro_f1={}",
        args.splits, rep.mean_micro.f1, rep.sd_micro.f1, rep.mean_macro.f1
    );
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Validation(format!(
            "{name} must be positive and finite, got {v}"
        )));
    }
    Ok(())
}

fn cmd_curve(args: &CurveArgs) -> Result<()> {
    let csv = match args.kind {
        CurveKind::Link => {
            let link = link_from_flags(args.nu, args.delta)?;
            let mut out = String::from("eta,probability\n");
            for i in 0..=1600u32 {
                let eta = f64::from(i) * 0.01 - 8.0;
                out.push_str(&format!("{},{}\n", eta, fstglm::skew_t_link(eta, link)));
            }
            out
        }
        CurveKind::Qq => {
            check_positive("nu", args.nu)?;
            let mut out = String::from("logistic_quantile,t_quantile\n");
            for k in 1..=1999u32 {
                let p = f64::from(k) * 0.0005;
                let logistic = (p / (1.0 - p)).ln();
                out.push_str(&format!("{},{}\n", logistic, student_t_quantile(p, args.nu)?));
            }
            out
        }
        CurveKind::Hyperprior => {
            check_positive("gamma", args.gamma)?;
            let mut out = String::from("tau,density\n");
            for k in 1..=500u32 {
                let tau = f64::from(k) * 0.01;
                let density = args.gamma / 2.0 * (-args.gamma * tau / 2.0).exp();
                out.push_str(&format!("{},{}\n", tau, density));
            }
            out
        }
        CurveKind::Skewpdf => {
            let params = SkewTDensityParams::new(0.0, args.nu, args.delta.unwrap_or(1.0))?;
            let mut out = String::from("z,density\n");
            for i in 0..=1600u32 {
                let z = f64::from(i) * 0.01 - 8.0;
                out.push_str(&format!("{},{}\n", z, skew_t_pdf(z, params)));
            }
            out
        }
    };
    write_text(&args.out, &csv)
}
