//! Command-line front-end: fit, cv, predict, path, diversity, simulate.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray::{Array1, Array2};

use split_logit::data::Dataset;
use split_logit::diversity::DiversityReport;
use split_logit::error::{Result, SplitError};
use split_logit::io::{ingest, IngestOptions, ModelFile};
use split_logit::model::HyperParams;
use split_logit::simulate::{run_tradeoff_study, Scenario, ScenarioConfig, StudyConfig};
use split_logit::solver;
use split_logit::tuning::{
    self, alternating_search, make_grid, CvPoint, CvReport, GridKind, SearchConfig,
};

#[derive(Parser)]
#[command(
    name = "split-logit",
    version,
    about = "Diverse ensembles of sparse logistic regression models"
)]
struct Cli {
    /// Worker threads for cross-validation folds and simulation replications.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Delimited text file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Name of the label column.
    #[arg(long, default_value = "y")]
    label_column: String,
    /// Label value mapped to +1 (everything else maps to −1). When unset,
    /// labels must be numeric 0/1 or ±1.
    #[arg(long)]
    positive_label: Option<String>,
    /// Field delimiter (single character).
    #[arg(long, default_value = ",")]
    delimiter: String,
}

#[derive(Args, Clone)]
struct FitArgs {
    /// Elastic-net mixing parameter in [0, 1].
    #[arg(long, default_value_t = 0.75)]
    alpha: f64,
    /// Number of models in the ensemble.
    #[arg(long, short = 'G', default_value_t = 10)]
    groups: usize,
    /// Sparsity penalty; omit to tune it by cross-validation.
    #[arg(long)]
    lambda_sparsity: Option<f64>,
    /// Diversity penalty; omit to tune it by cross-validation.
    #[arg(long)]
    lambda_diversity: Option<f64>,
    #[arg(long, default_value_t = 10)]
    cv_folds: usize,
    #[arg(long, default_value_t = 100)]
    grid_size_sparsity: usize,
    #[arg(long, default_value_t = 100)]
    grid_size_diversity: usize,
    /// Convergence tolerance on the squared parameter change.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_sweeps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an ensemble; penalties left unset are tuned by cross-validation.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        fit: FitArgs,
        /// Output model file (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validated penalty search; writes the search report as JSON.
    Cv {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the final refit model here.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Ensemble probabilities and classes for each row of a data file.
    Predict {
        /// Model file produced by `fit`.
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coefficient solution path along the sparsity grid (long-format CSV).
    Path {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diversity report of a fitted model on labeled data.
    Diversity {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy–diversity trade-off study on a synthetic scenario.
    Simulate {
        /// Scenario: s1, s2 or s3.
        #[arg(long, default_value = "s3")]
        scenario: String,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 1500)]
        p: usize,
        /// Proportion of active variables.
        #[arg(long, default_value_t = 0.2)]
        zeta: f64,
        #[arg(long, default_value_t = 0.2)]
        rho1: f64,
        #[arg(long, default_value_t = 0.5)]
        rho2: f64,
        /// Target P(Y = +1).
        #[arg(long, default_value_t = 0.4)]
        pi1: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated ensemble sizes, e.g. 2,5,10,25.
        #[arg(long, default_value = "2,5,10,25")]
        groups_list: String,
        #[arg(long, default_value_t = 10)]
        replications: usize,
        #[arg(long, default_value_t = 2000)]
        test_size: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 5)]
        cv_folds: usize,
        #[arg(long, default_value_t = 20)]
        grid_size_sparsity: usize,
        #[arg(long, default_value_t = 20)]
        grid_size_diversity: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successes, everything else is usage
            let ok = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: failed to configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &SplitError) -> u8 {
    match e {
        SplitError::InvalidHyper(_) => 1,
        SplitError::Data(_)
        | SplitError::Io(_)
        | SplitError::SingleClass
        | SplitError::DimensionMismatch(_) => 2,
        SplitError::Numerical(_) | SplitError::NonFinite(_) | SplitError::NoSignal => 3,
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Fit { data, fit, out } => cmd_fit(&data, &fit, &out),
        Command::Cv { data, fit, out, model_out } => cmd_cv(&data, &fit, out.as_deref(), model_out.as_deref()),
        Command::Predict { model, data, out } => cmd_predict(&model, &data, out.as_deref()),
        Command::Path { data, fit, out } => cmd_path(&data, &fit, out.as_deref()),
        Command::Diversity { model, data, out } => cmd_diversity(&model, &data, out.as_deref()),
        Command::Simulate {
            scenario,
            n,
            p,
            zeta,
            rho1,
            rho2,
            pi1,
            seed,
            groups_list,
            replications,
            test_size,
            alpha,
            cv_folds,
            grid_size_sparsity,
            grid_size_diversity,
            out,
        } => {
            let scenario = match scenario.to_ascii_lowercase().as_str() {
                "s1" => Scenario::S1,
                "s2" => Scenario::S2,
                "s3" => Scenario::S3,
                other => {
                    return Err(SplitError::InvalidHyper(format!(
                        "unknown scenario '{other}' (expected s1, s2 or s3)"
                    )))
                }
            };
            let g_list: Vec<usize> = groups_list
                .split(',')
                .map(|s| {
                    s.trim().parse::<usize>().map_err(|_| {
                        SplitError::InvalidHyper(format!("bad ensemble size '{s}'"))
                    })
                })
                .collect::<Result<_>>()?;
            let config = ScenarioConfig { scenario, n, p, zeta, rho1, rho2, pi1, seed };
            let study = StudyConfig {
                alpha,
                cv_folds,
                grid_size_sparsity,
                grid_size_diversity,
                test_size,
                replications,
            };
            let table = run_tradeoff_study(&config, &g_list, &study)?;
            write_out(out.as_deref(), &table.to_csv())
        }
    }
}

fn load_data(args: &DataArgs) -> Result<Dataset> {
    let opts = IngestOptions {
        label_column: args.label_column.clone(),
        positive_label: args.positive_label.clone(),
        delimiter: parse_delimiter(&args.delimiter)?,
    };
    let ingested = ingest(&args.data, &opts)?;
    for w in &ingested.warnings {
        eprintln!("warning: {w}");
    }
    Ok(ingested.dataset)
}

fn parse_delimiter(s: &str) -> Result<u8> {
    let unescaped = match s {
        "\\t" | "tab" => "\t",
        other => other,
    };
    let bytes = unescaped.as_bytes();
    if bytes.len() != 1 {
        return Err(SplitError::InvalidHyper(format!(
            "delimiter must be a single character, got '{s}'"
        )));
    }
    Ok(bytes[0])
}

fn write_out(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(SplitError::from),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Significant-digit formatting used for all numeric CLI output.
fn sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    format!("{:.*e}", digits - 1, v)
}

fn hyper_from(fit: &FitArgs, lambda_s: f64, lambda_d: f64) -> HyperParams {
    HyperParams {
        alpha: fit.alpha,
        lambda_s,
        lambda_d,
        g: fit.groups,
        tol: fit.tol,
        max_sweeps: fit.max_sweeps,
    }
}

fn search_config(fit: &FitArgs) -> SearchConfig {
    SearchConfig {
        alpha: fit.alpha,
        g: fit.groups,
        k: fit.cv_folds,
        grid_size_sparsity: fit.grid_size_sparsity,
        grid_size_diversity: fit.grid_size_diversity,
        seed: fit.seed,
        ..Default::default()
    }
}

/// Cross-validated one-dimensional grid search with the other penalty fixed.
fn tune_one(
    data: &Dataset,
    fit: &FitArgs,
    kind: GridKind,
    fixed: f64,
) -> Result<(f64, Vec<CvPoint>)> {
    let (lambda_max, l) = match kind {
        GridKind::Sparsity => (
            tuning::lambda_s_max(data, fit.alpha, fit.groups, fixed)?,
            fit.grid_size_sparsity,
        ),
        GridKind::Diversity => {
            let ld = tuning::lambda_d_max(data, fit.alpha, fit.groups, fixed)?;
            if ld.degenerate {
                return Ok((0.0, Vec::new()));
            }
            (ld.value, fit.grid_size_diversity)
        }
    };
    let grid = make_grid(kind, l, lambda_max, data.n(), data.p());
    let mut values = grid.values;
    if kind == GridKind::Diversity {
        values.push(0.0);
    }
    let assignment = tuning::stratified_folds(data.y(), fit.cv_folds.min(data.n()), fit.seed);
    let mut points = Vec::with_capacity(values.len());
    let mut best = (f64::INFINITY, 0.0);
    for v in values {
        let (ls, ld) = match kind {
            GridKind::Sparsity => (v, fixed),
            GridKind::Diversity => (fixed, v),
        };
        let hyper = hyper_from(fit, ls, ld);
        let (mean, se) = tuning::cv_loss(data, &hyper, fit.cv_folds.min(data.n()), &assignment)?;
        if mean < best.0 {
            best = (mean, v);
        }
        points.push(CvPoint { lambda_s: ls, lambda_d: ld, mean_loss: mean, std_error: se });
    }
    Ok((best.1, points))
}

/// Resolve (λ_s, λ_d), tuning whichever the user omitted, then refit on all
/// rows. Returns the fit and the search report when any tuning happened.
fn resolve_and_fit(
    data: &Dataset,
    fit_args: &FitArgs,
) -> Result<(split_logit::SplitFit, Option<CvReport>)> {
    match (fit_args.lambda_sparsity, fit_args.lambda_diversity) {
        (Some(ls), Some(ld)) => {
            let fit = solver::fit(data, &hyper_from(fit_args, ls, ld), None)?;
            Ok((fit, None))
        }
        (None, None) => {
            let (report, fit) = alternating_search(data, &search_config(fit_args))?;
            Ok((fit, Some(report)))
        }
        (None, Some(ld)) => {
            let (ls, _) = tune_one(data, fit_args, GridKind::Sparsity, ld)?;
            let fit = solver::fit(data, &hyper_from(fit_args, ls, ld), None)?;
            Ok((fit, None))
        }
        (Some(ls), None) => {
            let (ld, _) = tune_one(data, fit_args, GridKind::Diversity, ls)?;
            let fit = solver::fit(data, &hyper_from(fit_args, ls, ld), None)?;
            Ok((fit, None))
        }
    }
}

fn cmd_fit(data_args: &DataArgs, fit_args: &FitArgs, out: &Path) -> Result<()> {
    let data = load_data(data_args)?;
    let (fit, _) = resolve_and_fit(&data, fit_args)?;
    if !fit.converged {
        eprintln!("warning: solver stopped before meeting the tolerance");
    }
    ModelFile::from_fit(&fit).save(out)
}

fn cmd_cv(
    data_args: &DataArgs,
    fit_args: &FitArgs,
    out: Option<&Path>,
    model_out: Option<&Path>,
) -> Result<()> {
    if fit_args.lambda_sparsity.is_some() && fit_args.lambda_diversity.is_some() {
        return Err(SplitError::InvalidHyper(
            "cv requires at least one penalty left free; both --lambda-sparsity and \
             --lambda-diversity were supplied"
                .into(),
        ));
    }
    let data = load_data(data_args)?;
    let (report, fit) = match (fit_args.lambda_sparsity, fit_args.lambda_diversity) {
        (None, None) => alternating_search(&data, &search_config(fit_args))?,
        (None, Some(ld)) => {
            let (ls, points) = tune_one(&data, fit_args, GridKind::Sparsity, ld)?;
            let fit = solver::fit(&data, &hyper_from(fit_args, ls, ld), None)?;
            (one_pass_report(&data, fit_args, GridKind::Sparsity, ls, ld, points), fit)
        }
        (Some(ls), None) => {
            let (ld, points) = tune_one(&data, fit_args, GridKind::Diversity, ls)?;
            let fit = solver::fit(&data, &hyper_from(fit_args, ls, ld), None)?;
            (one_pass_report(&data, fit_args, GridKind::Diversity, ls, ld, points), fit)
        }
        (Some(_), Some(_)) => unreachable!(),
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| SplitError::Data(format!("serialization failed: {e}")))?;
    write_out(out, &format!("{json}\n"))?;
    if let Some(path) = model_out {
        ModelFile::from_fit(&fit).save(path)?;
    }
    Ok(())
}

fn one_pass_report(
    data: &Dataset,
    fit_args: &FitArgs,
    kind: GridKind,
    lambda_s: f64,
    lambda_d: f64,
    points: Vec<CvPoint>,
) -> CvReport {
    let selected = match kind {
        GridKind::Sparsity => lambda_s,
        GridKind::Diversity => lambda_d,
    };
    let best = points
        .iter()
        .map(|p| p.mean_loss)
        .fold(f64::INFINITY, f64::min);
    let lambda_max = points
        .iter()
        .map(|p| match kind {
            GridKind::Sparsity => p.lambda_s,
            GridKind::Diversity => p.lambda_d,
        })
        .fold(0.0, f64::max);
    CvReport {
        fold_assignment: tuning::stratified_folds(
            data.y(),
            fit_args.cv_folds.min(data.n()),
            fit_args.seed,
        ),
        passes: vec![tuning::PassRecord {
            kind,
            pass: 1,
            lambda_max,
            points,
            selected: Some(selected),
        }],
        selected_lambda_s: lambda_s,
        selected_lambda_d: lambda_d,
        pass_count: 1,
        final_cv_loss: best,
        warnings: Vec::new(),
    }
}

/// Read raw feature rows from a delimited file in the model's variable
/// order, ignoring the label column and any extra columns.
fn read_feature_rows(
    path: &Path,
    delimiter: u8,
    variables: &[String],
) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| SplitError::Data(format!("cannot read {}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| SplitError::Data(format!("bad header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let col_idx: Vec<usize> = variables
        .iter()
        .map(|v| {
            headers.iter().position(|h| h == v).ok_or_else(|| {
                SplitError::Data(format!("column '{v}' required by the model is missing"))
            })
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| SplitError::Data(format!("row {}: {e}", r + 2)))?;
        for (&c, v) in col_idx.iter().zip(variables) {
            let cell = record.get(c).unwrap_or("");
            let parsed: f64 = cell.parse().map_err(|_| {
                SplitError::Data(format!("row {}, column '{}': unparseable value '{}'", r + 2, v, cell))
            })?;
            rows.push(parsed);
        }
        n += 1;
    }
    Array2::from_shape_vec((n, variables.len()), rows)
        .map_err(|e| SplitError::Data(format!("shape error: {e}")))
}

fn cmd_predict(model_path: &Path, data_args: &DataArgs, out: Option<&Path>) -> Result<()> {
    let model = ModelFile::load(model_path)?;
    let fit = model.to_fit()?;
    let delimiter = parse_delimiter(&data_args.delimiter)?;
    let x = read_feature_rows(&data_args.data, delimiter, &model.variables)?;
    let mut content = String::from("row,probability,class\n");
    for i in 0..x.nrows() {
        let p = fit.predict_proba_original(x.row(i))?;
        let class = if p >= 0.5 { 1 } else { -1 };
        content.push_str(&format!("{},{},{}\n", i + 1, sig(p, 10), class));
    }
    write_out(out, &content)
}

fn cmd_path(data_args: &DataArgs, fit_args: &FitArgs, out: Option<&Path>) -> Result<()> {
    let data = load_data(data_args)?;
    let lambda_d = fit_args.lambda_diversity.unwrap_or(0.0);
    let lambda_max = tuning::lambda_s_max(&data, fit_args.alpha, fit_args.groups, lambda_d)?;
    let grid = make_grid(
        GridKind::Sparsity,
        fit_args.grid_size_sparsity,
        lambda_max,
        data.n(),
        data.p(),
    );
    let fits = solver::solution_path(
        &data,
        fit_args.alpha,
        lambda_d,
        fit_args.groups,
        &grid.values,
    )?;
    // rows ordered by (descending lambda_s, model, variable); the
    // ensemble-averaged path follows the per-model rows at each lambda_s
    let mut content = String::from("lambda_s,model,variable,coefficient\n");
    for (fit, &ls) in fits.iter().zip(&grid.values) {
        let ls_str = sig(ls, 12);
        for g in 0..fit.g() {
            for (j, name) in fit.names.iter().enumerate() {
                content.push_str(&format!(
                    "{},{},{},{}\n",
                    ls_str,
                    g + 1,
                    name,
                    sig(fit.coefs_original[(j, g)], 12)
                ));
            }
        }
        let (_, beta) = fit.ensemble_params_original();
        for (j, name) in fit.names.iter().enumerate() {
            content.push_str(&format!(
                "{},ensemble,{},{}\n",
                ls_str,
                name,
                sig(beta[j], 12)
            ));
        }
    }
    write_out(out, &content)
}

fn cmd_diversity(model_path: &Path, data_args: &DataArgs, out: Option<&Path>) -> Result<()> {
    let model = ModelFile::load(model_path)?;
    let fit = model.to_fit()?;
    let data = load_data(data_args)?;
    // reorder raw feature columns to the model's variable order
    let raw = data.raw_x();
    let col_idx: Vec<usize> = model
        .variables
        .iter()
        .map(|v| {
            data.names().iter().position(|h| h == v).ok_or_else(|| {
                SplitError::Data(format!("column '{v}' required by the model is missing"))
            })
        })
        .collect::<Result<_>>()?;
    let n = data.n();
    let g = fit.g();
    let mut model_preds = Array2::zeros((g, n));
    let mut ensemble_pred = Array1::zeros(n);
    for i in 0..n {
        let row: Array1<f64> = col_idx.iter().map(|&c| raw[(i, c)]).collect();
        for k in 0..g {
            let lin = fit.model_linear_original(k, row.view());
            model_preds[(k, i)] = if lin >= 0.0 { 1.0 } else { -1.0 };
        }
        ensemble_pred[i] = fit.predict_class_original(row.view())?;
    }
    let report = DiversityReport::compute(&model_preds, &ensemble_pred, &data.y().to_owned(), &fit.coefs)?;
    let mut content = String::new();
    for (key, value) in report.flat() {
        match value {
            Some(v) => content.push_str(&format!("{key},{}\n", sig(v, 10))),
            None => content.push_str(&format!("{key},NA\n")),
        }
    }
    write_out(out, &content)
}
