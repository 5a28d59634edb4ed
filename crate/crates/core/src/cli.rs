//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on configuration errors (bad flags, missing
//! files, invalid λ), 1 on data or runtime errors. Every output is written
//! through a temporary file and renamed into place once all work succeeded.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::backward::PruneTrace;
use crate::dataset::{encode_features, load_csv, make_folds, CsvOptions, Dataset};
use crate::error::{FairMarsError, Result};
use crate::evaluation::{
    cross_validate, cross_validate_grid, lambda_sweep, render_cv_csv, render_cv_text, render_sweep_csv,
    render_sweep_text, Variant, LAMBDA_GRID,
};
use crate::forward::{ForwardReport, IterationLog};
use crate::model::{fit, write_atomic, FairMarsModel, FitConfig, TrainingSummary};

#[derive(Debug, Parser)]
#[command(name = "fairmars", version, about = "Fairness-aware MARS: fit, evaluate and explain")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model and save it.
    Fit(FitArgs),
    /// Predict with a saved model.
    Predict(PredictArgs),
    /// K-fold cross-validation of the model variants.
    Cv(CvArgs),
    /// Single-fold λ sweep.
    Sweep(SweepArgs),
    /// Print a saved model as a rule table.
    ExportRules(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    response_col: Option<String>,
    #[arg(long)]
    sensitive_col: Option<String>,
    /// Comma-separated predictor columns (default: all but the response).
    #[arg(long, value_delimiter = ',')]
    feature_cols: Option<Vec<String>>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    include_sensitive: Option<bool>,
    /// Single-character field separator.
    #[arg(long)]
    delimiter: Option<char>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    max_terms: Option<usize>,
    #[arg(long)]
    max_degree: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    faircoef: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    fairknot: Option<bool>,
    #[arg(long)]
    gcv_d: Option<f64>,
    /// λ for pruning (defaults to the knot-search λ).
    #[arg(long)]
    backward_lambda: Option<f64>,
    #[arg(long)]
    min_group_size: Option<usize>,
    /// Grow to max-terms regardless of improvement.
    #[arg(long)]
    strict_paper_mode: bool,
    #[arg(long)]
    min_span: Option<usize>,
    #[arg(long)]
    end_span: Option<usize>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long)]
    model_out: Option<PathBuf>,
    #[arg(long)]
    report_out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model_in: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    delimiter: Option<char>,
    #[arg(long)]
    report_out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Single λ; without it the fair-knot variants run over 0.2, 0.4, 0.6, 0.8.
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    fold_seed: Option<u64>,
    #[arg(long)]
    report_out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated ascending λ values starting at 0.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    fold_seed: Option<u64>,
    /// Held-out fold.
    #[arg(long)]
    fold: Option<usize>,
    #[arg(long)]
    report_out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    model_in: PathBuf,
    #[arg(long)]
    include_pruned: bool,
    #[arg(long)]
    report_out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

/// Keys accepted in a `--config` TOML file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    data: Option<PathBuf>,
    response_col: Option<String>,
    sensitive_col: Option<String>,
    feature_cols: Option<Vec<String>>,
    include_sensitive: Option<bool>,
    delimiter: Option<String>,
    lambda: Option<f64>,
    lambdas: Option<Vec<f64>>,
    max_terms: Option<usize>,
    max_degree: Option<usize>,
    faircoef: Option<bool>,
    fairknot: Option<bool>,
    gcv_d: Option<f64>,
    backward_lambda: Option<f64>,
    min_group_size: Option<usize>,
    strict_paper_mode: Option<bool>,
    min_span: Option<usize>,
    end_span: Option<usize>,
    folds: Option<usize>,
    fold_seed: Option<u64>,
    fold: Option<usize>,
}

fn read_file_config(path: &Option<PathBuf>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| FairMarsError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg: FileConfig =
        toml::from_str(&text).map_err(|e| FairMarsError::Config(format!("invalid config {}: {e}", path.display())))?;
    if let Some(data) = &cfg.data {
        if data.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.data = Some(base.join(data));
        }
    }
    Ok(cfg)
}

fn delimiter_byte(c: char) -> Result<u8> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| FairMarsError::Config(format!("delimiter '{c}' must be a single ASCII character")))
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(FairMarsError::Config(format!("input file {} does not exist", path.display())));
    }
    Ok(())
}

fn load_data(args: &DataArgs, file: &FileConfig) -> Result<Dataset> {
    let data = args
        .data
        .clone()
        .or_else(|| file.data.clone())
        .ok_or_else(|| FairMarsError::Config("--data is required".into()))?;
    let response = args
        .response_col
        .clone()
        .or_else(|| file.response_col.clone())
        .ok_or_else(|| FairMarsError::Config("--response-col is required".into()))?;
    let sensitive = args
        .sensitive_col
        .clone()
        .or_else(|| file.sensitive_col.clone())
        .ok_or_else(|| FairMarsError::Config("--sensitive-col is required".into()))?;
    let delimiter = match (args.delimiter, &file.delimiter) {
        (Some(c), _) => delimiter_byte(c)?,
        (None, Some(s)) => {
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => delimiter_byte(c)?,
                _ => return Err(FairMarsError::Config(format!("delimiter '{s}' must be one character"))),
            }
        }
        (None, None) => b',',
    };
    require_file(&data)?;
    let mut opts = CsvOptions::new(response, sensitive)
        .with_include_sensitive(args.include_sensitive.or(file.include_sensitive).unwrap_or(true))
        .with_delimiter(delimiter);
    if let Some(cols) = args.feature_cols.clone().or_else(|| file.feature_cols.clone()) {
        opts = opts.with_feature_cols(cols);
    }
    load_csv(&data, &opts)
}

fn fit_config(m: &ModelArgs, file: &FileConfig, lambda: f64, seed: u64) -> Result<FitConfig> {
    let mut cfg = FitConfig::default();
    let f = &mut cfg.forward;
    f.lambda = lambda;
    if let Some(v) = m.max_terms.or(file.max_terms) {
        f.max_terms = v;
    }
    if let Some(v) = m.max_degree.or(file.max_degree) {
        f.max_degree = v;
    }
    f.use_fair_knot = m.fairknot.or(file.fairknot).unwrap_or(true);
    if let Some(v) = m.min_group_size.or(file.min_group_size) {
        f.min_group_size = v;
    }
    f.strict_paper_mode = m.strict_paper_mode || file.strict_paper_mode.unwrap_or(false);
    if let Some(v) = m.min_span.or(file.min_span) {
        f.min_span = v;
    }
    if let Some(v) = m.end_span.or(file.end_span) {
        f.end_span = v;
    }
    cfg.faircoef = m.faircoef.or(file.faircoef).unwrap_or(false);
    cfg.gcv_penalty = m.gcv_d.or(file.gcv_d);
    cfg.backward_lambda = m.backward_lambda.or(file.backward_lambda);
    cfg.seed = seed;
    cfg.validate()?;
    Ok(cfg)
}

/// Pending output: written only after every computation succeeded.
struct Output {
    path: Option<PathBuf>,
    body: String,
}

#[derive(Serialize)]
struct FitReport<'a> {
    rules: Vec<String>,
    training: &'a TrainingSummary,
    prune_trace: &'a PruneTrace,
    forward_log: &'a [IterationLog],
    forward_report: &'a ForwardReport,
}

fn run_fit(args: FitArgs) -> Result<Vec<Output>> {
    let file = read_file_config(&args.data.config)?;
    let model_out = args
        .model_out
        .ok_or_else(|| FairMarsError::Config("--model-out is required".into()))?;
    let lambda = args.lambda.or(file.lambda).unwrap_or(0.0);
    let cfg = fit_config(&args.model, &file, lambda, 0)?;
    let ds = load_data(&args.data, &file)?;
    let out = fit(&ds, &cfg)?;
    let mut outputs = vec![Output {
        path: Some(model_out),
        body: out.model.to_json()?,
    }];
    let rules: Vec<String> = out.model.export_rules(true).lines().map(str::to_string).collect();
    let body = match args.format.unwrap_or(Format::Text) {
        Format::Json => {
            let report = FitReport {
                rules,
                training: out.model.training(),
                prune_trace: &out.trace,
                forward_log: &out.forward.log,
                forward_report: &out.forward.report,
            };
            serde_json::to_string_pretty(&report)? + "\n"
        }
        Format::Csv => out.forward.log_json_lines()?,
        Format::Text => {
            let t = out.model.training();
            format!(
                "{}\ntraining rows {}  lof {:.6}  disparity {:.6}  gcv {:.6}\n",
                out.model.export_rules(true),
                t.n_rows,
                t.lof,
                t.disparity,
                t.gcv
            )
        }
    };
    outputs.push(Output {
        path: args.report_out,
        body,
    });
    Ok(outputs)
}

fn run_predict(args: PredictArgs) -> Result<Vec<Output>> {
    require_file(&args.model_in)?;
    require_file(&args.data)?;
    let model = FairMarsModel::load(&args.model_in)?;
    let delimiter = delimiter_byte(args.delimiter.unwrap_or(','))?;
    let file = std::fs::File::open(&args.data).map_err(|e| FairMarsError::io(&args.data, e))?;
    let x = encode_features(file, model.feature_specs(), delimiter)?;
    let pred = model.predict_matrix(&x)?;
    let body = match args.format.unwrap_or(Format::Csv) {
        Format::Json => serde_json::to_string(&pred)? + "\n",
        Format::Csv => {
            let mut s = String::from("row,prediction\n");
            for (i, p) in pred.iter().enumerate() {
                s.push_str(&format!("{},{p}\n", i + 1));
            }
            s
        }
        Format::Text => pred.iter().map(|p| format!("{p}\n")).collect(),
    };
    Ok(vec![Output {
        path: args.report_out,
        body,
    }])
}

fn fold_params(folds: Option<usize>, seed: Option<u64>, file: &FileConfig) -> (usize, u64) {
    (folds.or(file.folds).unwrap_or(10), seed.or(file.fold_seed).unwrap_or(0))
}

fn run_cv(args: CvArgs) -> Result<Vec<Output>> {
    let file = read_file_config(&args.data.config)?;
    let (k, seed) = fold_params(args.folds, args.fold_seed, &file);
    let lambda = args.lambda.or(file.lambda);
    let cfg = fit_config(&args.model, &file, lambda.unwrap_or(0.0), seed)?;
    let ds = load_data(&args.data, &file)?;
    let plan = make_folds(&ds, k, seed)?;
    let reports = match lambda {
        Some(l) => cross_validate(&ds, &cfg, &plan, &Variant::ALL, l)?,
        None => cross_validate_grid(&ds, &cfg, &plan, &LAMBDA_GRID)?,
    };
    let secs: f64 = reports.iter().map(|r| r.total_seconds()).sum();
    eprintln!("cv: {} reports, {k} folds, {secs:.2}s of fitting", reports.len());
    let body = match args.format.unwrap_or(Format::Text) {
        Format::Json => serde_json::to_string_pretty(&reports)? + "\n",
        Format::Csv => render_cv_csv(&reports)?,
        Format::Text => render_cv_text(&reports),
    };
    Ok(vec![Output {
        path: args.report_out,
        body,
    }])
}

fn parse_lambda_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| FairMarsError::Config(format!("invalid λ value '{t}'")))
        })
        .collect()
}

fn run_sweep(args: SweepArgs) -> Result<Vec<Output>> {
    let file = read_file_config(&args.data.config)?;
    let (k, seed) = fold_params(args.folds, args.fold_seed, &file);
    let lambdas = match (&args.lambda, &file.lambdas) {
        (Some(s), _) => parse_lambda_list(s)?,
        (None, Some(v)) => v.clone(),
        (None, None) => vec![0.0, 0.2, 0.4, 0.6, 0.8],
    };
    for &l in &lambdas {
        crate::fairness::check_lambda(l)?;
    }
    let cfg = fit_config(&args.model, &file, 0.0, seed)?;
    let ds = load_data(&args.data, &file)?;
    let plan = make_folds(&ds, k, seed)?;
    let table = lambda_sweep(&ds, &cfg, &lambdas, &plan, args.fold.or(file.fold).unwrap_or(0))?;
    let body = match args.format.unwrap_or(Format::Text) {
        Format::Json => serde_json::to_string_pretty(&table)? + "\n",
        Format::Csv => render_sweep_csv(&table)?,
        Format::Text => render_sweep_text(&table),
    };
    Ok(vec![Output {
        path: args.report_out,
        body,
    }])
}

#[derive(Serialize)]
struct RuleLine {
    coefficient: Option<f64>,
    basis: String,
    pruned: bool,
}

fn run_export(args: ExportArgs) -> Result<Vec<Output>> {
    require_file(&args.model_in)?;
    let model = FairMarsModel::load(&args.model_in)?;
    let body = match args.format.unwrap_or(Format::Text) {
        Format::Text => model.export_rules(args.include_pruned),
        Format::Json | Format::Csv => {
            let names = model.column_names();
            let mut lines: Vec<(usize, RuleLine)> = model
                .bases()
                .iter()
                .zip(model.coefficients())
                .map(|(b, &c)| {
                    let c = if b.is_intercept() { c + model.response_mean() } else { c };
                    (
                        b.id,
                        RuleLine {
                            coefficient: Some(c),
                            basis: b.render(names),
                            pruned: false,
                        },
                    )
                })
                .collect();
            if args.include_pruned {
                lines.extend(model.pruned_bases().iter().map(|b| {
                    (
                        b.id,
                        RuleLine {
                            coefficient: None,
                            basis: b.render(names),
                            pruned: true,
                        },
                    )
                }));
                lines.sort_by_key(|l| l.0);
            }
            let lines: Vec<RuleLine> = lines.into_iter().map(|l| l.1).collect();
            if args.format == Some(Format::Json) {
                serde_json::to_string_pretty(&lines)? + "\n"
            } else {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["coefficient", "basis", "pruned"])?;
                for l in &lines {
                    w.write_record([
                        l.coefficient.map_or_else(String::new, |c| c.to_string()),
                        l.basis.clone(),
                        l.pruned.to_string(),
                    ])?;
                }
                let bytes = w.into_inner().map_err(|e| FairMarsError::Data(e.to_string()))?;
                String::from_utf8(bytes).map_err(|e| FairMarsError::Data(e.to_string()))?
            }
        }
    };
    Ok(vec![Output {
        path: args.report_out,
        body,
    }])
}

fn dispatch(command: Command) -> Result<Vec<Output>> {
    match command {
        Command::Fit(a) => run_fit(a),
        Command::Predict(a) => run_predict(a),
        Command::Cv(a) => run_cv(a),
        Command::Sweep(a) => run_sweep(a),
        Command::ExportRules(a) => run_export(a),
    }
}

fn exit_code(e: &FairMarsError) -> i32 {
    if e.is_config() {
        2
    } else {
        1
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.jobs {
        Some(0) => Err(FairMarsError::Config("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| FairMarsError::Config(format!("cannot start {n} workers: {e}")))
            .and_then(|pool| pool.install(|| dispatch(cli.command))),
        None => dispatch(cli.command),
    };
    let outputs = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    for out in outputs {
        let written = match &out.path {
            Some(p) => write_atomic(p, out.body.as_bytes()),
            None => std::io::stdout()
                .write_all(out.body.as_bytes())
                .map_err(|e| FairMarsError::io("<stdout>", e)),
        };
        if let Err(e) = written {
            eprintln!("error: {e}");
            return 1;
        }
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_list() {
        assert_eq!(parse_lambda_list("0, 0.2,0.4").unwrap(), vec![0.0, 0.2, 0.4]);
        assert!(parse_lambda_list("0,x").unwrap_err().is_config());
    }

    #[test]
    fn unknown_flag_and_missing_file_exit_2() {
        assert_eq!(run(["fairmars", "fit", "--bogus"]), 2);
        assert_eq!(
            run([
                "fairmars",
                "fit",
                "--data",
                "/definitely/missing.csv",
                "--response-col",
                "y",
                "--sensitive-col",
                "s",
                "--model-out",
                "/tmp/never.json"
            ]),
            2
        );
    }

    #[test]
    fn negative_lambda_exit_2() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("d.csv");
        std::fs::write(&data, "y,s,x\n1,a,1\n2,b,2\n3,a,3\n4,b,4\n").unwrap();
        let model = dir.path().join("m.json");
        let code = run([
            "fairmars".as_ref(),
            "fit".as_ref(),
            "--data".as_ref(),
            data.as_os_str(),
            "--response-col".as_ref(),
            "y".as_ref(),
            "--sensitive-col".as_ref(),
            "s".as_ref(),
            "--lambda".as_ref(),
            "-0.5".as_ref(),
            "--model-out".as_ref(),
            model.as_os_str(),
        ] as [&std::ffi::OsStr; 12]);
        assert_eq!(code, 2);
        assert!(!model.exists());
    }

    #[test]
    fn delimiter_must_be_ascii() {
        assert_eq!(delimiter_byte(';').unwrap(), b';');
        assert!(delimiter_byte('é').unwrap_err().is_config());
    }
}
