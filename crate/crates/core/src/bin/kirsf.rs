use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kirsf::data::{bundled_bmt, load_bmt, load_csv, load_features, BmtEndpoint, ColumnSchema};
use kirsf::experiment::{run_bmt, run_ringnorm, CurveBundle, ExperimentReport, ExperimentSettings};
use kirsf::sim::{make_ringnorm_survival, SimConfig, SimMetadata};
use kirsf::{Error, ForestConfig, KernelChoice, SplitRule, SurvivalModel, TreeConfig};

#[derive(Parser)]
#[command(name = "kirsf", version, about = "Kernel-induced random survival forests")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate ringnorm survival data as CSV plus a JSON metadata sidecar.
    Simulate(SimulateArgs),
    /// Fit a forest on a CSV file and save the model.
    Fit(FitArgs),
    /// Predict ensemble mortality for the rows of a CSV file.
    Predict(PredictArgs),
    /// Write survival curves for the training records of a model.
    Curves(CurvesArgs),
    /// Paired RSF/KIRSF experiment on simulated ringnorm data.
    ExperimentRingnorm(RingnormArgs),
    /// Paired RSF/KIRSF experiment on the BMT data.
    ExperimentBmt(BmtArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelKind {
    None,
    Linear,
    Polynomial,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Logrank,
    Deviance,
}

#[derive(Args)]
struct ForestArgs {
    /// Number of trees.
    #[arg(long, default_value_t = 1000)]
    ntree: usize,
    /// Candidate features per node (default ceil(sqrt(p))).
    #[arg(long)]
    mtry: Option<usize>,
    /// Minimum number of events for a node to be split.
    #[arg(long, default_value_t = 3)]
    min_node_events: usize,
    /// Minimum number of records for a node to be split.
    #[arg(long, default_value_t = 3)]
    min_node_size: usize,
    /// Maximum tree depth.
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, value_enum, default_value = "logrank")]
    split_rule: RuleArg,
    /// Random seed (the master seed for experiments).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ForestArgs {
    fn config(&self) -> ForestConfig {
        ForestConfig {
            n_trees: self.ntree,
            tree: TreeConfig {
                mtry: self.mtry,
                min_node_events: self.min_node_events,
                min_node_size: self.min_node_size,
                split_rule: match self.split_rule {
                    RuleArg::Logrank => SplitRule::Logrank,
                    RuleArg::Deviance => SplitRule::Deviance,
                },
                max_depth: self.max_depth,
            },
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct KernelArgs {
    /// Kernel applied to standardized covariates before growing the forest.
    #[arg(long, value_enum)]
    kernel: Option<KernelKind>,
    /// Polynomial degree.
    #[arg(long, default_value_t = 2)]
    degree: u32,
    /// Polynomial offset c in (<x,z> + c)^d.
    #[arg(long, default_value_t = 1.0)]
    offset_c: f64,
    /// Gaussian bandwidth sigma^2 (default: number of standardized features).
    #[arg(long)]
    sigma2: Option<f64>,
}

impl KernelArgs {
    fn choice(&self, default: KernelKind) -> Option<KernelChoice> {
        match self.kernel.unwrap_or(default) {
            KernelKind::None => None,
            KernelKind::Linear => Some(KernelChoice::Linear),
            KernelKind::Polynomial => Some(KernelChoice::Polynomial {
                c: self.offset_c,
                degree: self.degree,
            }),
            KernelKind::Gaussian => Some(KernelChoice::Gaussian { sigma2: self.sigma2 }),
        }
    }
}

#[derive(Args)]
struct SchemaArgs {
    /// Input CSV file.
    #[arg(long)]
    input: PathBuf,
    /// Name of the survival time column.
    #[arg(long)]
    time: String,
    /// Name of the event indicator column (1 event, 0 censored).
    #[arg(long)]
    event: String,
    /// Comma-separated covariate columns (default: all other numeric columns).
    #[arg(long, value_delimiter = ',')]
    features: Vec<String>,
}

impl SchemaArgs {
    fn schema(&self) -> ColumnSchema {
        ColumnSchema::new(&self.time, &self.event).with_features(self.features.iter().cloned())
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    d: usize,
    #[arg(long, default_value_t = 0.1)]
    lambda1: f64,
    #[arg(long, default_value_t = 0.5)]
    lambda2: f64,
    #[arg(long, default_value_t = 5.0)]
    censor_low: f64,
    #[arg(long, default_value_t = 10.0)]
    censor_high: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV with columns time, event, X1..Xd.
    #[arg(long)]
    out: PathBuf,
    /// Metadata sidecar path (default: <out>.meta.json).
    #[arg(long)]
    sim_meta: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    schema: SchemaArgs,
    #[command(flatten)]
    forest: ForestArgs,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Where to write the fitted model.
    #[arg(long)]
    model: PathBuf,
    /// Optional CSV of training-row mortalities and the OOB error.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV containing the model's covariate columns.
    #[arg(long)]
    input: PathBuf,
    /// Output CSV with columns row_id, mortality.
    #[arg(long)]
    out: PathBuf,
    /// Also write the cumulative hazard and survival step functions here.
    #[arg(long)]
    curves: Option<PathBuf>,
}

#[derive(Args)]
struct CurvesArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    schema: SchemaArgs,
    /// Simulation metadata sidecar written by `simulate`.
    #[arg(long)]
    sim_meta: Option<PathBuf>,
    /// Add the true class survival curves (needs --sim-meta).
    #[arg(long)]
    true_curves: bool,
    /// Output long CSV with columns series, subject_id, t, value.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    forest: ForestArgs,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    realizations: Option<usize>,
    /// Share of records used for training in each realization.
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Write survival curves for the last realization.
    #[arg(long)]
    curves: bool,
}

impl ExperimentArgs {
    fn settings(&self, mut base: ExperimentSettings, default_kernel: KernelKind) -> Result<ExperimentSettings, CliError> {
        base.forest = self.forest.config();
        base.master_seed = self.forest.seed;
        base.curves = self.curves;
        if let Some(r) = self.realizations {
            base.realizations = r;
        }
        if let Some(f) = self.train_fraction {
            base.train_fraction = f;
        }
        base.kernel = self
            .kernel
            .choice(default_kernel)
            .ok_or_else(|| CliError::Usage("experiments need a kernel; --kernel none is not allowed".into()))?;
        Ok(base)
    }
}

#[derive(Args)]
struct RingnormArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    d: usize,
}

#[derive(Args)]
struct BmtArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    /// BMT CSV in the published table layout (default: bundled copy).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Endpoint: primary, agvhd, cgvhd or platelet.
    #[arg(long, default_value = "primary")]
    endpoint: BmtEndpoint,
}

enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Curves(a) => curves(a),
        Command::ExperimentRingnorm(a) => experiment_ringnorm(a),
        Command::ExperimentBmt(a) => experiment_bmt(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Writes to a sibling temporary file and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| Error::Io { path: tmp.clone(), source: e })?;
    fs::rename(&tmp, path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn metadata_lines(pairs: &[(&str, String)]) -> String {
    let mut out = format!("# tool: {}\n", kirsf::TOOL_VERSION);
    for (k, v) in pairs {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    out
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

fn simulate(a: SimulateArgs) -> CliResult {
    let config = SimConfig {
        n: a.n,
        d: a.d,
        lambda1: a.lambda1,
        lambda2: a.lambda2,
        censor_low: a.censor_low,
        censor_high: a.censor_high,
        seed: a.seed,
    };
    let sim = make_ringnorm_survival(&config)?;
    let mut csv = Vec::new();
    sim.dataset.write_csv(&mut csv, "time", "event")?;
    write_atomic(&a.out, &csv)?;
    let meta_path = a.sim_meta.unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".meta.json");
        PathBuf::from(p)
    });
    let meta = serde_json::to_vec_pretty(&sim.metadata()).expect("metadata serializes");
    write_atomic(&meta_path, &meta)?;
    println!(
        "wrote {} records ({} events) to {} and metadata to {}",
        sim.dataset.len(),
        sim.dataset.event_count(),
        a.out.display(),
        meta_path.display()
    );
    Ok(())
}

fn fit(a: FitArgs) -> CliResult {
    let data = load_csv(&a.schema.input, &a.schema.schema())?;
    let config = a.forest.config();
    let kernel = a.kernel.choice(KernelKind::None);
    let model = SurvivalModel::fit(&data, &config, kernel)?;
    model.save(&a.model)?;
    let oob = model.oob_concordance()?;
    println!(
        "fitted {} trees on {} records ({} events, {} features{}) -> {}",
        config.n_trees,
        data.len(),
        data.event_count(),
        data.p(),
        match model.kernel() {
            Some(k) => format!(", {} kernel features", k.basis().len()),
            None => String::new(),
        },
        a.model.display()
    );
    println!("oob_prediction_error\t{}", oob.prediction_error);
    if let Some(path) = a.report {
        let mortality = model.predict_mortality(&data.covariates())?;
        let mut body = metadata_lines(&[
            ("forest", to_json(&config)),
            ("kernel", to_json(&kernel)),
            ("oob_prediction_error", oob.prediction_error.to_string()),
        ]);
        body.push_str("row_id,mortality\n");
        for (i, m) in mortality.iter().enumerate() {
            body.push_str(&format!("{i},{m}\n"));
        }
        write_atomic(&path, body.as_bytes())?;
    }
    Ok(())
}

fn predict(a: PredictArgs) -> CliResult {
    let model = SurvivalModel::load(&a.model)?;
    let rows = load_features(&a.input, model.feature_names())?;
    let mortality = model.predict_mortality(&rows)?;
    let mut body = metadata_lines(&[("model", a.model.display().to_string())]);
    body.push_str("row_id,mortality\n");
    for (i, m) in mortality.iter().enumerate() {
        body.push_str(&format!("{i},{m}\n"));
    }
    write_atomic(&a.out, body.as_bytes())?;
    if let Some(path) = a.curves {
        let mut body = metadata_lines(&[("model", a.model.display().to_string())]);
        body.push_str("row_id,t,H,S\n");
        for (i, chf) in model.predict_chf(&rows)?.iter().enumerate() {
            for (t, h) in chf.knots().iter().zip(chf.values()) {
                body.push_str(&format!("{i},{t},{h},{}\n", (-h).exp()));
            }
        }
        write_atomic(&path, body.as_bytes())?;
    }
    println!("predicted {} rows -> {}", mortality.len(), a.out.display());
    Ok(())
}

fn curves(a: CurvesArgs) -> CliResult {
    if a.true_curves && a.sim_meta.is_none() {
        return Err(CliError::Usage("--true-curves requires --sim-meta".into()));
    }
    let model = SurvivalModel::load(&a.model)?;
    let mut schema = a.schema.schema();
    if schema.feature_columns.is_empty() {
        schema = schema.with_features(model.feature_names().iter().cloned());
    }
    let data = load_csv(&a.schema.input, &schema)?;
    let truth = match (&a.sim_meta, a.true_curves) {
        (Some(path), true) => {
            let text = fs::read(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            let meta: SimMetadata = serde_json::from_slice(&text)
                .map_err(|e| Error::InvalidArgument(format!("bad simulation metadata: {e}")))?;
            Some(meta.config)
        }
        _ => None,
    };
    let bundle = CurveBundle::build(&model, &data, truth.as_ref())?;
    let mut out = Vec::new();
    bundle.write_csv(&mut out, &metadata_lines(&[("model", a.model.display().to_string())]))?;
    write_atomic(&a.out, &out)?;
    println!("wrote {} curves -> {}", bundle.series.len(), a.out.display());
    Ok(())
}

fn write_report(report: &ExperimentReport, out_dir: &Path) -> CliResult {
    fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let name = &report.experiment;
    let mut buf = Vec::new();
    report.write_realizations_csv(&mut buf)?;
    write_atomic(&out_dir.join(format!("{name}_realizations.csv")), &buf)?;
    let mut summary = Vec::new();
    report.write_summary_tsv(&mut summary)?;
    write_atomic(&out_dir.join(format!("{name}_summary.tsv")), &summary)?;
    let mut ttest = Vec::new();
    report.write_ttest_tsv(&mut ttest)?;
    write_atomic(&out_dir.join(format!("{name}_ttest.tsv")), &ttest)?;
    if let Some(c) = &report.curves {
        let header = report.metadata_header();
        for (arm, bundle) in [("rsf", &c.rsf), ("kirsf", &c.kirsf)] {
            let mut buf = Vec::new();
            bundle.write_csv(&mut buf, &header)?;
            write_atomic(&out_dir.join(format!("{name}_curves_{arm}.csv")), &buf)?;
        }
    }

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let _ = writeln!(out, "method\tmean_error_pct\tsd_pct\trealizations");
    for s in [&report.rsf, &report.kirsf] {
        let _ = writeln!(
            out,
            "{}\t{:.2}\t{:.2}\t{}",
            s.method,
            100.0 * s.mean_error,
            100.0 * s.sample_sd,
            s.per_realization_errors.len()
        );
    }
    let _ = writeln!(
        out,
        "t = {:.4}, df = {}, p = {:.3e}",
        report.t_test.t, report.t_test.df, report.t_test.p_value
    );
    Ok(())
}

fn experiment_ringnorm(a: RingnormArgs) -> CliResult {
    let settings = a.common.settings(ExperimentSettings::ringnorm(), KernelKind::Gaussian)?;
    let sim = SimConfig {
        n: a.n,
        d: a.d,
        ..SimConfig::default()
    };
    let report = run_ringnorm(&settings, &sim)?;
    write_report(&report, &a.common.out_dir)
}

fn experiment_bmt(a: BmtArgs) -> CliResult {
    let settings = a.common.settings(ExperimentSettings::bmt(), KernelKind::Linear)?;
    let data = match &a.input {
        Some(path) => load_bmt(path, a.endpoint)?,
        None => bundled_bmt(a.endpoint)?,
    };
    let report = run_bmt(&settings, &data)?;
    write_report(&report, &a.common.out_dir)
}
