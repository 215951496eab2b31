use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mvcl_core::data::{preprocess, synth_generate};
use mvcl_core::eval::{accuracy, fuse, knn_classify, row_labels, FUSED_ROW, MEAN_ROW};
use mvcl_core::grad::{check_all_blocks, random_instance, DEFAULT_STEP, GRADCHECK_TOL};
use mvcl_core::optim::train_with_clock;
use mvcl_core::{HyperParams, MultiViewDataset, SynthSpec, TrainConfig, TrainReport};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::model::ModelFile;
use crate::report;
use crate::run::{self, SystemClock};
use crate::io;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "mvcl", version, about = "Multi-view contrastive linear feature extraction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic multi-view dataset.
    Synth(SynthArgs),
    /// Learn projections from a set of views.
    Train(TrainArgs),
    /// 1-NN accuracy of a trained model.
    Eval(EvalArgs),
    /// Compare analytic gradients with central differences.
    Gradcheck(GradcheckArgs),
    /// Repeated random-split benchmark.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 5)]
    pub classes: usize,
    #[arg(long, default_value_t = 12)]
    pub per_class: usize,
    #[arg(long, value_delimiter = ',', default_value = "16,16")]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    pub shared: usize,
    #[arg(long, default_value_t = 3)]
    pub specific: usize,
    #[arg(long, default_value_t = 4)]
    pub redundant: usize,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Flags shared by `train` and `benchmark`; each overrides the config file.
#[derive(Debug, Args, Default)]
pub struct RunFlags {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Sets all three temperatures.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Skip mean centering.
    #[arg(long)]
    pub no_center: bool,
    #[arg(long)]
    pub unit_variance: bool,
    /// Input CSVs start with a header line.
    #[arg(long)]
    pub header: bool,
}

impl RunFlags {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(d) = self.d {
            cfg.d = Some(d);
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(b) = self.beta {
            cfg.beta = b;
        }
        if let Some(s) = self.sigma {
            (cfg.sigma1, cfg.sigma2, cfg.sigma3) = (s, s, s);
        }
        if let Some(n) = self.max_iters {
            cfg.max_iters = n;
        }
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.no_center {
            cfg.preprocess.center = false;
        }
        if self.unit_variance {
            cfg.preprocess.unit_variance = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Comma-separated view CSVs (rows = samples).
    #[arg(long, value_delimiter = ',')]
    pub views: Vec<PathBuf>,
    /// Model output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Training report path; defaults to `<out stem>.report.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    PerView,
    Fused,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Query views.
    #[arg(long, value_delimiter = ',', required = true)]
    pub views: Vec<PathBuf>,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "per-view")]
    pub strategy: Vec<Strategy>,
    /// Gallery views for the 1-NN classifier.
    #[arg(long, value_delimiter = ',', required = true)]
    pub train_views: Vec<PathBuf>,
    #[arg(long)]
    pub train_labels: PathBuf,
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Finite-difference step.
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub h: f64,
    #[arg(long, value_delimiter = ',', default_value = "6,5")]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Ablation {
    Cmc,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Directory with view1.csv, view2.csv, … and labels.csv.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Training samples per class.
    #[arg(long = "M", alias = "m")]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub d_sweep: Vec<usize>,
    /// Report CSV; the JSON report is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also run the sample-level-only baseline on the same splits.
    #[arg(long, value_enum)]
    pub ablate: Option<Ablation>,
    #[command(flatten)]
    pub run: RunFlags,
}

/// Training report file: the run summary plus the effective configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainReportFile {
    pub schema_version: u32,
    pub report: TrainReport,
    pub config: TrainConfig,
}

fn required<T: Clone>(flag: Option<T>, from_config: Option<T>, what: &str) -> Result<T> {
    flag.or(from_config).ok_or_else(|| Error::Usage(format!("{} is required", what)))
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        classes: args.classes,
        per_class: args.per_class,
        dims: args.dims.clone(),
        shared_dims: args.shared,
        specific_dims: args.specific,
        redundant_copies: args.redundant,
        noise_std: args.noise,
        seed: args.seed,
    };
    let ds = synth_generate(&spec)?;
    io::export_dataset(&args.out, &ds, Some(&spec))?;
    println!("wrote {} views, {} samples to {}", ds.num_views(), ds.n(), args.out.display());
    Ok(())
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let cfg = args.run.resolve()?;
    let views = if args.views.is_empty() { cfg.paths.views.clone() } else { args.views.clone() };
    if views.is_empty() {
        return Err(Error::Usage("--views is required".into()));
    }
    let out = required(args.out.clone(), cfg.paths.out.clone(), "--out")?;
    let tc = cfg.train_config()?;
    let raw = io::load_views(&views, None, args.run.header)?;
    let (ds, stats) = preprocess(&raw, cfg.preprocess, None)?;
    let (p, f, mut rep) = train_with_clock(&ds, &tc, &SystemClock::new())?;
    rep.preprocessing = Some(cfg.preprocess);

    ModelFile::new(&p, &f, stats, tc).save(&out)?;
    let report_path = args.report.clone().unwrap_or_else(|| report::sibling(&out, "report.json"));
    io::write_json(&report_path, &TrainReportFile { schema_version: REPORT_SCHEMA_VERSION, report: rep.clone(), config: tc })?;
    println!(
        "{}: final loss {:.6} after {} iterations, converged = {}",
        rep.label,
        rep.losses.last().copied().unwrap_or(f64::NAN),
        rep.iterations,
        rep.converged
    );
    Ok(())
}

fn load_for_model(model: &ModelFile, views: &[PathBuf], labels: &Path, header: bool) -> Result<MultiViewDataset> {
    let ds = io::load_views(views, Some(labels), header)?;
    if ds.dims() != model.dims {
        return Err(mvcl_core::Error::Dim(format!("views have dims {:?}, model expects {:?}", ds.dims(), model.dims)).into());
    }
    Ok(model.preprocessing.apply(&ds)?)
}

/// Accuracy lines for the requested strategies, in print order.
pub fn eval_lines(args: &EvalArgs) -> Result<Vec<(String, f64)>> {
    let model = ModelFile::load(&args.model)?;
    let (p, _) = model.params()?;
    let query = load_for_model(&model, &args.views, &args.labels, args.header)?;
    let gallery = load_for_model(&model, &args.train_views, &args.train_labels, args.header)?;
    let (q_labels, g_labels) = (query.labels().unwrap_or_default(), gallery.labels().unwrap_or_default());
    let mut lines = Vec::new();
    for strategy in &args.strategy {
        match strategy {
            Strategy::PerView => {
                let (tr, te) = (p.embed(&gallery)?, p.embed(&query)?);
                let labels = row_labels(model.views);
                let mut sum = 0.0;
                for (m, (a, b)) in tr.mats().iter().zip(te.mats()).enumerate() {
                    let acc = accuracy(&knn_classify(a, g_labels, b, 1)?, q_labels);
                    sum += acc;
                    lines.push((labels[m].clone(), acc));
                }
                lines.push((MEAN_ROW.to_string(), sum / model.views as f64));
            }
            Strategy::Fused => {
                let pred = knn_classify(&fuse(&p, &gallery)?, g_labels, &fuse(&p, &query)?, 1)?;
                lines.push((FUSED_ROW.to_string(), accuracy(&pred, q_labels)));
            }
        }
    }
    Ok(lines)
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    for (label, acc) in eval_lines(args)? {
        println!("{:<6} {:.4}", label, acc);
    }
    Ok(())
}

pub fn gradcheck(args: &GradcheckArgs) -> Result<()> {
    let hp = HyperParams::new(args.d).with_weights(args.alpha, args.beta).with_temperature(args.sigma);
    hp.validate(&args.dims)?;
    let (ds, p, f) = random_instance(&args.dims, args.n, args.d, args.seed)?;
    let rep = check_all_blocks(&p, &f, &ds, &hp, args.h)?;
    for (m, e) in rep.p_errors.iter().enumerate() {
        println!("P{} max_rel_err {:.3e}", m + 1, e);
    }
    for (m, e) in rep.f_errors.iter().enumerate() {
        println!("F{} max_rel_err {:.3e}", m + 1, e);
    }
    let failing = rep.failing(GRADCHECK_TOL);
    if failing.is_empty() {
        Ok(())
    } else {
        Err(Error::GradCheck { blocks: failing })
    }
}

pub fn benchmark(args: &BenchmarkArgs) -> Result<()> {
    let mut cfg = args.run.resolve()?;
    if let Some(m) = args.per_class {
        cfg.per_class = Some(m);
    }
    if let Some(r) = args.repeats {
        cfg.repeats = r;
    }
    if !args.d_sweep.is_empty() {
        cfg.d_sweep = args.d_sweep.clone();
    }
    cfg.validate()?;
    let data = required(args.data.clone(), cfg.paths.data.clone(), "--data")?;
    let out = required(args.out.clone(), cfg.paths.out.clone(), "--out")?;
    let ds = io::load_dir(&data, args.run.header)?;
    let plan = cfg.split_plan()?;
    let bcfg = cfg.benchmark_config();
    let threads = run::threads_from_env()?;

    // Everything is computed before anything is written.
    let (main, baseline) = match args.ablate {
        Some(Ablation::Cmc) => {
            let (a, b) = run::ablation(&ds, &bcfg, &plan, threads)?;
            (a, Some(b))
        }
        None => (run::benchmark(&ds, &bcfg, &plan, threads)?, None),
    };
    report::write_reports(&out, &main, baseline.as_ref())?;
    print!("{}", report::format_table(&main));
    if let Some(b) = &baseline {
        print!("{}", report::format_table(b));
        for row in report::paired(&main, b) {
            println!("{:<8} diff {:+.2}", row.label, row.diff);
        }
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Gradcheck(a) => gradcheck(a),
        Command::Benchmark(a) => benchmark(a),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e);
            e.exit_code()
        }
    }
}
