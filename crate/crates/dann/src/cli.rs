//! Command-line front end.
//!
//! Every subcommand accepts `--config FILE`, a line-oriented `key = value`
//! file whose keys are flag names without the leading dashes. Its entries
//! are applied before the command line, so explicit flags win.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use dann_core::dae::{dae_train, DaeParams, DaeTrainConfig, NoiseSpec};
use dann_core::data::{
    gen_synthetic_shift, zscore_apply, zscore_fit, Dataset, NormStats, ShiftSpec, DEFAULT_TRANSLATION,
};
use dann_core::kernel::{median_heuristic_bandwidth, mmd_sq_biased, KernelConfig};
use dann_core::network::DannParams;
use dann_core::trainer::{
    self, semi_supervised_select, Clock, NoClock, Pretraining, Setting, TrainConfig, TrainInputs,
    PRETRAIN_STREAM,
};
use dann_core::RandomStream;

use crate::csvio::{fmt_f64, load_csv, save_csv};
use crate::error::{as_usage, CliError, Result, EXIT_OK};
use crate::formats::{self, load_dae, load_model, load_norm, write_text};
use crate::pgm;
use crate::report::{self, StdClock};

#[derive(Debug, Parser)]
#[command(
    name = "dann",
    version,
    about = "Domain adaptive neural network: training, pretraining and diagnostics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Train a network on labeled source and unlabeled target data.
    Train(TrainArgs),
    /// Pretrain a denoising auto-encoder on unlabeled rows.
    Pretrain(PretrainArgs),
    /// Gaussian-kernel MMD² between two datasets.
    Mmd(MmdArgs),
    /// Write a synthetic source/target pair with a rotated and shifted target.
    GenSynth(GenSynthArgs),
    /// Accuracy of a saved model on a labeled dataset.
    Eval(EvalArgs),
    /// Tile first-layer weights into a plain graymap.
    ExportFilters(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Dann,
    Nn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SettingArg {
    Unsupervised,
    SemiSupervised,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormMode {
    /// Fit on source and target features together.
    Transductive,
    /// Fit on source features only.
    Source,
    None,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    /// Labeled source CSV.
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Target CSV.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// The target CSV has a label column (used for evaluation only).
    #[arg(long)]
    pub target_has_labels: bool,
    /// Labeled target pool for the semi-supervised setting.
    #[arg(long)]
    pub target_labeled: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SettingArg::Unsupervised)]
    pub setting: SettingArg,
    /// Labeled target rows per class in the semi-supervised setting.
    #[arg(long, default_value_t = 3)]
    pub per_class: usize,
    /// Labeled evaluation CSV.
    #[arg(long)]
    pub eval: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Dann)]
    pub method: Method,
    #[arg(long, value_enum, default_value_t = NormMode::Transductive)]
    pub norm: NormMode,
    #[arg(long, default_value_t = 0.02)]
    pub lr: f64,
    /// Training epochs.
    #[arg(long, default_value_t = 900)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0.05)]
    pub momentum: f64,
    #[arg(long, default_value_t = 0.003)]
    pub l2: f64,
    /// Dropout fraction of hidden units.
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
    /// Weight of the MMD² penalty.
    #[arg(long, default_value_t = 1000.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 256)]
    pub hidden: usize,
    #[arg(long, default_value_t = 20)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Explicit kernel bandwidth [default: median heuristic on source].
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Pretrain the first layer with a denoising auto-encoder.
    #[arg(long, conflicts_with = "init_dae")]
    pub pretrain: bool,
    #[arg(long, default_value_t = 0.001)]
    pub dae_lr: f64,
    #[arg(long, default_value_t = 200)]
    pub dae_epochs: usize,
    #[arg(long, default_value_t = 20)]
    pub dae_batch_size: usize,
    /// Zero-masking destruction fraction for pretraining.
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
    /// Initialize the first layer from a saved encoder.
    #[arg(long)]
    pub init_dae: Option<PathBuf>,
    /// Write the parameters in effect before the first epoch.
    #[arg(long)]
    pub dump_init: Option<PathBuf>,
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    /// Normalization sidecar [default: <model-out>.norm].
    #[arg(long)]
    pub norm_out: Option<PathBuf>,
    /// Per-iteration CSV report.
    #[arg(long)]
    pub report_out: Option<PathBuf>,
    /// Summary CSV, one row per seed.
    #[arg(long)]
    pub summary_out: Option<PathBuf>,
    /// Record wall time in the report; otherwise elapsed_ms is 0 and all
    /// outputs are byte-reproducible.
    #[arg(long)]
    pub timing: bool,
    /// Run seeds a..b (end exclusive) concurrently, e.g. `seeds=0..10`.
    /// Per-seed files get a `.seed<N>` suffix before the extension.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Print the resolved settings and exit.
    #[arg(long)]
    pub print_config: bool,
    /// key = value file applied before the command line.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct PretrainArgs {
    /// Unlabeled CSV; repeatable.
    #[arg(long)]
    pub input: Vec<PathBuf>,
    /// Labeled CSV whose label column is dropped; repeatable.
    #[arg(long)]
    pub labeled_input: Vec<PathBuf>,
    #[arg(long, default_value_t = 256)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 20)]
    pub batch_size: usize,
    /// Zero-masking destruction fraction.
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip z-scoring over the concatenated inputs.
    #[arg(long)]
    pub no_norm: bool,
    /// Encoder file.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch loss CSV.
    #[arg(long)]
    pub loss_out: Option<PathBuf>,
    #[arg(long)]
    pub norm_out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct MmdArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub source_has_labels: bool,
    #[arg(long)]
    pub target_has_labels: bool,
    /// Explicit bandwidth [default: median heuristic on source].
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct GenSynthArgs {
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    #[arg(long, default_value_t = 50)]
    pub per_class: usize,
    /// Distance of class centers from the origin.
    #[arg(long, default_value_t = 1.5)]
    pub spacing: f64,
    /// Target rotation in degrees.
    #[arg(long, default_value_t = 30.0)]
    pub theta: f64,
    /// Target translation `x,y` [default: 1.5 along 105°].
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub shift: Option<[f64; 2]>,
    #[arg(long, default_value_t = 1.0)]
    pub noise_std: f64,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Labeled CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Normalization file [default: <model>.norm].
    #[arg(long, conflicts_with = "no_norm")]
    pub norm_stats: Option<PathBuf>,
    #[arg(long)]
    pub no_norm: bool,
    /// One predicted label per line.
    #[arg(long)]
    pub predictions_out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
#[command(group = clap::ArgGroup::new("weights").required(true).args(["model", "dae"]))]
pub struct ExportArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Encoder file instead of a model.
    #[arg(long)]
    pub dae: Option<PathBuf>,
    /// Output graymap.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse_pair(s: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => {
            let x = x.parse::<f64>().map_err(|e| e.to_string())?;
            let y = y.parse::<f64>().map_err(|e| e.to_string())?;
            Ok([x, y])
        }
        _ => Err(format!("expected x,y, got {s:?}")),
    }
}

/// Parses `seeds=a..b`.
pub fn parse_sweep(s: &str) -> Result<Vec<u64>> {
    let bad = || CliError::usage(format!("--sweep expects seeds=a..b, got {s:?}"));
    let range = s.strip_prefix("seeds=").ok_or_else(bad)?;
    let (a, b) = range.split_once("..").ok_or_else(bad)?;
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if a >= b {
        return Err(CliError::usage(format!("--sweep range {a}..{b} is empty")));
    }
    Ok((a..b).collect())
}

/// Moves `--config FILE` entries in front of the other arguments of the
/// subcommand.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    if args.len() < 3 {
        return Ok(args);
    }
    let mut rest = Vec::new();
    let mut config = None;
    let mut it = args[2..].iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            let v = it
                .next()
                .ok_or_else(|| CliError::usage("--config needs a file"))?;
            config = Some(PathBuf::from(v));
        } else if let Some(v) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(v));
        } else {
            rest.push(a.clone());
        }
    }
    let Some(path) = config else {
        return Ok(args);
    };
    let sub_name = args[1].to_string_lossy().into_owned();
    let cmd = Cli::command();
    let Some(sub) = cmd.find_subcommand(&sub_name) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let mut spliced = vec![args[0].clone(), args[1].clone()];
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = i as u64 + 1;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("{}:{lineno}: expected key = value", path.display())))?;
        let (key, value) = (key.trim(), value.trim());
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key) && key != "config")
            .ok_or_else(|| CliError::usage(format!("{}:{lineno}: unknown key {key:?}", path.display())))?;
        if arg.get_action().takes_values() {
            spliced.push(format!("--{key}={value}").into());
        } else {
            match value {
                "true" => spliced.push(format!("--{key}").into()),
                "false" => {}
                _ => {
                    return Err(CliError::usage(format!(
                        "{}:{lineno}: {key} expects true or false",
                        path.display()
                    )))
                }
            }
        }
    }
    spliced.extend(rest);
    Ok(spliced)
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(&a, out),
        Command::Pretrain(a) => cmd_pretrain(&a, out),
        Command::Mmd(a) => cmd_mmd(&a, out),
        Command::GenSynth(a) => cmd_gen_synth(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::ExportFilters(a) => cmd_export_filters(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

/// `dir/model.txt` with seed 3 becomes `dir/model.seed3.txt`.
pub fn with_seed_suffix(path: &Path, seed: u64) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.seed{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}.seed{seed}"),
    };
    path.with_file_name(name)
}

/// `model.txt` → `model.txt.norm`.
pub fn norm_sidecar(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".norm");
    PathBuf::from(s)
}

impl TrainArgs {
    pub fn train_config(&self) -> Result<TrainConfig> {
        let pretraining = if self.pretrain {
            Pretraining::Dae {
                noise: NoiseSpec::zero_masking(self.noise).map_err(as_usage)?,
                config: DaeTrainConfig {
                    hidden: self.hidden,
                    lr: self.dae_lr,
                    epochs: self.dae_epochs,
                    batch_size: self.dae_batch_size,
                },
            }
        } else if let Some(path) = &self.init_dae {
            Pretraining::Encoder(load_dae(path)?)
        } else {
            Pretraining::None
        };
        if let Pretraining::Dae { config, .. } = &pretraining {
            config.validate().map_err(as_usage)?;
        }
        let cfg = TrainConfig {
            lr: self.lr,
            iterations: self.iterations,
            momentum: self.momentum,
            l2: self.l2,
            dropout_fraction: self.dropout,
            gamma: self.gamma,
            hidden: self.hidden,
            batch_size: self.batch_size,
            seed: self.seed,
            pretraining,
            setting: match self.setting {
                SettingArg::Unsupervised => Setting::Unsupervised,
                SettingArg::SemiSupervised => Setting::SemiSupervised,
            },
            bandwidth: self.bandwidth,
        };
        cfg.validate().map_err(as_usage)?;
        Ok(cfg)
    }

    fn print_config(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let method = self.method.to_possible_value().map(|v| v.get_name().to_string());
        let setting = self.setting.to_possible_value().map(|v| v.get_name().to_string());
        let norm = self.norm.to_possible_value().map(|v| v.get_name().to_string());
        writeln!(out, "method={}", method.unwrap_or_default())?;
        writeln!(out, "setting={}", setting.unwrap_or_default())?;
        writeln!(out, "norm={}", norm.unwrap_or_default())?;
        writeln!(out, "lr={}", self.lr)?;
        writeln!(out, "iterations={}", self.iterations)?;
        writeln!(out, "momentum={}", self.momentum)?;
        writeln!(out, "l2={}", self.l2)?;
        writeln!(out, "dropout={}", self.dropout)?;
        writeln!(out, "gamma={}", self.gamma)?;
        writeln!(out, "hidden={}", self.hidden)?;
        writeln!(out, "batch-size={}", self.batch_size)?;
        writeln!(out, "per-class={}", self.per_class)?;
        writeln!(out, "seed={}", self.seed)?;
        match self.bandwidth {
            Some(s) => writeln!(out, "bandwidth={s}")?,
            None => writeln!(out, "bandwidth=median_heuristic")?,
        }
        writeln!(out, "pretrain={}", self.pretrain)?;
        writeln!(out, "dae-lr={}", self.dae_lr)?;
        writeln!(out, "dae-epochs={}", self.dae_epochs)?;
        writeln!(out, "dae-batch-size={}", self.dae_batch_size)?;
        writeln!(out, "noise={}", self.noise)?;
        writeln!(out, "timing={}", self.timing)
    }
}

struct TrainData {
    source: Dataset,
    target: Dataset,
    target_labeled: Option<Dataset>,
    evaluation: Option<Dataset>,
    norm: NormStats,
}

fn load_train_data(a: &TrainArgs) -> Result<TrainData> {
    let source_path = a
        .source
        .as_ref()
        .ok_or_else(|| CliError::usage("train needs --source"))?;
    let target_path = a
        .target
        .as_ref()
        .ok_or_else(|| CliError::usage("train needs --target"))?;
    if a.setting == SettingArg::SemiSupervised && a.target_labeled.is_none() && !a.target_has_labels {
        return Err(CliError::usage(
            "semi-supervised training needs --target-labeled or --target-has-labels",
        ));
    }
    let source = load_csv(source_path, true)?;
    let target = load_csv(target_path, a.target_has_labels)?;
    let norm = match a.norm {
        NormMode::Transductive => zscore_fit(&[&source, &target])?,
        NormMode::Source => zscore_fit(&[&source])?,
        NormMode::None => NormStats::identity(source.dim()),
    };
    let source = zscore_apply(&source, &norm)?;
    let target = zscore_apply(&target, &norm)?;
    let mut evaluation = match &a.eval {
        Some(p) => Some(zscore_apply(&load_csv(p, true)?, &norm)?),
        None => None,
    };
    let target_labeled = match a.setting {
        SettingArg::Unsupervised => None,
        SettingArg::SemiSupervised => {
            let pool = match &a.target_labeled {
                Some(p) => zscore_apply(&load_csv(p, true)?, &norm)?,
                None => target.clone(),
            };
            let split = semi_supervised_select(&pool, a.per_class)?;
            if evaluation.is_none() {
                evaluation = split.remainder;
            }
            Some(split.selected)
        }
    };
    Ok(TrainData {
        source,
        target,
        target_labeled,
        evaluation,
        norm,
    })
}

fn train_one(a: &TrainArgs, data: &TrainData, cfg: &TrainConfig, suffix: Option<u64>) -> Result<String> {
    let inputs = TrainInputs {
        source: &data.source,
        target: &data.target,
        target_labeled: data.target_labeled.as_ref(),
        evaluation: data.evaluation.as_ref(),
    };
    let clock: Box<dyn Clock> = if a.timing {
        Box::new(StdClock::start())
    } else {
        Box::new(NoClock)
    };
    let (params, rep) = match a.method {
        Method::Dann => trainer::train_dann_with_clock(&inputs, cfg, clock.as_ref())?,
        Method::Nn => trainer::train_nn_with_clock(&inputs, cfg, clock.as_ref())?,
    };
    let path_for = |p: &Path| match suffix {
        Some(seed) => with_seed_suffix(p, seed),
        None => p.to_path_buf(),
    };
    if let Some(p) = &a.model_out {
        let p = path_for(p);
        write_text(&p, &formats::model_to_string(&params))?;
        let norm_path = a
            .norm_out
            .as_deref()
            .map(path_for)
            .unwrap_or_else(|| norm_sidecar(&p));
        write_text(&norm_path, &formats::norm_to_string(&data.norm))?;
    }
    if let Some(p) = &a.dump_init {
        write_text(&path_for(p), &formats::model_to_string(&rep.initial_params))?;
    }
    if let Some(p) = &a.report_out {
        write_with(&path_for(p), |w| report::write_iterations(w, &rep))?;
    }
    let method = match a.method {
        Method::Dann => "dann",
        Method::Nn => "nn",
    };
    let setting = match a.setting {
        SettingArg::Unsupervised => "unsupervised",
        SettingArg::SemiSupervised => "semi-supervised",
    };
    Ok(report::summary_row(method, setting, &rep))
}

pub fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let stdout_err = |e| CliError::io(Path::new("<stdout>"), e);
    let base = a.train_config()?;
    if a.print_config {
        return a.print_config(out).map_err(stdout_err);
    }
    let seeds = match &a.sweep {
        Some(s) => Some(parse_sweep(s)?),
        None => None,
    };
    let data = load_train_data(a)?;
    let rows: Vec<String> = match &seeds {
        None => vec![train_one(a, &data, &base, None)?],
        Some(seeds) => {
            let results: Vec<Result<String>> = std::thread::scope(|scope| {
                let handles: Vec<_> = seeds
                    .iter()
                    .map(|&seed| {
                        let cfg = TrainConfig { seed, ..base.clone() };
                        let data = &data;
                        scope.spawn(move || train_one(a, data, &cfg, Some(seed)))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
                    .collect()
            });
            results.into_iter().collect::<Result<_>>()?
        }
    };
    let mut summary = String::from(report::SUMMARY_HEADER);
    summary.push('\n');
    for r in &rows {
        summary.push_str(r);
        summary.push('\n');
    }
    if let Some(p) = &a.summary_out {
        write_text(p, &summary)?;
    }
    out.write_all(summary.as_bytes()).map_err(stdout_err)
}

pub fn cmd_pretrain(a: &PretrainArgs, out: &mut dyn Write) -> Result<()> {
    let noise = NoiseSpec::zero_masking(a.noise).map_err(as_usage)?;
    let cfg = DaeTrainConfig {
        hidden: a.hidden,
        lr: a.lr,
        epochs: a.epochs,
        batch_size: a.batch_size,
    };
    cfg.validate().map_err(as_usage)?;
    if a.input.is_empty() && a.labeled_input.is_empty() {
        return Err(CliError::usage(
            "pretrain needs at least one --labeled-input or --input",
        ));
    }
    let mut sets = Vec::new();
    for p in &a.labeled_input {
        sets.push(load_csv(p, true)?.without_labels());
    }
    for p in &a.input {
        sets.push(load_csv(p, false)?);
    }
    let mut all = sets[0].clone();
    for s in &sets[1..] {
        all = all.concat(s)?;
    }
    let norm = if a.no_norm {
        NormStats::identity(all.dim())
    } else {
        zscore_fit(&[&all])?
    };
    let x = zscore_apply(&all, &norm)?;
    let mut stream = RandomStream::substream(a.seed, PRETRAIN_STREAM);
    let trained = dae_train(x.features(), &noise, &cfg, &mut stream)?;
    write_text(&a.out, &formats::dae_to_string(&trained.params))?;
    if let Some(p) = &a.loss_out {
        write_with(p, |w| report::write_losses(w, &trained.epoch_losses))?;
    }
    if let Some(p) = &a.norm_out {
        write_text(p, &formats::norm_to_string(&norm))?;
    }
    let last = trained.epoch_losses.last().copied();
    writeln!(out, "rows={}", x.len())
        .and_then(|_| writeln!(out, "epochs={}", a.epochs))
        .and_then(|_| match last {
            Some(l) => writeln!(out, "final_loss={}", fmt_f64(l)),
            None => Ok(()),
        })
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

pub fn cmd_mmd(a: &MmdArgs, out: &mut dyn Write) -> Result<()> {
    let s = load_csv(&a.source, a.source_has_labels)?;
    let t = load_csv(&a.target, a.target_has_labels)?;
    let kernel = match a.bandwidth {
        Some(b) => KernelConfig::explicit(b).map_err(|e| match e {
            dann_core::Error::DegenerateBandwidth(m) => CliError::usage(format!("--bandwidth: {m}")),
            other => other.into(),
        })?,
        None => median_heuristic_bandwidth(s.features())?,
    };
    let mmd_sq = mmd_sq_biased(s.features(), t.features(), &kernel)?;
    writeln!(out, "bandwidth={}", fmt_f64(kernel.bandwidth()))
        .and_then(|_| writeln!(out, "bandwidth_source={}", kernel.source().as_str()))
        .and_then(|_| writeln!(out, "mmd_sq={}", fmt_f64(mmd_sq)))
        .and_then(|_| writeln!(out, "mmd={}", fmt_f64(mmd_sq.sqrt())))
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

impl GenSynthArgs {
    pub fn spec(&self) -> ShiftSpec {
        ShiftSpec {
            classes: self.classes,
            per_class: self.per_class,
            spacing: self.spacing,
            rotation_deg: self.theta,
            translation: self.shift.unwrap_or(DEFAULT_TRANSLATION),
            noise_std: self.noise_std,
        }
    }
}

pub fn cmd_gen_synth(a: &GenSynthArgs, out: &mut dyn Write) -> Result<()> {
    let spec = a.spec();
    spec.validate().map_err(as_usage)?;
    let (source, target) = gen_synthetic_shift(&spec, &mut RandomStream::new(a.seed)).map_err(as_usage)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;
    let sp = a.out_dir.join("source.csv");
    let tp = a.out_dir.join("target.csv");
    let mp = a.out_dir.join("synth.meta");
    save_csv(&sp, &source)?;
    save_csv(&tp, &target)?;
    let meta = format!(
        "seed={}\nclasses={}\nper_class={}\nspacing={}\ntheta={}\nshift={},{}\nnoise_std={}\nsource=source.csv\ntarget=target.csv\n",
        a.seed,
        spec.classes,
        spec.per_class,
        fmt_f64(spec.spacing),
        fmt_f64(spec.rotation_deg),
        fmt_f64(spec.translation[0]),
        fmt_f64(spec.translation[1]),
        fmt_f64(spec.noise_std),
    );
    write_text(&mp, &meta)?;
    writeln!(
        out,
        "source={}\ntarget={}\nmetadata={}",
        sp.display(),
        tp.display(),
        mp.display()
    )
    .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let params = load_model(&a.model)?;
    let data = load_csv(&a.data, true)?;
    let norm = if a.no_norm {
        NormStats::identity(data.dim())
    } else {
        let p = a.norm_stats.clone().unwrap_or_else(|| norm_sidecar(&a.model));
        load_norm(&p)?
    };
    let data = zscore_apply(&data, &norm)?;
    let preds = dann_core::network::predict(&params, data.features())?;
    let labels = data.require_labels("evaluation data")?;
    let acc = trainer::accuracy(&preds, labels);
    if let Some(p) = &a.predictions_out {
        write_with(p, |w| preds.iter().try_for_each(|c| writeln!(w, "{c}")))?;
    }
    writeln!(out, "rows={}\naccuracy={}", data.len(), fmt_f64(acc))
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

/// First-layer weights without the bias row.
pub fn first_layer(model: Option<&DannParams>, dae: Option<&DaeParams>) -> dann_core::Matrix {
    match (model, dae) {
        (Some(m), _) => m.u1().row_range(1, m.u1().rows()),
        (None, Some(d)) => d.w_enc(),
        (None, None) => dann_core::Matrix::zeros(0, 0),
    }
}

pub fn cmd_export_filters(a: &ExportArgs, out: &mut dyn Write) -> Result<()> {
    let model = a.model.as_deref().map(load_model).transpose()?;
    let dae = a.dae.as_deref().map(load_dae).transpose()?;
    let w = first_layer(model.as_ref(), dae.as_ref());
    let img = pgm::filter_image(&w).ok_or_else(|| {
        CliError::usage(format!(
            "input dimension {} is not a perfect square, weights cannot be shown as square tiles",
            w.rows()
        ))
    })?;
    write_text(&a.out, &img.to_plain())?;
    writeln!(
        out,
        "tiles={}\nwidth={}\nheight={}",
        w.cols().min(pgm::MAX_TILES),
        img.width,
        img.height
    )
    .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}
