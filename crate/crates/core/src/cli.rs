//! The `codeclean` command line: one subcommand per pipeline stage plus the
//! end-to-end experiment.
//!
//! Settings resolve in three layers: built-in defaults, then the `--config`
//! file, then flags. Progress goes to stderr; results go to files and
//! stdout. Exit codes: 0 success, 2 bad input or configuration, 1 internal
//! failure.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{require_file, CliConfig};
use crate::corpus::synth::generate_splits;
use crate::corpus::{inject_noise, load_corpus, Corpus, Split};
use crate::error::{Error, Result};
use crate::influence::{if_scores, rank_records, scores_from_csv, scores_to_csv, tracin_scores, ScoreMethod};
use crate::model::{load_checkpoints, load_params, save_checkpoints, save_params, train, Dataset, ModelParams};
use crate::pipeline::{
    clean_correct, clean_remove, detect_noise, run_seed, select_gold, CorrectionMode, Report, SeedFile,
};

#[derive(Debug, Parser)]
#[command(name = "codeclean", version, about = "Influence-based noisy-label detection for code corpora")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// key = value settings file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long = "out-dir", global = true)]
    pub out_dir: Option<PathBuf>,
    /// Suppress progress messages.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Set any config key, e.g. `--set tau=0.8`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Relabel p% of each class and record the ground truth.
    Inject {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        p: Option<f64>,
        /// Output corpus; the noise ids go next to it as `<stem>.noise.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a model, storing checkpoints and the final parameters.
    Train(TrainArgs),
    /// Select the gold set and write ranked influence scores.
    Score {
        #[arg(long, value_enum, default_value = "both")]
        method: ScoreChoice,
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        val: Option<PathBuf>,
        /// Final model; defaults to `<out-dir>/model.bin`.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        checkpoints: Option<PathBuf>,
        #[arg(long = "n-gold")]
        n_gold: Option<usize>,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Flag the lowest-scored k% and remove or relabel them.
    Clean {
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        k: f64,
        #[arg(long, value_enum)]
        mode: CleanChoice,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train from scratch on a cleaned corpus and evaluate on the test split.
    Retrain {
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        test: Option<PathBuf>,
    },
    /// Merge per-seed result files into one report.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Run the whole study; completed seeds are skipped on rerun.
    Experiment {
        /// Validate and print the plan without writing anything.
        #[arg(long)]
        dry_run: bool,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long = "batch-size")]
    pub batch_size: Option<usize>,
    #[arg(long = "learning-rate")]
    pub learning_rate: Option<f64>,
    #[arg(long = "checkpoint-every")]
    pub checkpoint_every: Option<usize>,
    #[arg(long)]
    pub arch: Option<String>,
    #[arg(long = "l2-reg")]
    pub l2_reg: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoreChoice {
    If,
    Tracin,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CleanChoice {
    Remove,
    Correct,
    #[value(name = "binary_flip")]
    BinaryFlip,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = std::panic::catch_unwind(|| run(&cli));
    match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            if e.is_user_error() {
                2
            } else {
                1
            }
        }
        Err(_) => {
            eprintln!("error: internal failure");
            1
        }
    }
}

struct Ui {
    quiet: bool,
}

impl Ui {
    fn progress(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

fn set_opt<T: ToString>(cfg: &mut CliConfig, key: &str, value: &Option<T>) -> Result<()> {
    match value {
        Some(v) => cfg.set(key, &v.to_string()),
        None => Ok(()),
    }
}

fn set_path(cfg: &mut CliConfig, key: &str, value: &Option<PathBuf>) -> Result<()> {
    match value {
        Some(p) => cfg.set(key, &p.to_string_lossy()),
        None => Ok(()),
    }
}

fn apply_train_args(cfg: &mut CliConfig, a: &TrainArgs) -> Result<()> {
    set_path(cfg, "train", &a.train)?;
    set_path(cfg, "val", &a.val)?;
    set_opt(cfg, "epochs", &a.epochs)?;
    set_opt(cfg, "batch_size", &a.batch_size)?;
    set_opt(cfg, "learning_rate", &a.learning_rate)?;
    set_opt(cfg, "checkpoint_every", &a.checkpoint_every)?;
    set_opt(cfg, "arch", &a.arch)?;
    set_opt(cfg, "l2_reg", &a.l2_reg)
}

/// Defaults, then the config file, then `--set`, then command flags.
fn resolve(cli: &Cli) -> Result<CliConfig> {
    let mut cfg = match &cli.common.config {
        Some(path) => CliConfig::load(path)?,
        None => CliConfig::default(),
    };
    for pair in &cli.common.set {
        cfg.set_pair(pair)?;
    }
    if let Some(seed) = cli.common.seed {
        cfg.seed = seed;
        if matches!(cli.command, Command::Experiment { .. }) {
            cfg.experiment.seeds = vec![seed];
        }
    }
    if let Some(dir) = &cli.common.out_dir {
        cfg.out_dir = dir.clone();
    }
    match &cli.command {
        Command::Inject { p, .. } => set_opt(&mut cfg, "p", p)?,
        Command::Train(a) => apply_train_args(&mut cfg, a)?,
        Command::Retrain { train, test } => {
            apply_train_args(&mut cfg, train)?;
            set_path(&mut cfg, "test", test)?;
        }
        Command::Score {
            train, val, n_gold, tau, ..
        } => {
            set_path(&mut cfg, "train", train)?;
            set_path(&mut cfg, "val", val)?;
            set_opt(&mut cfg, "n_gold", n_gold)?;
            set_opt(&mut cfg, "tau", tau)?;
        }
        Command::Clean { train, .. } => set_path(&mut cfg, "train", train)?,
        Command::Report { .. } | Command::Experiment { .. } => {}
    }
    cfg.experiment.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve(cli)?;
    let ui = Ui { quiet: cli.common.quiet };
    match &cli.command {
        Command::Inject { input, out, .. } => cmd_inject(&cfg, &ui, input, out.as_deref()),
        Command::Train(_) => cmd_train(&cfg, &ui),
        Command::Score {
            method,
            model,
            checkpoints,
            ..
        } => cmd_score(&cfg, &ui, *method, model.as_deref(), checkpoints.as_deref()),
        Command::Clean {
            scores, k, mode, out, ..
        } => cmd_clean(&cfg, &ui, scores, *k, *mode, out.as_deref()),
        Command::Retrain { .. } => cmd_retrain(&cfg, &ui),
        Command::Report { inputs } => cmd_report(&cfg, &ui, inputs),
        Command::Experiment { dry_run } => cmd_experiment(&cfg, &ui, *dry_run),
    }
}

fn required<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    let p = path
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument(format!("no `{key}` corpus given (flag --{key} or config key `{key}`)")))?;
    require_file(p)?;
    Ok(p)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes through a temporary file so an interrupted run never leaves a
/// truncated result behind.
fn write_atomic(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    let tmp = path.with_extension("tmp");
    write_file(&tmp, contents)?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// `<dir>/<stem>.noise.json` for a corpus at `<dir>/<stem>.<ext>`.
pub fn noise_ids_path(corpus: &Path) -> PathBuf {
    let stem = corpus.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    corpus.with_file_name(format!("{stem}.noise.json"))
}

fn cmd_inject(cfg: &CliConfig, ui: &Ui, input: &Path, out: Option<&Path>) -> Result<()> {
    require_file(input)?;
    let corpus = load_corpus(input, cfg.num_classes, Split::Train)?;
    let (noisy, ids) = inject_noise(&corpus, cfg.experiment.p, cfg.seed)?;
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.out_dir.join("noisy.jsonl"));
    noisy.save(&out)?;
    let truth = noise_ids_path(&out);
    write_file(&truth, to_json(&ids))?;
    let mut per_class = vec![0usize; corpus.num_classes()];
    for id in &ids {
        if let Some(s) = corpus.get(id) {
            per_class[s.label] += 1;
        }
    }
    let counts: Vec<String> = per_class.iter().enumerate().map(|(c, n)| format!("{c}:{n}")).collect();
    println!("relabeled {} of {} samples (per class {})", ids.len(), corpus.len(), counts.join(" "));
    ui.progress(&format!("wrote {} and {}", out.display(), truth.display()));
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct TrainMetrics {
    train_size: usize,
    train_loss: f64,
    train_accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    val_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    test_accuracy: Option<f64>,
}

fn fit_corpus(cfg: &CliConfig, ui: &Ui, corpus: &Corpus) -> Result<(ModelParams, Vec<crate::model::Checkpoint>, Dataset)> {
    let spec = cfg.experiment.model_spec(corpus.num_classes())?;
    let data = Dataset::from_corpus(corpus, cfg.experiment.dim);
    let tcfg = crate::model::TrainConfig {
        seed: cfg.seed,
        ..cfg.experiment.train.clone()
    };
    ui.progress(&format!(
        "training {} on {} samples for {} epochs",
        spec.arch, data.len(), tcfg.epochs
    ));
    let (model, checkpoints) = train(&data.examples, &spec, &tcfg)?;
    Ok((model, checkpoints, data))
}

fn cmd_train(cfg: &CliConfig, ui: &Ui) -> Result<()> {
    let train_path = required(&cfg.train, "train")?;
    if let Some(v) = &cfg.val {
        require_file(v)?;
    }
    let corpus = load_corpus(train_path, cfg.num_classes, Split::Train)?;
    let (model, checkpoints, data) = fit_corpus(cfg, ui, &corpus)?;
    let val_accuracy = match &cfg.val {
        Some(v) => {
            let val = load_corpus(v, corpus.num_classes(), Split::Val)?;
            Some(model.accuracy(&Dataset::from_corpus(&val, cfg.experiment.dim).examples))
        }
        None => None,
    };
    let ckpt_dir = cfg.checkpoint_dir();
    save_checkpoints(&ckpt_dir, &checkpoints)?;
    let last = checkpoints.last().expect("training keeps at least one checkpoint");
    let model_path = cfg.out_dir.join("model.bin");
    save_params(&model_path, &model, last.step, last.eta)?;
    let metrics = TrainMetrics {
        train_size: data.len(),
        train_loss: model.loss(&data.examples)?,
        train_accuracy: model.accuracy(&data.examples),
        val_accuracy,
        test_accuracy: None,
    };
    write_file(&cfg.out_dir.join("metrics.json"), to_json(&metrics))?;
    println!("{}", metrics_line(&metrics));
    ui.progress(&format!(
        "wrote {} checkpoints to {} and {}",
        checkpoints.len(),
        ckpt_dir.display(),
        model_path.display()
    ));
    Ok(())
}

fn metrics_line(m: &TrainMetrics) -> String {
    let mut line = format!("train_accuracy={:.4} train_loss={:.6}", m.train_accuracy, m.train_loss);
    if let Some(v) = m.val_accuracy {
        line += &format!(" val_accuracy={v:.4}");
    }
    if let Some(t) = m.test_accuracy {
        line += &format!(" test_accuracy={t:.4}");
    }
    line
}

fn cmd_score(
    cfg: &CliConfig,
    ui: &Ui,
    method: ScoreChoice,
    model_path: Option<&Path>,
    ckpt_dir: Option<&Path>,
) -> Result<()> {
    let train_path = required(&cfg.train, "train")?;
    let val_path = required(&cfg.val, "val")?;
    let model_path = model_path.map(Path::to_path_buf).unwrap_or_else(|| cfg.out_dir.join("model.bin"));
    require_file(&model_path)?;
    let (model, _, _) = load_params(&model_path)?;
    let c = model.spec.num_classes;
    let dim = model.spec.dim;
    let train_set = Dataset::from_corpus(&load_corpus(train_path, c, Split::Train)?, dim);
    let val = Dataset::from_corpus(&load_corpus(val_path, c, Split::Val)?, dim);

    let e = &cfg.experiment;
    let gold = select_gold(&model, &val, e.n_gold, e.tau, cfg.seed)?;
    let gold_examples = gold.examples(&val)?;
    write_file(&cfg.out_dir.join("gold.json"), to_json(&gold))?;
    ui.progress(&format!("gold set: {} samples at tau {}", gold.ids.len(), e.tau));

    let mut methods = Vec::new();
    if matches!(method, ScoreChoice::If | ScoreChoice::Both) {
        methods.push(ScoreMethod::If);
    }
    if matches!(method, ScoreChoice::Tracin | ScoreChoice::Both) {
        methods.push(ScoreMethod::TracIn);
    }
    for m in methods {
        let scores = match m {
            ScoreMethod::If => {
                ui.progress("scoring with influence functions");
                if_scores(&model, &train_set.examples, &gold_examples, &e.solver)?
            }
            _ => {
                let dir = ckpt_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.checkpoint_dir());
                let checkpoints = load_checkpoints(&dir)?;
                ui.progress(&format!("scoring with TracIn over {} checkpoints", checkpoints.len()));
                tracin_scores(&train_set.examples, &gold_examples, &checkpoints)?
            }
        };
        let records = rank_records(m, train_set.ids.iter().cloned().zip(scores))?;
        let path = cfg.out_dir.join(format!("scores_{m}.csv"));
        write_file(&path, scores_to_csv(&records))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_clean(cfg: &CliConfig, ui: &Ui, scores: &Path, k: f64, mode: CleanChoice, out: Option<&Path>) -> Result<()> {
    let train_path = required(&cfg.train, "train")?;
    require_file(scores)?;
    let corpus = load_corpus(train_path, cfg.num_classes, Split::Train)?;
    if mode == CleanChoice::BinaryFlip && corpus.num_classes() != 2 {
        return Err(Error::InvalidArgument(format!(
            "binary_flip needs a 2-class corpus, this one has {} classes",
            corpus.num_classes()
        )));
    }
    let records = scores_from_csv(&read_file(scores)?)?;
    if records.len() != corpus.len() {
        return Err(Error::InvalidArgument(format!(
            "{} scores for a corpus of {} samples",
            records.len(),
            corpus.len()
        )));
    }
    let flagged = detect_noise(&records, k)?;
    let cleaned = match mode {
        CleanChoice::Remove => clean_remove(&corpus, &flagged)?,
        CleanChoice::Correct => clean_correct(&corpus, &flagged, cfg.experiment.correction)?,
        CleanChoice::BinaryFlip => clean_correct(&corpus, &flagged, CorrectionMode::BinaryFlip)?,
    };
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.out_dir.join("clean.jsonl"));
    cleaned.save(&out)?;
    println!("flagged {} of {} samples; wrote {} samples", flagged.len(), corpus.len(), cleaned.len());
    ui.progress(&format!("wrote {}", out.display()));
    Ok(())
}

fn cmd_retrain(cfg: &CliConfig, ui: &Ui) -> Result<()> {
    let train_path = required(&cfg.train, "train")?;
    let test_path = required(&cfg.test, "test")?;
    if let Some(v) = &cfg.val {
        require_file(v)?;
    }
    let corpus = load_corpus(train_path, cfg.num_classes, Split::Train)?;
    let (model, checkpoints, data) = fit_corpus(cfg, ui, &corpus)?;
    let eval = |path: &Path, split| -> Result<f64> {
        let c = load_corpus(path, corpus.num_classes(), split)?;
        Ok(model.accuracy(&Dataset::from_corpus(&c, cfg.experiment.dim).examples))
    };
    let metrics = TrainMetrics {
        train_size: data.len(),
        train_loss: model.loss(&data.examples)?,
        train_accuracy: model.accuracy(&data.examples),
        val_accuracy: cfg.val.as_deref().map(|v| eval(v, Split::Val)).transpose()?,
        test_accuracy: Some(eval(test_path, Split::Test)?),
    };
    let last = checkpoints.last().expect("training keeps at least one checkpoint");
    save_params(cfg.out_dir.join("retrained.bin"), &model, last.step, last.eta)?;
    write_file(&cfg.out_dir.join("retrain.json"), to_json(&metrics))?;
    println!("{}", metrics_line(&metrics));
    Ok(())
}

fn write_report(cfg: &CliConfig, ui: &Ui, report: &Report) -> Result<()> {
    let json = cfg.out_dir.join("report.json");
    let csv = cfg.out_dir.join("report.csv");
    write_file(&json, report.to_json())?;
    write_file(&csv, report.to_csv())?;
    if !ui.quiet {
        print!("{}", report.render_tables());
        let _ = std::io::stdout().flush();
    }
    ui.progress(&format!("wrote {} and {}", json.display(), csv.display()));
    Ok(())
}

fn cmd_report(cfg: &CliConfig, ui: &Ui, inputs: &[PathBuf]) -> Result<()> {
    let files = inputs
        .iter()
        .map(|p| {
            serde_json::from_str::<SeedFile>(&read_file(p)?).map_err(|e| Error::Format {
                what: "seed result",
                message: format!("{}: {e}", p.display()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_report(cfg, ui, &Report::merge(files)?)
}

fn seed_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed-{seed}.json"))
}

/// Train, validation and test corpora: loaded from disk when `train` is
/// configured, otherwise generated from the `synth_*` settings.
pub fn experiment_corpora(cfg: &CliConfig) -> Result<(Corpus, Corpus, Corpus)> {
    match &cfg.train {
        Some(train) => {
            let train = load_corpus(train, cfg.num_classes, Split::Train)?;
            let c = train.num_classes();
            let val = load_corpus(required(&cfg.val, "val")?, c, Split::Val)?;
            let test = load_corpus(required(&cfg.test, "test")?, c, Split::Test)?;
            Ok((train, val, test))
        }
        None => {
            let s = &cfg.synth;
            generate_splits(&s.generator, s.train_per_class, s.val_per_class, s.test_per_class)
        }
    }
}

fn cmd_experiment(cfg: &CliConfig, ui: &Ui, dry_run: bool) -> Result<()> {
    cfg.validate()?;
    let seeds_dir = cfg.out_dir.join("seeds");
    let echo = &cfg.experiment;

    let mut pending = Vec::new();
    let mut done = Vec::new();
    for &seed in &echo.seeds {
        let path = seed_path(&seeds_dir, seed);
        if path.is_file() {
            let file: SeedFile = serde_json::from_str(&read_file(&path)?).map_err(|e| Error::Format {
                what: "seed result",
                message: format!("{}: {e}", path.display()),
            })?;
            let same = crate::pipeline::ExperimentConfig {
                seeds: echo.seeds.clone(),
                ..file.config_echo.clone()
            } == *echo;
            if !same {
                return Err(Error::InvalidArgument(format!(
                    "{} was produced with a different configuration; use another --out-dir",
                    path.display()
                )));
            }
            // A seed that failed is retried rather than treated as done.
            if file.result.outcome.is_some() {
                done.push(file);
                continue;
            }
        }
        pending.push(seed);
    }

    if dry_run {
        println!("# resolved configuration");
        print!("{}", cfg.to_text());
        println!("# plan");
        match &cfg.train {
            Some(p) => println!("corpora: {} (+ val, test)", p.display()),
            None => println!(
                "corpora: synthetic, {} classes, {}/{}/{} per class",
                cfg.synth.generator.num_classes,
                cfg.synth.train_per_class,
                cfg.synth.val_per_class,
                cfg.synth.test_per_class
            ),
        }
        for f in &done {
            println!("seed {}: done, skipped", f.result.seed);
        }
        for s in &pending {
            println!("seed {s}: run -> {}", seed_path(&seeds_dir, *s).display());
        }
        println!("report: {}", cfg.out_dir.join("report.json").display());
        return Ok(());
    }

    let (train, val, test) = experiment_corpora(cfg)?;
    create_dir(&seeds_dir)?;
    for f in &done {
        ui.progress(&format!("seed {}: already complete, skipping", f.result.seed));
    }
    let fresh = pending
        .par_iter()
        .map(|&seed| -> Result<SeedFile> {
            ui.progress(&format!("seed {seed}: running"));
            let (result, records) = run_seed(&train, &val, &test, echo, seed)?;
            if let Some(err) = &result.error {
                ui.progress(&format!("seed {seed}: failed: {err}"));
            }
            write_file(&seeds_dir.join(format!("scores-seed-{seed}.csv")), scores_to_csv(&records))?;
            let file = SeedFile {
                config_echo: echo.clone(),
                result,
            };
            write_atomic(&seed_path(&seeds_dir, seed), to_json(&file))?;
            ui.progress(&format!("seed {seed}: done"));
            Ok(file)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut all = done;
    all.extend(fresh);
    write_report(cfg, ui, &Report::merge(all)?)
}
