//! Flat `key = value` configuration shared by every CLI command.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are comma
//! separated. Unknown or repeated keys are errors, so a typo never silently
//! falls back to a default. Values given on the command line are applied
//! after the file and win.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::corpus::synth::SynthConfig;
use crate::error::{Error, Result};
use crate::pipeline::ExperimentConfig;

/// Every accepted key with a one-line description, in the order
/// [`CliConfig::to_text`] writes them.
pub const KEYS: &[(&str, &str)] = &[
    ("dataset", "name used in report cells"),
    ("noise_mode", "synthetic (inject noise, precision known) or real"),
    ("p", "percent of each class relabeled"),
    ("n_gold", "gold-set size"),
    ("tau", "minimum predicted probability for a gold sample"),
    ("k_list", "percentages of the train set flagged as noise"),
    ("seeds", "experiment seeds"),
    ("methods", "detection methods: if, tracin, random"),
    ("clean_modes", "correct, remove"),
    ("correction", "ground_truth or binary_flip"),
    ("arch", "linear or mlp:<hidden>"),
    ("dim", "hashed feature dimension, a power of two"),
    ("l2_reg", "L2 penalty on weights"),
    ("epochs", "training epochs"),
    ("batch_size", "mini-batch size"),
    ("learning_rate", "constant SGD step size"),
    ("checkpoint_every", "epochs between stored checkpoints"),
    ("solver", "inverse-HVP solver: cg or lissa"),
    ("damping", "added to the Hessian diagonal"),
    ("tol", "CG relative residual tolerance"),
    ("max_iter", "CG iteration cap"),
    ("lissa_depth", "LiSSA recursion depth"),
    ("lissa_samples", "LiSSA runs averaged"),
    ("lissa_scale", "LiSSA operator scale"),
    ("lissa_batch", "examples per LiSSA Hessian estimate, 0 = all"),
    ("train", "train corpus (JSONL); empty = generate a synthetic corpus"),
    ("val", "validation corpus (JSONL)"),
    ("test", "test corpus (JSONL)"),
    ("num_classes", "number of classes, 0 = infer from labels"),
    ("out_dir", "output directory"),
    ("checkpoint_dir", "checkpoint directory, empty = <out_dir>/checkpoints"),
    ("seed", "seed for single-stage commands"),
    ("synth_classes", "synthetic corpus: classes"),
    ("synth_train_per_class", "synthetic corpus: train programs per class"),
    ("synth_val_per_class", "synthetic corpus: validation programs per class"),
    ("synth_test_per_class", "synthetic corpus: test programs per class"),
    ("synth_overlap", "synthetic corpus: chance a statement comes from another topic"),
    ("synth_statements", "synthetic corpus: min,max topic statements per program"),
    ("synth_helper_pool", "synthetic corpus: helper names per topic"),
    ("synth_helpers", "synthetic corpus: helper calls per program"),
    ("synth_seed", "synthetic corpus: generator seed"),
];

/// Synthetic corpus settings used when no train corpus is given.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSettings {
    pub generator: SynthConfig,
    pub train_per_class: usize,
    pub val_per_class: usize,
    pub test_per_class: usize,
}

impl Default for SynthSettings {
    fn default() -> Self {
        SynthSettings {
            generator: SynthConfig::default(),
            train_per_class: 300,
            val_per_class: 75,
            test_per_class: 75,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub experiment: ExperimentConfig,
    pub train: Option<PathBuf>,
    pub val: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub num_classes: usize,
    pub out_dir: PathBuf,
    pub checkpoint_dir: Option<PathBuf>,
    pub seed: u64,
    pub synth: SynthSettings,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            experiment: ExperimentConfig::default(),
            train: None,
            val: None,
            test: None,
            num_classes: 0,
            out_dir: PathBuf::from("out"),
            checkpoint_dir: None,
            seed: 0,
            synth: SynthSettings::default(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_enum_list<T: std::str::FromStr<Err = Error>>(value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

fn opt_path(value: &str) -> Option<PathBuf> {
    let v = value.trim();
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl CliConfig {
    /// Sets one key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let e = &mut self.experiment;
        let g = &mut self.synth.generator;
        match key {
            "dataset" => e.dataset = value.trim().to_string(),
            "noise_mode" => e.noise_mode = value.parse()?,
            "p" => e.p = parse(key, value)?,
            "n_gold" => e.n_gold = parse(key, value)?,
            "tau" => e.tau = parse(key, value)?,
            "k_list" => e.k_list = parse_list(key, value)?,
            "seeds" => e.seeds = parse_list(key, value)?,
            "methods" => e.methods = parse_enum_list(value)?,
            "clean_modes" => e.clean_modes = parse_enum_list(value)?,
            "correction" => e.correction = value.parse()?,
            "arch" => e.arch = value.trim().parse()?,
            "dim" => e.dim = parse(key, value)?,
            "l2_reg" => e.l2_reg = parse(key, value)?,
            "epochs" => e.train.epochs = parse(key, value)?,
            "batch_size" => e.train.batch_size = parse(key, value)?,
            "learning_rate" => e.train.learning_rate = parse(key, value)?,
            "checkpoint_every" => e.train.checkpoint_every = parse(key, value)?,
            "solver" => e.solver.method = value.parse()?,
            "damping" => e.solver.damping = parse(key, value)?,
            "tol" => e.solver.tol = parse(key, value)?,
            "max_iter" => e.solver.max_iter = parse(key, value)?,
            "lissa_depth" => e.solver.lissa_depth = parse(key, value)?,
            "lissa_samples" => e.solver.lissa_samples = parse(key, value)?,
            "lissa_scale" => e.solver.lissa_scale = parse(key, value)?,
            "lissa_batch" => e.solver.lissa_batch = parse(key, value)?,
            "train" => self.train = opt_path(value),
            "val" => self.val = opt_path(value),
            "test" => self.test = opt_path(value),
            "num_classes" => self.num_classes = parse(key, value)?,
            "out_dir" => {
                self.out_dir = opt_path(value).ok_or_else(|| Error::InvalidArgument("`out_dir` is empty".into()))?
            }
            "checkpoint_dir" => self.checkpoint_dir = opt_path(value),
            "seed" => self.seed = parse(key, value)?,
            "synth_classes" => g.num_classes = parse(key, value)?,
            "synth_train_per_class" => self.synth.train_per_class = parse(key, value)?,
            "synth_val_per_class" => self.synth.val_per_class = parse(key, value)?,
            "synth_test_per_class" => self.synth.test_per_class = parse(key, value)?,
            "synth_overlap" => g.overlap = parse(key, value)?,
            "synth_statements" => match parse_list::<usize>(key, value)?[..] {
                [lo, hi] => g.statements = (lo, hi),
                _ => return Err(Error::InvalidArgument("`synth_statements` needs `min,max`".into())),
            },
            "synth_helper_pool" => g.helper_pool = parse(key, value)?,
            "synth_helpers" => g.helpers = parse(key, value)?,
            "synth_seed" => g.seed = parse(key, value)?,
            other => return Err(Error::InvalidArgument(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key=value` assignment.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("expected key=value, got `{pair}`")))?;
        self.set(k.trim(), v.trim())
    }

    /// Applies every assignment in `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fail = |message: String| Error::Format {
                what: "config",
                message: format!("line {}: {message}", i + 1),
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| fail(format!("expected key = value, got `{line}`")))?;
            let k = k.trim();
            if !seen.insert(k.to_string()) {
                return Err(fail(format!("key `{k}` given twice")));
            }
            self.set(k, v.trim()).map_err(|e| fail(e.to_string()))?;
        }
        Ok(())
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = CliConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text)
    }

    /// Writes every key with its current value. Parsing the output yields
    /// an equal config.
    pub fn to_text(&self) -> String {
        let e = &self.experiment;
        let g = &self.synth.generator;
        let value = |key: &str| -> String {
            match key {
                "dataset" => e.dataset.clone(),
                "noise_mode" => e.noise_mode.to_string(),
                "p" => e.p.to_string(),
                "n_gold" => e.n_gold.to_string(),
                "tau" => e.tau.to_string(),
                "k_list" => join(&e.k_list),
                "seeds" => join(&e.seeds),
                "methods" => join(&e.methods),
                "clean_modes" => join(&e.clean_modes),
                "correction" => e.correction.to_string(),
                "arch" => e.arch.to_string(),
                "dim" => e.dim.to_string(),
                "l2_reg" => e.l2_reg.to_string(),
                "epochs" => e.train.epochs.to_string(),
                "batch_size" => e.train.batch_size.to_string(),
                "learning_rate" => e.train.learning_rate.to_string(),
                "checkpoint_every" => e.train.checkpoint_every.to_string(),
                "solver" => e.solver.method.to_string(),
                "damping" => e.solver.damping.to_string(),
                "tol" => e.solver.tol.to_string(),
                "max_iter" => e.solver.max_iter.to_string(),
                "lissa_depth" => e.solver.lissa_depth.to_string(),
                "lissa_samples" => e.solver.lissa_samples.to_string(),
                "lissa_scale" => e.solver.lissa_scale.to_string(),
                "lissa_batch" => e.solver.lissa_batch.to_string(),
                "train" => show_path(&self.train),
                "val" => show_path(&self.val),
                "test" => show_path(&self.test),
                "num_classes" => self.num_classes.to_string(),
                "out_dir" => self.out_dir.display().to_string(),
                "checkpoint_dir" => show_path(&self.checkpoint_dir),
                "seed" => self.seed.to_string(),
                "synth_classes" => g.num_classes.to_string(),
                "synth_train_per_class" => self.synth.train_per_class.to_string(),
                "synth_val_per_class" => self.synth.val_per_class.to_string(),
                "synth_test_per_class" => self.synth.test_per_class.to_string(),
                "synth_overlap" => g.overlap.to_string(),
                "synth_statements" => format!("{},{}", g.statements.0, g.statements.1),
                "synth_helper_pool" => g.helper_pool.to_string(),
                "synth_helpers" => g.helpers.to_string(),
                "synth_seed" => g.seed.to_string(),
                _ => unreachable!("every key in KEYS is handled"),
            }
        };
        let mut out = String::new();
        for (key, help) in KEYS {
            let _ = writeln!(out, "# {help}\n{key} = {}", value(key));
        }
        out
    }

    pub fn checkpoint_dir(&self) -> PathBuf {
        self.checkpoint_dir
            .clone()
            .unwrap_or_else(|| self.out_dir.join("checkpoints"))
    }

    /// Checks the numeric settings and that every configured input exists.
    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        for p in [&self.train, &self.val, &self.test].into_iter().flatten() {
            require_file(p)?;
        }
        if self.train.is_some() && (self.val.is_none() || self.test.is_none()) {
            return Err(Error::InvalidArgument(
                "`train` is set, so `val` and `test` must be set too".into(),
            ));
        }
        Ok(())
    }
}

/// Errors unless `path` names an existing file.
pub fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{CleanMode, DetectMethod};

    #[test]
    fn text_round_trip() {
        let mut cfg = CliConfig::default();
        cfg.set("k_list", "1, 2.5").unwrap();
        cfg.set("methods", "if,random").unwrap();
        cfg.set("train", "a.jsonl").unwrap();
        cfg.set("synth_statements", "2,4").unwrap();
        cfg.set("arch", "mlp:8").unwrap();
        let back = CliConfig::parse_str(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.experiment.k_list, vec![1.0, 2.5]);
        assert_eq!(back.experiment.methods, vec![DetectMethod::If, DetectMethod::Random]);
    }

    #[test]
    fn every_key_is_settable() {
        let text = CliConfig::default().to_text();
        let n = text.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(n, KEYS.len());
    }

    #[test]
    fn unknown_and_repeated_keys_are_rejected() {
        let err = CliConfig::parse_str("epochs = 3\nepoch = 4\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(err.to_string().contains("epoch"), "{err}");
        assert!(CliConfig::parse_str("p = 1\np = 2").is_err());
        assert!(CliConfig::parse_str("just words").is_err());
    }

    #[test]
    fn comments_blank_lines_and_bad_values() {
        let cfg = CliConfig::parse_str("# hi\n\n  clean_modes = remove \n").unwrap();
        assert_eq!(cfg.experiment.clean_modes, vec![CleanMode::Remove]);
        assert!(CliConfig::parse_str("tau = high").is_err());
        assert!(CliConfig::parse_str("synth_statements = 3").is_err());
    }

    #[test]
    fn missing_input_is_reported_with_path() {
        let mut cfg = CliConfig::default();
        cfg.set("train", "/nonexistent/train.jsonl").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("/nonexistent/train.jsonl"));
        assert!(err.is_user_error());
    }
}
