//! Experiment reports: per-seed results plus mean ± std cells shaped like
//! the detection-precision and retraining-accuracy tables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::experiment::{ExperimentConfig, NoiseMode, SeedResult};
use crate::error::{Error, Result};
use crate::stats::{mean, std_dev};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub dataset: String,
    /// `if`, `tracin`, `random`, or `none` for the noisy-model baseline.
    pub method: String,
    pub k: Option<f64>,
    /// `baseline`, `detect`, `correct` or `remove`.
    pub mode: String,
    /// `precision` or `test_accuracy`.
    pub metric: String,
    /// `None` when every seed failed.
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub seeds: usize,
    pub failed_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config_echo: ExperimentConfig,
    pub per_seed: Vec<SeedResult>,
    pub summary: Summary,
}

/// A single seed's result as written by a resumable run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFile {
    pub config_echo: ExperimentConfig,
    pub result: SeedResult,
}

impl Report {
    /// Builds summary cells from the seeds that completed. Cell order:
    /// baseline, then per method and k the precision cell (synthetic noise
    /// only) followed by one accuracy cell per clean mode.
    pub fn assemble(config: ExperimentConfig, mut per_seed: Vec<SeedResult>) -> Self {
        per_seed.sort_by_key(|r| r.seed);
        let failed: Vec<u64> = per_seed.iter().filter(|r| r.outcome.is_none()).map(|r| r.seed).collect();
        let ok: Vec<_> = per_seed.iter().filter_map(|r| r.outcome.as_ref()).collect();

        let cell = |method: &str, k: Option<f64>, mode: &str, metric: &str, values: Vec<f64>| {
            let (m, s) = if values.is_empty() {
                (None, None)
            } else {
                (Some(mean(&values)), Some(std_dev(&values)))
            };
            Cell {
                dataset: config.dataset.clone(),
                method: method.to_string(),
                k,
                mode: mode.to_string(),
                metric: metric.to_string(),
                mean: m,
                std: s,
                seeds: values.len(),
                failed_seeds: failed.clone(),
            }
        };

        let mut cells = vec![cell(
            "none",
            None,
            "baseline",
            "test_accuracy",
            ok.iter().map(|o| o.noisy_test_accuracy).collect(),
        )];
        for (mi, method) in config.methods.iter().enumerate() {
            for (ki, &k) in config.k_list.iter().enumerate() {
                let name = method.to_string();
                if config.noise_mode == NoiseMode::Synthetic {
                    cells.push(cell(
                        &name,
                        Some(k),
                        "detect",
                        "precision",
                        ok.iter().filter_map(|o| o.methods[mi].per_k[ki].precision).collect(),
                    ));
                }
                for (ci, mode) in config.clean_modes.iter().enumerate() {
                    cells.push(cell(
                        &name,
                        Some(k),
                        &mode.to_string(),
                        "test_accuracy",
                        ok.iter().map(|o| o.methods[mi].per_k[ki].retrain[ci].test_accuracy).collect(),
                    ));
                }
            }
        }
        Report {
            config_echo: config,
            per_seed,
            summary: Summary { cells },
        }
    }

    /// Merges per-seed files from separate runs of the same configuration.
    pub fn merge(files: Vec<SeedFile>) -> Result<Self> {
        let mut iter = files.into_iter();
        let first = iter.next().ok_or_else(|| Error::InvalidArgument("no seed results to merge".into()))?;
        let config = first.config_echo;
        let mut results = vec![first.result];
        for f in iter {
            let same = ExperimentConfig {
                seeds: config.seeds.clone(),
                ..f.config_echo.clone()
            } == config;
            if !same {
                return Err(Error::InvalidArgument(format!(
                    "seed {} was produced with a different configuration",
                    f.result.seed
                )));
            }
            if results.iter().any(|r| r.seed == f.result.seed) {
                return Err(Error::InvalidArgument(format!("seed {} appears twice", f.result.seed)));
            }
            results.push(f.result);
        }
        let mut config = config;
        config.seeds = {
            let mut s: Vec<u64> = results.iter().map(|r| r.seed).collect();
            s.sort_unstable();
            s
        };
        Ok(Report::assemble(config, results))
    }

    pub fn cell(&self, method: &str, k: Option<f64>, mode: &str) -> Option<&Cell> {
        self.summary
            .cells
            .iter()
            .find(|c| c.method == method && c.k == k && c.mode == mode)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format {
            what: "report",
            message: e.to_string(),
        })
    }

    /// Flat CSV `dataset,method,k,mode,metric,mean,std`. Failed cells carry
    /// `failed` in the mean and std columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,method,k,mode,metric,mean,std\n");
        for c in &self.summary.cells {
            let k = c.k.map(|k| k.to_string()).unwrap_or_default();
            let (m, s) = match (c.mean, c.std) {
                (Some(m), Some(s)) => (m.to_string(), s.to_string()),
                _ => ("failed".into(), "failed".into()),
            };
            let _ = writeln!(out, "{},{},{},{},{},{},{}", c.dataset, c.method, k, c.mode, c.metric, m, s);
        }
        out
    }

    /// Human-readable tables, values in percent as `mean ± std`.
    pub fn render_tables(&self) -> String {
        let cfg = &self.config_echo;
        let fmt = |c: Option<&Cell>| match c.and_then(|c| c.mean.zip(c.std)) {
            Some((m, s)) => format!("{:6.2} ± {:5.2}", 100.0 * m, 100.0 * s),
            None => format!("{:>15}", "failed"),
        };
        let mut out = String::new();
        let ks: Vec<String> = cfg.k_list.iter().map(|k| format!("k={k}")).collect();
        if cfg.noise_mode == NoiseMode::Synthetic {
            let _ = writeln!(out, "Detection precision (% of flagged samples that are mislabeled)");
            let _ = writeln!(out, "{:<8} {}", "method", ks.iter().map(|k| format!("{k:>15}")).collect::<String>());
            for m in &cfg.methods {
                let row: String = cfg
                    .k_list
                    .iter()
                    .map(|&k| format!(" {}", fmt(self.cell(&m.to_string(), Some(k), "detect"))))
                    .collect();
                let _ = writeln!(out, "{:<8}{row}", m.to_string());
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "Test accuracy after cleaning and retraining (noisy baseline {})",
            fmt(self.cell("none", None, "baseline")).trim()
        );
        for mode in &cfg.clean_modes {
            let _ = writeln!(out, "  {mode}");
            for m in &cfg.methods {
                let row: String = cfg
                    .k_list
                    .iter()
                    .map(|&k| format!(" {}", fmt(self.cell(&m.to_string(), Some(k), &mode.to_string()))))
                    .collect();
                let _ = writeln!(out, "  {:<8}{row}", m.to_string());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::experiment::{CleanMode, DetectMethod, KOutcome, MethodOutcome, RetrainOutcome, SeedOutcome};

    fn config() -> ExperimentConfig {
        ExperimentConfig {
            dataset: "toy".into(),
            k_list: vec![10.0],
            seeds: vec![1, 2, 3],
            methods: vec![DetectMethod::If],
            clean_modes: vec![CleanMode::Correct],
            ..Default::default()
        }
    }

    fn seed(seed: u64, base: f64, precision: f64, retrained: f64) -> SeedResult {
        SeedResult {
            seed,
            outcome: Some(SeedOutcome {
                noise_ids: Some(vec![]),
                noisy_test_accuracy: base,
                gold_ids: vec![],
                methods: vec![MethodOutcome {
                    method: DetectMethod::If,
                    per_k: vec![KOutcome {
                        k: 10.0,
                        detected: 10,
                        precision: Some(precision),
                        retrain: vec![RetrainOutcome {
                            mode: CleanMode::Correct,
                            train_size: 100,
                            test_accuracy: retrained,
                        }],
                    }],
                }],
            }),
            error: None,
        }
    }

    #[test]
    fn mean_and_std_per_cell() {
        // Hand-computed: precision (0.5, 0.7, 0.6) → mean 0.6, sample std 0.1.
        let r = Report::assemble(
            config(),
            vec![seed(2, 0.8, 0.7, 0.9), seed(1, 0.8, 0.5, 0.85), seed(3, 0.8, 0.6, 0.95)],
        );
        assert_eq!(r.per_seed.iter().map(|s| s.seed).collect::<Vec<_>>(), [1, 2, 3]);
        let p = r.cell("if", Some(10.0), "detect").unwrap();
        assert!((p.mean.unwrap() - 0.6).abs() < 1e-15);
        assert!((p.std.unwrap() - 0.1).abs() < 1e-15);
        let base = r.cell("none", None, "baseline").unwrap();
        assert!((base.mean.unwrap() - 0.8).abs() < 1e-15 && base.std.unwrap() < 1e-15);
        let acc = r.cell("if", Some(10.0), "correct").unwrap();
        assert!((acc.mean.unwrap() - 0.9).abs() < 1e-15);
        assert!((acc.std.unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(r.summary.cells.len(), 3);
        assert_eq!(Report::from_json(&r.to_json()).unwrap(), r);
        assert!(r.render_tables().contains("60.00 ± 10.00"));
    }

    #[test]
    fn failed_seeds_are_marked_not_filled() {
        let failed = SeedResult {
            seed: 2,
            outcome: None,
            error: Some("boom".into()),
        };
        let r = Report::assemble(config(), vec![seed(1, 0.8, 0.5, 0.85), failed.clone()]);
        let p = r.cell("if", Some(10.0), "detect").unwrap();
        assert_eq!(p.seeds, 1);
        assert_eq!(p.failed_seeds, vec![2]);

        let all_failed = Report::assemble(config(), vec![failed]);
        let p = all_failed.cell("if", Some(10.0), "detect").unwrap();
        assert_eq!((p.mean, p.std), (None, None));
        assert!(all_failed.to_csv().contains("toy,if,10,detect,precision,failed,failed"));
    }

    #[test]
    fn merge_rejects_mismatched_configs() {
        let a = SeedFile { config_echo: config(), result: seed(1, 0.8, 0.5, 0.85) };
        let mut other = config();
        other.p = 20.0;
        let b = SeedFile { config_echo: other, result: seed(2, 0.8, 0.5, 0.85) };
        assert!(Report::merge(vec![a.clone(), b]).is_err());
        assert!(Report::merge(vec![a.clone(), a.clone()]).is_err());
        assert!(Report::merge(vec![]).is_err());
        assert_eq!(Report::merge(vec![a]).unwrap().config_echo.seeds, vec![1]);
    }
}
