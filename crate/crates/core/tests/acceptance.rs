//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Runs without the libtest harness so the lines are
//! always visible.

mod common;

use std::path::{Path, PathBuf};

use codeclean::cli::{experiment_corpora, run_from_args};
use codeclean::config::CliConfig;
use codeclean::model::Arch;
use codeclean::pipeline::{detection_count, run_experiment, CleanMode, DetectMethod, Report};
use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn derivatives() -> Outcome {
    let ((lin, mlp), secs) = timed(|| {
        (
            derivative_errors(Arch::Linear, 10, 101),
            derivative_errors(Arch::Mlp { hidden: 4 }, 10, 102),
        )
    });
    let grad = lin.0.max(mlp.0);
    let hvp = lin.1.max(mlp.1);
    outcome(
        grad < 1e-5 && hvp < 1e-4 && secs < 10.0,
        format!("worst grad rel err {grad:.1e}, worst hvp rel err {hvp:.1e}, {secs:.1}s"),
    )
}

fn solvers() -> Outcome {
    let ((cg, lissa), secs) = timed(|| solver_errors(&[3, 10, 50, 120, 200], 7));
    outcome(
        cg < 1e-6 && lissa < 1e-2 && secs < 30.0,
        format!("cg rel err {cg:.1e}, lissa rel err {lissa:.1e}, {secs:.1}s"),
    )
}

fn loo_consistency() -> Outcome {
    let (runs, secs) = timed(|| (0..5).map(if_vs_loo).collect::<Vec<_>>());
    let rhos: Vec<String> = runs.iter().map(|r| format!("{:.3}", r.spearman)).collect();
    let worst_grad = runs.iter().map(|r| r.grad_norm).fold(0.0f64, f64::max);
    let pass = runs.iter().all(|r| r.spearman >= 0.8 && r.grad_norm < 1e-5) && secs < 300.0;
    outcome(
        pass,
        format!("Spearman [{}], max grad norm {worst_grad:.1e}, {secs:.1}s", rhos.join(", ")),
    )
}

/// Runs the reference experiment through the CLI into `out`.
fn run_fixture(out: &Path) -> (Report, f64) {
    let conf = desk_config();
    let (code, secs) = timed(|| {
        run_from_args([
            "codeclean",
            "--quiet",
            "--config",
            conf.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
            "experiment",
        ])
    });
    assert_eq!(code, 0, "reference experiment failed");
    let report = Report::from_json(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    (report, secs)
}

fn mean_of(report: &Report, method: &str, k: f64, mode: &str) -> f64 {
    report
        .cell(method, Some(k), mode)
        .and_then(|c| c.mean)
        .unwrap_or(f64::NAN)
}

fn detection(report: &Report, secs: f64) -> Outcome {
    let cfg = &report.config_echo;
    let mut ks = cfg.k_list.clone();
    ks.sort_by(f64::total_cmp);
    let mut notes = Vec::new();
    let mut pass = secs < 600.0 && report.per_seed.iter().all(|r| r.error.is_none());

    for method in ["if", "tracin"] {
        let p: Vec<f64> = ks.iter().map(|&k| mean_of(report, method, k, "detect")).collect();
        let at10 = mean_of(report, method, 10.0, "detect");
        let monotone = p.windows(2).all(|w| w[1] <= w[0]);
        pass &= at10 >= 0.30 && monotone;
        notes.push(format!("{method} p@10 {at10:.3}{}", if monotone { "" } else { " (not monotone)" }));
    }
    // Correction keeps every sample, so its train size is the corpus size.
    let train_size = report.per_seed[0]
        .outcome
        .as_ref()
        .and_then(|o| o.methods[0].per_k[0].retrain.iter().find(|r| r.mode == CleanMode::Correct))
        .map(|r| r.train_size)
        .unwrap_or(1200);
    let seeds = cfg.seeds.len() as f64;
    let mut random_ok = true;
    for &k in &ks {
        let flagged = detection_count(k, train_size).unwrap() as f64;
        let sigma = (0.1 * 0.9 / (flagged * seeds)).sqrt();
        random_ok &= (mean_of(report, "random", k, "detect") - 0.1).abs() <= 3.0 * sigma;
    }
    pass &= random_ok;
    notes.push(format!(
        "random p@10 {:.3}{}",
        mean_of(report, "random", 10.0, "detect"),
        if random_ok { "" } else { " (outside 3 sigma)" }
    ));
    notes.push(format!("{secs:.0}s"));
    outcome(pass, notes.join(", "))
}

fn retraining(report: &Report) -> Outcome {
    let base = report.cell("none", None, "baseline").and_then(|c| c.mean).unwrap_or(f64::NAN);
    let mut pass = true;
    let mut notes = vec![format!("baseline {:.2}%", 100.0 * base)];
    for method in ["if", "tracin"] {
        let corrected = mean_of(report, method, 10.0, "correct");
        let removed = mean_of(report, method, 1.0, "remove");
        pass &= corrected > base && removed >= base - 0.005;
        notes.push(format!(
            "{method} correct@10 {:.2}%, remove@1 {:.2}%",
            100.0 * corrected,
            100.0 * removed
        ));
    }
    outcome(pass, notes.join(", "))
}

fn separation(report: &Report) -> Outcome {
    let mut pass = true;
    let mut worst = f64::INFINITY;
    for &k in &report.config_echo.k_list {
        let random = mean_of(report, "random", k, "detect");
        for method in ["if", "tracin"] {
            let margin = mean_of(report, method, k, "detect") - random;
            pass &= margin > 0.0;
            worst = worst.min(margin);
        }
    }
    outcome(pass, format!("smallest margin over random {:.3}", worst))
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap().flatten() {
        let p = e.path();
        if p.is_dir() {
            out.extend(files_under(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn determinism(first: &Path, second: &Path) -> Outcome {
    let a = files_under(first);
    let mut differing = Vec::new();
    for pa in &a {
        let rel = pa.strip_prefix(first).unwrap();
        if std::fs::read(pa).ok() != std::fs::read(second.join(rel)).ok() {
            differing.push(rel.display().to_string());
        }
    }
    let same_set = a.len() == files_under(second).len();
    let scores = a.iter().filter(|p| p.extension().is_some_and(|e| e == "csv")).count();
    outcome(
        differing.is_empty() && same_set && scores > 0,
        if differing.is_empty() {
            format!("{} files identical, {scores} of them CSV", a.len())
        } else {
            format!("differ: {}", differing.join(", "))
        },
    )
}

fn pipeline_identity() -> Outcome {
    let mut cfg = CliConfig::load(&desk_config()).unwrap();
    let e = &mut cfg.experiment;
    e.p = 0.0;
    e.seeds = vec![0];
    e.methods = vec![DetectMethod::Random];
    e.k_list = vec![10.0];
    e.clean_modes = vec![CleanMode::Correct];
    e.train.epochs = 200;
    let (train, val, test) = experiment_corpora(&cfg).unwrap();
    let run = run_experiment(&train, &val, &test, &cfg.experiment).unwrap();
    let Some(o) = run.report.per_seed[0].outcome.as_ref() else {
        return outcome(false, format!("seed failed: {:?}", run.report.per_seed[0].error));
    };
    let retrained = o.methods[0].per_k[0].retrain[0].test_accuracy;
    let no_noise = o.noise_ids.as_ref().is_some_and(|ids| ids.is_empty());
    outcome(
        no_noise && retrained.to_bits() == o.noisy_test_accuracy.to_bits(),
        format!("baseline {} vs retrained {}", o.noisy_test_accuracy, retrained),
    )
}

fn main() {
    let scratch = tempfile::tempdir().unwrap();
    let (first, second) = (scratch.path().join("first"), scratch.path().join("second"));

    let mut results: Vec<(u8, &str, Outcome)> = vec![
        (1, "gradients and HVPs match finite differences", derivatives()),
        (2, "CG and LiSSA match a dense solve", solvers()),
        (3, "influence ranks agree with leave-one-out", loo_consistency()),
    ];
    let (report, secs) = run_fixture(&first);
    results.push((4, "noise detection on the reference fixture", detection(&report, secs)));
    results.push((5, "cleaning and retraining improves accuracy", retraining(&report)));
    results.push((6, "both methods beat the random baseline", separation(&report)));
    run_fixture(&second);
    results.push((7, "repeated runs are byte-identical", determinism(&first, &second)));
    results.push((8, "zero noise and no cleaning reproduce the baseline", pipeline_identity()));

    let mut failed = 0;
    for (n, name, o) in &results {
        println!("[{n}] {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} acceptance criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
