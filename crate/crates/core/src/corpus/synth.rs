//! Template-generated C-like programs with known labels.
//!
//! Each class is a programming topic with its own pool of statement
//! templates. A program mixes several statements; with probability
//! `overlap` a statement is borrowed from a different topic, which is what
//! keeps the classes from being trivially separable. Identifier names come
//! from one shared pool so they carry no label signal.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Corpus, Sample, Split};
use crate::error::{Error, Result};

const TOPICS: [(&str, &[&str]); 6] = [
    (
        "array_stats",
        &[
            "for ($I = 0; $I < $N; $I++) $S += $A[$I];",
            "if ($A[$I] > $S) $S = $A[$I];",
            "$T = $S / $N;",
            "scanf(\"%d\", &$A[$I]);",
            "for ($I = 0; $I < $N; $I++) if ($A[$I] < $T) $S = $A[$I];",
            "$S = $S + $A[$I] * $A[$I];",
            "printf(\"%d %d\\n\", $S, $T);",
            "double avg = (double)$S / $N;",
        ],
    ),
    (
        "strings",
        &[
            "$N = strlen($C);",
            "if ($C[$I] >= 'a' && $C[$I] <= 'z') $C[$I] -= 32;",
            "while ($C[$I] != '\\0') $I++;",
            "strcpy($D, $C);",
            "gets($C);",
            "if ($C[$I] == ' ') $S++;",
            "putchar($C[$I]);",
            "char $D[256];",
        ],
    ),
    (
        "recursion",
        &[
            "int $F(int $N) { if ($N <= 1) return 1; return $N * $F($N - 1); }",
            "return $F($N - 1) + $F($N - 2);",
            "int $F(int $S, int $T) { if ($T == 0) return $S; return $F($T, $S % $T); }",
            "$S = $F($N);",
            "if ($N == 0) return 0;",
            "return $F($S, $T - 1) * $S;",
            "printf(\"%d\\n\", $F($N));",
        ],
    ),
    (
        "matrix",
        &[
            "for ($I = 0; $I < $N; $I++) for ($J = 0; $J < $N; $J++) $M[$I][$J] = 0;",
            "$M[$I][$J] += $A[$I] * $M[$J][$I];",
            "int $M[100][100];",
            "$T = $M[$I][$J]; $M[$I][$J] = $M[$J][$I]; $M[$J][$I] = $T;",
            "scanf(\"%d\", &$M[$I][$J]);",
            "if ($I == $J) $S += $M[$I][$J];",
            "printf(\"%d \", $M[$I][$J]);",
        ],
    ),
    (
        "sorting",
        &[
            "if ($A[$J] > $A[$J + 1]) { $T = $A[$J]; $A[$J] = $A[$J + 1]; $A[$J + 1] = $T; }",
            "for ($I = 0; $I < $N - 1; $I++) for ($J = 0; $J < $N - $I - 1; $J++)",
            "void $F(int *$S, int *$T) { int tmp = *$S; *$S = *$T; *$T = tmp; }",
            "$F(&$A[$I], &$A[$J]);",
            "while ($J >= 0 && $A[$J] > $T) { $A[$J + 1] = $A[$J]; $J--; }",
            "qsort($A, $N, sizeof(int), cmp);",
        ],
    ),
    (
        "calendar",
        &[
            "if (($S % 4 == 0 && $S % 100 != 0) || $S % 400 == 0) $T = 1;",
            "int days[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};",
            "for ($I = 1; $I < $N; $I++) $T += days[$I - 1];",
            "$T = ($T + $S) % 7;",
            "scanf(\"%d %d %d\", &$S, &$N, &$T);",
            "if ($N > 2 && leap) $T++;",
        ],
    ),
];

const SHARED: [&str; 8] = [
    "int $I, $J, $N, $S = 0, $T = 0;",
    "scanf(\"%d\", &$N);",
    "printf(\"%d\\n\", $S);",
    "int $A[1000];",
    "char $C[1000];",
    "$I = 0;",
    "return 0;",
    "if ($N < 0) $N = -$N;",
];

const SCALARS: [&str; 12] = ["i", "j", "k", "n", "m", "x", "y", "t", "cnt", "num", "len", "res"];
const ARRAYS: [&str; 6] = ["a", "arr", "b", "num", "data", "buf"];
const STRINGS: [&str; 5] = ["s", "str", "line", "word", "text"];
const MATRICES: [&str; 4] = ["mat", "g", "m", "grid"];
const FUNCS: [&str; 6] = ["f", "solve", "calc", "work", "go", "fun"];

/// Generator settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Number of classes, at most [`max_classes`].
    pub num_classes: usize,
    pub per_class: usize,
    /// Probability that a statement is drawn from a different topic.
    pub overlap: f64,
    /// Topic statements per program, inclusive range.
    pub statements: (usize, usize),
    /// Size of each topic's pool of helper-function names. Helper names are
    /// rare, so the model has to memorise them; 0 disables helpers.
    pub helper_pool: usize,
    /// Helper calls per program (ignored when `helper_pool` is 0).
    pub helpers: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_classes: 4,
            per_class: 100,
            overlap: 0.4,
            statements: (3, 6),
            helper_pool: 0,
            helpers: 0,
            seed: 0,
        }
    }
}

pub fn max_classes() -> usize {
    TOPICS.len()
}

pub fn topic_names() -> Vec<&'static str> {
    TOPICS.iter().map(|(name, _)| *name).collect()
}

/// Generates `per_class` programs for each class, interleaved by class
/// (sample `i` has label `i mod num_classes`). Ids are `{split}-{index}`.
pub fn generate(cfg: &SynthConfig, split: Split) -> Result<Corpus> {
    if cfg.num_classes < 1 || cfg.num_classes > TOPICS.len() {
        return Err(Error::InvalidArgument(format!(
            "synthetic corpora support 1..={} classes, got {}",
            TOPICS.len(),
            cfg.num_classes
        )));
    }
    if !(0.0..=1.0).contains(&cfg.overlap) || cfg.statements.0 == 0 || cfg.statements.0 > cfg.statements.1 {
        return Err(Error::InvalidArgument("invalid synthetic corpus settings".into()));
    }
    let prefix = match split {
        Split::Train => "train",
        Split::Val => "val",
        Split::Test => "test",
    };
    let stream = match split {
        Split::Train => 0,
        Split::Val => 1,
        Split::Test => 2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);

    let total = cfg.per_class * cfg.num_classes;
    let samples = (0..total)
        .map(|i| {
            let label = i % cfg.num_classes;
            let code = program(&mut rng, label, cfg);
            Sample::new(format!("{prefix}-{i:05}"), code, label, split)
        })
        .collect();
    let names = topic_names()[..cfg.num_classes]
        .iter()
        .map(|s| s.to_string())
        .collect();
    Corpus::new(samples, cfg.num_classes)?.with_label_names(names)
}

/// Convenience: train, validation and test corpora from one seed.
pub fn generate_splits(
    cfg: &SynthConfig,
    train_per_class: usize,
    val_per_class: usize,
    test_per_class: usize,
) -> Result<(Corpus, Corpus, Corpus)> {
    let with = |n| SynthConfig {
        per_class: n,
        ..cfg.clone()
    };
    Ok((
        generate(&with(train_per_class), Split::Train)?,
        generate(&with(val_per_class), Split::Val)?,
        generate(&with(test_per_class), Split::Test)?,
    ))
}

fn program(rng: &mut ChaCha8Rng, label: usize, cfg: &SynthConfig) -> String {
    let names = Names::draw(rng);
    let mut body: Vec<String> = Vec::new();
    body.push(names.fill(SHARED[0]));
    let count = rng.gen_range(cfg.statements.0..=cfg.statements.1);
    for _ in 0..count {
        let topic = if cfg.num_classes > 1 && rng.gen_bool(cfg.overlap) {
            let r = rng.gen_range(0..cfg.num_classes - 1);
            if r < label {
                r
            } else {
                r + 1
            }
        } else {
            label
        };
        let stmt = TOPICS[topic].1.choose(rng).expect("non-empty topic");
        body.push(names.fill(stmt));
        if rng.gen_bool(0.3) {
            body.push(names.fill(SHARED[1..].choose(rng).expect("non-empty")));
        }
    }
    if cfg.helper_pool > 0 {
        let prefix = &TOPICS[label].0[..3];
        for _ in 0..cfg.helpers {
            let idx = rng.gen_range(0..cfg.helper_pool);
            let at = rng.gen_range(1..=body.len());
            body.insert(at, names.fill(&format!("$S = {prefix}_{idx:03}($A, $N);")));
        }
    }
    let mut out = String::from("#include <stdio.h>\n\nint main() {\n");
    for line in body {
        out.push_str("    ");
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("    return 0;\n}\n");
    out
}

struct Names {
    pairs: Vec<(&'static str, &'static str)>,
}

impl Names {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        let scalars: Vec<&str> = SCALARS.choose_multiple(rng, 5).copied().collect();
        Names {
            pairs: vec![
                ("$I", scalars[0]),
                ("$J", scalars[1]),
                ("$N", scalars[2]),
                ("$S", scalars[3]),
                ("$T", scalars[4]),
                ("$A", ARRAYS.choose(rng).copied().unwrap_or("a")),
                ("$C", STRINGS.choose(rng).copied().unwrap_or("s")),
                ("$D", "dst"),
                ("$M", MATRICES.choose(rng).copied().unwrap_or("m")),
                ("$F", FUNCS.choose(rng).copied().unwrap_or("f")),
            ],
        }
    }

    fn fill(&self, template: &str) -> String {
        self.pairs
            .iter()
            .fold(template.to_string(), |s, (k, v)| s.replace(k, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_balanced() {
        let cfg = SynthConfig {
            per_class: 10,
            seed: 3,
            ..Default::default()
        };
        let a = generate(&cfg, Split::Train).unwrap();
        let b = generate(&cfg, Split::Train).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.class_counts(), vec![10; 4]);
        assert_eq!(a.label_names()[2], "recursion");
        let v = generate(&cfg, Split::Val).unwrap();
        assert_ne!(a.samples()[0].source_text, v.samples()[0].source_text);
        assert!(v.samples()[0].id.starts_with("val-"));
    }

    #[test]
    fn rejects_too_many_classes() {
        let cfg = SynthConfig {
            num_classes: 7,
            ..Default::default()
        };
        assert!(generate(&cfg, Split::Train).is_err());
    }

    #[test]
    fn programs_lex_cleanly() {
        let cfg = SynthConfig {
            num_classes: 6,
            per_class: 5,
            ..Default::default()
        };
        for s in generate(&cfg, Split::Test).unwrap().samples() {
            let lexed = crate::corpus::tokenize_with_diagnostics(&s.source_text);
            assert!(!lexed.unterminated, "{}", s.source_text);
            assert!(lexed.tokens.len() > 10);
        }
    }
}
