//! Labeled code corpora: JSON Lines I/O, lexing, hashed features and
//! synthetic label noise.

mod features;
mod lexer;
mod noise;
pub mod synth;

pub use features::{featurize, stable_hash, FeatureVector, DEFAULT_DIM};
pub use lexer::{tokenize, tokenize_with_diagnostics, Lexed};
pub use noise::{inject_noise, per_class_noise_count};

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// One labeled code snippet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub id: String,
    pub source_text: String,
    pub label: usize,
    /// The label before synthetic noise was injected. Present iff the
    /// sample is ground-truth noise.
    pub original_label: Option<usize>,
    pub split: Split,
}

impl Sample {
    pub fn new(id: impl Into<String>, source_text: impl Into<String>, label: usize, split: Split) -> Self {
        Sample {
            id: id.into(),
            source_text: source_text.into(),
            label,
            original_label: None,
            split,
        }
    }

    pub fn is_injected_noise(&self) -> bool {
        self.original_label.is_some()
    }
}

/// On-disk form of a sample. Field order fixes the serialized key order.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: String,
    code: String,
    label: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    original_label: Option<i64>,
}

/// An ordered collection of samples sharing one label space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    samples: Vec<Sample>,
    num_classes: usize,
    label_names: Vec<String>,
}

impl Corpus {
    /// Builds a corpus, checking id uniqueness and label ranges.
    pub fn new(samples: Vec<Sample>, num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::InvalidArgument("num_classes must be positive".into()));
        }
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::DuplicateId(s.id.clone()));
            }
            for label in std::iter::once(s.label).chain(s.original_label) {
                if label >= num_classes {
                    return Err(Error::LabelOutOfRange {
                        id: s.id.clone(),
                        label,
                        num_classes,
                    });
                }
            }
        }
        Ok(Corpus {
            samples,
            num_classes,
            label_names: (0..num_classes).map(|c| c.to_string()).collect(),
        })
    }

    pub fn with_label_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.num_classes {
            return Err(Error::InvalidArgument(format!(
                "{} label names given for {} classes",
                names.len(),
                self.num_classes
            )));
        }
        self.label_names = names;
        Ok(self)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Sample> {
        self.samples.iter().find(|s| s.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.samples.iter().map(|s| s.id.as_str())
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Sample counts per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    /// Ids of samples carrying an `original_label`, in corpus order.
    pub fn injected_noise_ids(&self) -> Vec<String> {
        self.samples
            .iter()
            .filter(|s| s.is_injected_noise())
            .map(|s| s.id.clone())
            .collect()
    }

    pub(crate) fn samples_mut(&mut self) -> &mut [Sample] {
        &mut self.samples
    }

    pub(crate) fn with_samples(&self, samples: Vec<Sample>) -> Corpus {
        Corpus {
            samples,
            num_classes: self.num_classes,
            label_names: self.label_names.clone(),
        }
    }

    /// Serializes to JSON Lines, one object per sample, `\n`-terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            let rec = Record {
                id: s.id.clone(),
                code: s.source_text.clone(),
                label: s.label as i64,
                original_label: s.original_label.map(|l| l as i64),
            };
            out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

/// Loads a JSON Lines corpus. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn load_corpus(path: impl AsRef<Path>, num_classes: usize, split: Split) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, num_classes, split).map_err(|e| match e {
        Error::MalformedLine { line, message, .. } => Error::MalformedLine {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

/// Parses JSON Lines text. `num_classes == 0` infers the class count as
/// one more than the largest label seen.
pub fn parse_corpus(text: &str, num_classes: usize, split: Split) -> Result<Corpus> {
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| Error::MalformedLine {
            path: "<memory>".into(),
            line: i + 1,
            message,
        };
        let rec: Record = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        let label = to_class(rec.label).ok_or_else(|| malformed(format!("negative label {}", rec.label)))?;
        let original_label = match rec.original_label {
            Some(l) => Some(to_class(l).ok_or_else(|| malformed(format!("negative original_label {l}")))?),
            None => None,
        };
        samples.push(Sample {
            id: rec.id,
            source_text: rec.code,
            label,
            original_label,
            split,
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let num_classes = if num_classes == 0 {
        samples
            .iter()
            .flat_map(|s| std::iter::once(s.label).chain(s.original_label))
            .max()
            .unwrap_or(0)
            + 1
    } else {
        num_classes
    };
    Corpus::new(samples, num_classes)
}

fn to_class(label: i64) -> Option<usize> {
    usize::try_from(label).ok()
}
