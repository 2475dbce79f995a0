use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMethod {
    If,
    TracIn,
    Loo,
}

impl fmt::Display for ScoreMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreMethod::If => "if",
            ScoreMethod::TracIn => "tracin",
            ScoreMethod::Loo => "loo",
        })
    }
}

impl FromStr for ScoreMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "if" => Ok(ScoreMethod::If),
            "tracin" => Ok(ScoreMethod::TracIn),
            "loo" => Ok(ScoreMethod::Loo),
            other => Err(Error::InvalidArgument(format!("unknown scoring method `{other}`"))),
        }
    }
}

/// One training sample's aggregated score and its position in the
/// ascending order (rank 1 = lowest score = most suspicious).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceRecord {
    pub train_id: String,
    pub method: ScoreMethod,
    pub score: f64,
    pub rank: usize,
}

/// Sorts ascending by score, ties by ascending id, and assigns ranks 1..n.
pub fn rank_records<I, S>(method: ScoreMethod, scores: I) -> Result<Vec<InfluenceRecord>>
where
    I: IntoIterator<Item = (S, f64)>,
    S: Into<String>,
{
    let mut rows: Vec<(String, f64)> = scores.into_iter().map(|(id, s)| (id.into(), s)).collect();
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no scores to rank".into()));
    }
    if let Some((id, _)) = rows.iter().find(|(_, s)| s.is_nan()) {
        return Err(Error::NanScore(id.clone()));
    }
    rows.sort_by(|a, b| match a.1.total_cmp(&b.1) {
        Ordering::Equal => a.0.cmp(&b.0),
        o => o,
    });
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0 && w[0].1 == w[1].1) {
        return Err(Error::DuplicateId(w[0].0.clone()));
    }
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, (train_id, score))| InfluenceRecord {
            train_id,
            method,
            score,
            rank: i + 1,
        })
        .collect())
}

fn quote(id: &str) -> String {
    if id.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", id.replace('"', "\"\""))
    } else {
        id.to_string()
    }
}

pub const SCORES_HEADER: &str = "id,method,score,rank";

/// CSV with header `id,method,score,rank`, rows in rank order, scores in
/// scientific notation with 17 significant digits.
pub fn scores_to_csv(records: &[InfluenceRecord]) -> String {
    let mut out = String::from(SCORES_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!("{},{},{:.16e},{}\n", quote(&r.train_id), r.method, r.score, r.rank));
    }
    out
}

/// Splits one CSV line, honouring double-quoted fields.
fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut in_quotes = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, in_quotes) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', true) => in_quotes = false,
            ('"', false) if cur.is_empty() => in_quotes = true,
            (',', false) => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

pub fn scores_from_csv(text: &str) -> Result<Vec<InfluenceRecord>> {
    let bad = |line: usize, m: &str| Error::Format {
        what: "scores CSV",
        message: format!("line {line}: {m}"),
    };
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(SCORES_HEADER) {
        return Err(bad(1, "expected header `id,method,score,rank`"));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f = split_csv_line(line);
        if f.len() != 4 {
            return Err(bad(i + 2, "expected 4 fields"));
        }
        out.push(InfluenceRecord {
            train_id: f[0].clone(),
            method: f[1].parse()?,
            score: f[2].parse().map_err(|_| bad(i + 2, "invalid score"))?,
            rank: f[3].parse().map_err(|_| bad(i + 2, "invalid rank"))?,
        });
    }
    if out.iter().enumerate().any(|(i, r)| r.rank != i + 1) {
        return Err(Error::Format {
            what: "scores CSV",
            message: "rows are not in rank order".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn order(recs: &[InfluenceRecord]) -> Vec<&str> {
        recs.iter().map(|r| r.train_id.as_str()).collect()
    }

    #[test]
    fn ascending_by_score() {
        let r = rank_records(ScoreMethod::If, [("a", -3.0), ("b", 0.5), ("c", -1.0)]).unwrap();
        assert_eq!(order(&r), ["a", "c", "b"]);
        assert_eq!(r.iter().map(|x| x.rank).collect::<Vec<_>>(), [1, 2, 3]);
    }

    #[test]
    fn ties_broken_by_id() {
        let r = rank_records(ScoreMethod::TracIn, [("b", 1.0), ("a", 1.0)]).unwrap();
        assert_eq!(order(&r), ["a", "b"]);
    }

    #[test]
    fn single_entry() {
        let r = rank_records(ScoreMethod::Loo, [("only", 7.0)]).unwrap();
        assert_eq!(r[0].rank, 1);
    }

    #[test]
    fn nan_rejected_with_id() {
        let err = rank_records(ScoreMethod::If, [("a", 1.0), ("bad", f64::NAN)]).unwrap_err();
        assert!(matches!(err, Error::NanScore(id) if id == "bad"));
        assert!(rank_records::<_, String>(ScoreMethod::If, []).is_err());
    }

    #[test]
    fn csv_layout() {
        let r = rank_records(ScoreMethod::If, [("x", 0.1), ("y,z", -2.0)]).unwrap();
        let csv = scores_to_csv(&r);
        assert_eq!(
            csv,
            "id,method,score,rank\n\"y,z\",if,-2.0000000000000000e0,1\nx,if,1.0000000000000001e-1,2\n"
        );
        assert_eq!(scores_from_csv(&csv).unwrap(), r);
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(scores in prop::collection::vec(any::<f64>().prop_filter("no NaN", |x| !x.is_nan()), 1..30)) {
            let rows: Vec<(String, f64)> = scores.iter().enumerate().map(|(i, &s)| (format!("id{i}"), s)).collect();
            let recs = rank_records(ScoreMethod::TracIn, rows).unwrap();
            prop_assert_eq!(scores_from_csv(&scores_to_csv(&recs)).unwrap(), recs.clone());
            prop_assert!(recs.windows(2).all(|w| w[0].score <= w[1].score));
        }
    }
}
