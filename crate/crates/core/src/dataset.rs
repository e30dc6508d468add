//! JSON-lines question sets.
//!
//! Every line is an object `{id, question, answers}`. In the `qald10` format
//! `question` maps language codes to text and only the English entry is kept.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    SimpleQuestions,
    Qald10,
    Nature,
}

impl DatasetFormat {
    /// Precise-answer sets are scored with Hit@1, open-ended ones with ROUGE-L.
    pub fn metric(self) -> Metric {
        match self {
            DatasetFormat::SimpleQuestions | DatasetFormat::Qald10 => Metric::HitAt1,
            DatasetFormat::Nature => Metric::RougeLF1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DatasetFormat::SimpleQuestions => "simplequestions",
            DatasetFormat::Qald10 => "qald10",
            DatasetFormat::Nature => "nature",
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simplequestions" => Ok(Self::SimpleQuestions),
            "qald10" => Ok(Self::Qald10),
            "nature" => Ok(Self::Nature),
            other => Err(format!("unknown dataset format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "hit@1")]
    HitAt1,
    #[serde(rename = "rouge-l-f1")]
    RougeLF1,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::HitAt1 => "hit@1",
            Metric::RougeLF1 => "rouge-l-f1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaItem {
    pub id: String,
    pub question: String,
    pub gold: Vec<String>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("record {record} (line {line}): {msg}")]
    Schema { record: usize, line: usize, msg: String },
    #[error("dataset I/O: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawId {
    Text(String),
    Int(i64),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawQuestion {
    Text(String),
    ByLanguage(BTreeMap<String, String>),
}

#[derive(Deserialize)]
struct RawRecord {
    id: RawId,
    question: RawQuestion,
    answers: Vec<String>,
}

pub fn load_dataset<R: BufRead>(reader: R, format: DatasetFormat) -> Result<Vec<QaItem>, DatasetError> {
    let mut items = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = items.len() + 1;
        let fail = |msg: String| DatasetError::Schema {
            record,
            line: i + 1,
            msg,
        };
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| fail(e.to_string()))?;
        let id = match raw.id {
            RawId::Text(s) => s,
            RawId::Int(n) => n.to_string(),
        };
        let question = match (format, raw.question) {
            (DatasetFormat::Qald10, RawQuestion::ByLanguage(mut by_lang)) => by_lang
                .remove("en")
                .ok_or_else(|| fail("no English (`en`) question".into()))?,
            (DatasetFormat::Qald10, RawQuestion::Text(_)) => {
                return Err(fail("qald10 questions must map language codes to text".into()))
            }
            (_, RawQuestion::Text(s)) => s,
            (_, RawQuestion::ByLanguage(_)) => return Err(fail("question must be a string in this format".into())),
        };
        if question.trim().is_empty() {
            return Err(fail("empty question".into()));
        }
        let gold: Vec<String> = raw.answers.into_iter().filter(|a| !a.trim().is_empty()).collect();
        if gold.is_empty() {
            return Err(fail("no answers".into()));
        }
        if format == DatasetFormat::Nature && gold.len() != 3 {
            warn!("record {record} ({id}): {} reference answers, expected 3", gold.len());
        }
        if !ids.insert(id.clone()) {
            return Err(fail(format!("duplicate id `{id}`")));
        }
        items.push(QaItem {
            id,
            question: question.trim().to_string(),
            gold,
        });
    }
    Ok(items)
}
