//! File formats: response CSV, model documents and probability documents.
//!
//! Response CSV header is
//! `respondent_id,query_id,sequence,answer1,answer2,answer3`, with `TUR` or
//! `TRU` sequences and `yes`/`no` answers (case-insensitive). Model and
//! probability documents are JSON. Angles are stored in degrees.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::{
    Estimate, QuestionOrder, ResponseDataset, ResponseRecord, SequentialProbabilities,
};
use crate::model::{ModelError, QueryModel, RelevanceParams};

pub const RESPONSE_HEADER: [&str; 6] = [
    "respondent_id",
    "query_id",
    "sequence",
    "answer1",
    "answer2",
    "answer3",
];

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: unknown sequence tag {tag:?} (expected TUR or TRU)")]
    UnknownSequenceTag { line: u64, tag: String },
    #[error("line {line}: respondent {respondent_id} already answered query {query_id}")]
    DuplicateRespondent {
        line: u64,
        respondent_id: String,
        query_id: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Write(#[from] std::io::Error),
}

fn open(path: &Path) -> Result<File, FormatError> {
    File::open(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_answer(field: &str, line: u64, column: &str) -> Result<bool, FormatError> {
    match field.trim().to_ascii_lowercase().as_str() {
        "yes" => Ok(true),
        "no" => Ok(false),
        other => Err(FormatError::Parse {
            line,
            message: format!("{column}: expected yes or no, got {other:?}"),
        }),
    }
}

pub fn read_responses<R: Read>(reader: R) -> Result<ResponseDataset, FormatError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| FormatError::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if !header.is_empty() && header.iter().ne(RESPONSE_HEADER) {
        return Err(FormatError::Parse {
            line: 1,
            message: format!("expected header {}", RESPONSE_HEADER.join(",")),
        });
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for row in rdr.records() {
        let row = row.map_err(|e| FormatError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let sequence: QuestionOrder =
            row[2]
                .parse()
                .map_err(|_| FormatError::UnknownSequenceTag {
                    line,
                    tag: row[2].to_string(),
                })?;
        let (respondent_id, query_id) = (row[0].to_string(), row[1].to_string());
        if respondent_id.is_empty() || query_id.is_empty() {
            return Err(FormatError::Parse {
                line,
                message: "respondent_id and query_id must not be empty".into(),
            });
        }
        if !seen.insert((respondent_id.clone(), query_id.clone())) {
            return Err(FormatError::DuplicateRespondent {
                line,
                respondent_id,
                query_id,
            });
        }
        let answers = [
            parse_answer(&row[3], line, "answer1")?,
            parse_answer(&row[4], line, "answer2")?,
            parse_answer(&row[5], line, "answer3")?,
        ];
        records.push(ResponseRecord {
            respondent_id,
            query_id,
            sequence,
            answers,
        });
    }
    Ok(ResponseDataset::new(records).expect("uniqueness checked while reading"))
}

pub fn load_responses(path: &Path) -> Result<ResponseDataset, FormatError> {
    read_responses(open(path)?)
}

pub fn write_responses<W: Write>(writer: W, dataset: &ResponseDataset) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESPONSE_HEADER)?;
    let yn = |b: bool| if b { "yes" } else { "no" };
    for r in dataset.records() {
        w.write_record([
            r.respondent_id.as_str(),
            r.query_id.as_str(),
            r.sequence.as_str(),
            yn(r.answers[0]),
            yn(r.answers[1]),
            yn(r.answers[2]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fitted or hand-written parameters for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub query_id: String,
    pub t: f64,
    pub u: f64,
    pub r: f64,
    pub theta_r_deg: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub provenance: String,
}

impl ModelDocument {
    pub fn from_model(model: &QueryModel) -> Self {
        let p = model.params();
        Self {
            query_id: model.query_id().to_string(),
            t: p.t(),
            u: p.u(),
            r: p.r(),
            theta_r_deg: p.theta_r_deg(),
            provenance: model.provenance().to_string(),
        }
    }

    pub fn to_model(&self) -> Result<QueryModel, FormatError> {
        if !(0.0..=180.0).contains(&self.theta_r_deg) {
            return Err(FormatError::Schema(format!(
                "field `theta_r_deg` must lie in [0, 180], got {}",
                self.theta_r_deg
            )));
        }
        let params = RelevanceParams::new(self.t, self.u, self.r, self.theta_r_deg.to_radians())
            .map_err(|e| match e {
                ModelError::InvalidParams {
                    name,
                    value,
                    reason,
                } => FormatError::Schema(format!("field `{name}` = {value}: {reason}")),
                other => FormatError::Schema(other.to_string()),
            })?;
        QueryModel::new(self.query_id.clone(), params, self.provenance.clone())
            .map_err(|_| FormatError::Schema("field `query_id` must not be empty".into()))
    }
}

pub fn read_model<R: Read>(reader: R) -> Result<QueryModel, FormatError> {
    let doc: ModelDocument =
        serde_json::from_reader(reader).map_err(|e| FormatError::Schema(e.to_string()))?;
    doc.to_model()
}

pub fn load_model(path: &Path) -> Result<QueryModel, FormatError> {
    read_model(open(path)?)
}

pub fn write_model<W: Write>(mut writer: W, model: &QueryModel) -> Result<(), FormatError> {
    serde_json::to_writer_pretty(&mut writer, &ModelDocument::from_model(model))
        .map_err(|e| FormatError::Schema(e.to_string()))?;
    writeln!(writer)?;
    Ok(())
}

/// Pre-aggregated probabilities for fitting without raw responses.
///
/// Each conditional may instead be given as its joint probability (the
/// field without `given`); supplying both forms is an error. The TRU share
/// of `T+` is taken from `p_t_pos_tru`, or recovered from
/// `p_r_pos_t_pos / p_r_pos_given_t_pos` when both are present, and
/// otherwise defaults to `p_t_pos`. The TUR share defaults to `p_t_pos`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbabilityDocument {
    pub query_id: String,
    pub p_t_pos: f64,
    pub p_t_pos_tur: Option<f64>,
    pub p_t_pos_tru: Option<f64>,
    pub p_u_pos_given_t_pos: Option<f64>,
    pub p_u_pos_t_pos: Option<f64>,
    pub p_r_pos_given_t_pos: Option<f64>,
    pub p_r_pos_t_pos: Option<f64>,
    pub p_r_pos_given_u_pos_t_pos: Option<f64>,
    pub p_r_pos_u_pos_t_pos: Option<f64>,
    pub p_r_pos_given_u_neg_t_pos: Option<f64>,
    pub p_r_pos_u_neg_t_pos: Option<f64>,
    pub p_u_pos_given_r_pos_t_pos: Option<f64>,
    pub p_u_pos_r_pos_t_pos: Option<f64>,
    pub p_u_pos_given_r_neg_t_pos: Option<f64>,
    pub p_u_pos_r_neg_t_pos: Option<f64>,
}

/// Slack for ratios of rounded published values that land just above 1.
const RATIO_SLACK: f64 = 1e-9;

fn check_field(name: &str, p: f64) -> Result<f64, FormatError> {
    if !(0.0..=1.0 + RATIO_SLACK).contains(&p) {
        return Err(FormatError::Schema(format!(
            "field `{name}` must be a probability in [0, 1], got {p}"
        )));
    }
    Ok(p.min(1.0))
}

fn conditional(
    name: &str,
    cond: Option<f64>,
    joint_name: &str,
    joint: Option<f64>,
    denominator: Option<f64>,
) -> Result<Option<f64>, FormatError> {
    match (cond, joint) {
        (Some(_), Some(_)) => Err(FormatError::Schema(format!(
            "give either `{name}` or `{joint_name}`, not both"
        ))),
        (Some(c), None) => check_field(name, c).map(Some),
        (None, Some(j)) => {
            check_field(joint_name, j)?;
            match denominator {
                Some(d) if d > 0.0 => check_field(name, j / d).map(Some),
                _ => Ok(None),
            }
        }
        (None, None) => Ok(None),
    }
}

impl ProbabilityDocument {
    pub fn to_probabilities(&self) -> Result<SequentialProbabilities, FormatError> {
        if self.query_id.trim().is_empty() {
            return Err(FormatError::Schema(
                "field `query_id` must not be empty".into(),
            ));
        }
        let t = check_field("p_t_pos", self.p_t_pos)?;
        let t_tur = match self.p_t_pos_tur {
            Some(x) => check_field("p_t_pos_tur", x)?,
            None => t,
        };
        let u = conditional(
            "p_u_pos_given_t_pos",
            self.p_u_pos_given_t_pos,
            "p_u_pos_t_pos",
            self.p_u_pos_t_pos,
            Some(t_tur),
        )?;

        let (t_tru, r) = match (self.p_t_pos_tru, self.p_r_pos_given_t_pos, self.p_r_pos_t_pos) {
            (Some(_), Some(_), Some(_)) => {
                return Err(FormatError::Schema(
                    "`p_t_pos_tru`, `p_r_pos_given_t_pos` and `p_r_pos_t_pos` over-determine the TRU group"
                        .into(),
                ))
            }
            (None, Some(c), Some(j)) => {
                let c = check_field("p_r_pos_given_t_pos", c)?;
                let j = check_field("p_r_pos_t_pos", j)?;
                if c == 0.0 {
                    (t, Some(0.0))
                } else {
                    (check_field("p_t_pos_tru (derived)", j / c)?, Some(c))
                }
            }
            (tru, c, j) => {
                let t_tru = match tru {
                    Some(x) => check_field("p_t_pos_tru", x)?,
                    None => t,
                };
                let r = conditional("p_r_pos_given_t_pos", c, "p_r_pos_t_pos", j, Some(t_tru))?;
                (t_tru, r)
            }
        };

        let q = conditional(
            "p_r_pos_given_u_pos_t_pos",
            self.p_r_pos_given_u_pos_t_pos,
            "p_r_pos_u_pos_t_pos",
            self.p_r_pos_u_pos_t_pos,
            u.map(|u| t_tur * u),
        )?;
        let r_given_u_neg = conditional(
            "p_r_pos_given_u_neg_t_pos",
            self.p_r_pos_given_u_neg_t_pos,
            "p_r_pos_u_neg_t_pos",
            self.p_r_pos_u_neg_t_pos,
            u.map(|u| t_tur * (1.0 - u)),
        )?;
        let u_given_r_pos = conditional(
            "p_u_pos_given_r_pos_t_pos",
            self.p_u_pos_given_r_pos_t_pos,
            "p_u_pos_r_pos_t_pos",
            self.p_u_pos_r_pos_t_pos,
            r.map(|r| t_tru * r),
        )?;
        let u_given_r_neg = conditional(
            "p_u_pos_given_r_neg_t_pos",
            self.p_u_pos_given_r_neg_t_pos,
            "p_u_pos_r_neg_t_pos",
            self.p_u_pos_r_neg_t_pos,
            r.map(|r| t_tru * (1.0 - r)),
        )?;

        let exact = |x: Option<f64>| x.map(Estimate::exact);
        Ok(SequentialProbabilities {
            query_id: self.query_id.clone(),
            p_t_pos: Some(Estimate::exact(t)),
            p_t_pos_tur: Some(Estimate::exact(t_tur)),
            p_t_pos_tru: Some(Estimate::exact(t_tru)),
            p_u_pos_given_t_pos: exact(u),
            p_r_pos_given_u_pos_t_pos: exact(q),
            p_r_pos_given_u_neg_t_pos: exact(r_given_u_neg),
            p_r_pos_given_t_pos: exact(r),
            p_u_pos_given_r_pos_t_pos: exact(u_given_r_pos),
            p_u_pos_given_r_neg_t_pos: exact(u_given_r_neg),
        })
    }
}

pub fn read_probabilities<R: Read>(reader: R) -> Result<SequentialProbabilities, FormatError> {
    let doc: ProbabilityDocument =
        serde_json::from_reader(reader).map_err(|e| FormatError::Schema(e.to_string()))?;
    doc.to_probabilities()
}

pub fn load_probabilities(path: &Path) -> Result<SequentialProbabilities, FormatError> {
    read_probabilities(open(path)?)
}
