//! Parameter elicitation from sequential yes/no answers.
//!
//! Respondents are split between two question orders. TUR answers give
//! `P(U+|T+)` and `P(R+|U±,T+)`; TRU answers give `P(R+|T+)` and
//! `P(U+|R±,T+)`. Conditionals are always computed inside the group that
//! asked the questions in that order.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::hilbert::Outcome;
use crate::model::{predict_sequence_prob, Dimension, ModelError, QueryModel, RelevanceParams};

/// Width of the band outside `[-1, 1]` that is clamped instead of rejected.
pub const COS_CLAMP_EPS: f64 = 1e-6;

/// `u` or `r` this close to 0 or 1 leaves the phase unidentifiable.
pub const DEGENERATE_TOL: f64 = 1e-9;

pub const SIGNIFICANCE_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("query {query_id}: no {group} records")]
    EmptyGroup {
        query_id: String,
        group: QuestionOrder,
    },
    #[error("probability {0} is not available")]
    MissingProbability(&'static str),
    #[error("model infeasible: cos(theta_r) = {cos_theta_raw:.6} lies outside [-1, 1]")]
    InfeasibleModel { cos_theta_raw: f64 },
    #[error("respondent {respondent_id} answered query {query_id} more than once")]
    DuplicateRespondent {
        respondent_id: String,
        query_id: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Order in which the three questions were asked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum QuestionOrder {
    #[serde(rename = "TUR")]
    Tur,
    #[serde(rename = "TRU")]
    Tru,
}

impl QuestionOrder {
    pub fn dimensions(self) -> [Dimension; 3] {
        use Dimension::*;
        match self {
            QuestionOrder::Tur => [Topicality, Understandability, Reliability],
            QuestionOrder::Tru => [Topicality, Reliability, Understandability],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionOrder::Tur => "TUR",
            QuestionOrder::Tru => "TRU",
        }
    }
}

impl fmt::Display for QuestionOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown sequence tag {0:?} (expected TUR or TRU)")]
pub struct UnknownSequenceTag(pub String);

impl FromStr for QuestionOrder {
    type Err = UnknownSequenceTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "TUR" => Ok(QuestionOrder::Tur),
            "TRU" => Ok(QuestionOrder::Tru),
            _ => Err(UnknownSequenceTag(s.to_string())),
        }
    }
}

/// One respondent's three answers, in the order they were asked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseRecord {
    pub respondent_id: String,
    pub query_id: String,
    pub sequence: QuestionOrder,
    pub answers: [bool; 3],
}

impl ResponseRecord {
    /// The answer given for `dim`, wherever it fell in the sequence.
    pub fn answer(&self, dim: Dimension) -> bool {
        let pos = self
            .sequence
            .dimensions()
            .iter()
            .position(|&d| d == dim)
            .expect("every order asks all three dimensions");
        self.answers[pos]
    }

    pub fn outcomes(&self) -> [(Dimension, Outcome); 3] {
        let dims = self.sequence.dimensions();
        let o = |b: bool| {
            if b {
                Outcome::Positive
            } else {
                Outcome::Negative
            }
        };
        [
            (dims[0], o(self.answers[0])),
            (dims[1], o(self.answers[1])),
            (dims[2], o(self.answers[2])),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResponseDataset {
    records: Vec<ResponseRecord>,
}

impl ResponseDataset {
    pub fn new(records: Vec<ResponseRecord>) -> Result<Self, EstimationError> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert((r.respondent_id.as_str(), r.query_id.as_str())) {
                return Err(EstimationError::DuplicateRespondent {
                    respondent_id: r.respondent_id.clone(),
                    query_id: r.query_id.clone(),
                });
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[ResponseRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Query ids in order of first appearance.
    pub fn query_ids(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.records
            .iter()
            .filter(|r| seen.insert(r.query_id.as_str()))
            .map(|r| r.query_id.clone())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub successes: u64,
    pub trials: u64,
}

/// A probability, with the counts it came from when it was measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub counts: Option<Counts>,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            counts: None,
        }
    }

    /// `None` when there were no trials.
    pub fn from_counts(successes: u64, trials: u64) -> Option<Self> {
        (trials > 0).then(|| Self {
            value: successes as f64 / trials as f64,
            counts: Some(Counts { successes, trials }),
        })
    }
}

/// Empirical sequential probabilities for one query.
///
/// `None` marks a conditional whose conditioning event never occurred (or
/// that a probability document left out).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequentialProbabilities {
    pub query_id: String,
    /// Pooled over both groups.
    pub p_t_pos: Option<Estimate>,
    pub p_t_pos_tur: Option<Estimate>,
    pub p_t_pos_tru: Option<Estimate>,
    pub p_u_pos_given_t_pos: Option<Estimate>,
    pub p_r_pos_given_u_pos_t_pos: Option<Estimate>,
    pub p_r_pos_given_u_neg_t_pos: Option<Estimate>,
    pub p_r_pos_given_t_pos: Option<Estimate>,
    pub p_u_pos_given_r_pos_t_pos: Option<Estimate>,
    pub p_u_pos_given_r_neg_t_pos: Option<Estimate>,
}

fn val(e: &Option<Estimate>) -> Option<f64> {
    e.map(|e| e.value)
}

/// `P(event) · P(x | event)`; zero when the event itself has probability zero.
fn joint(event: Option<f64>, conditional: &Option<Estimate>) -> Option<f64> {
    match event? {
        0.0 => Some(0.0),
        p => Some(p * val(conditional)?),
    }
}

impl SequentialProbabilities {
    pub fn empty(query_id: impl Into<String>) -> Self {
        Self {
            query_id: query_id.into(),
            p_t_pos: None,
            p_t_pos_tur: None,
            p_t_pos_tru: None,
            p_u_pos_given_t_pos: None,
            p_r_pos_given_u_pos_t_pos: None,
            p_r_pos_given_u_neg_t_pos: None,
            p_r_pos_given_t_pos: None,
            p_u_pos_given_r_pos_t_pos: None,
            p_u_pos_given_r_neg_t_pos: None,
        }
    }

    /// TUR share of `T+`, falling back to the pooled value.
    fn t_tur(&self) -> Option<f64> {
        val(&self.p_t_pos_tur).or(val(&self.p_t_pos))
    }

    fn t_tru(&self) -> Option<f64> {
        val(&self.p_t_pos_tru).or(val(&self.p_t_pos))
    }

    /// `P(U+,T+)` in the TUR group.
    pub fn p_u_pos_t_pos(&self) -> Option<f64> {
        joint(self.t_tur(), &self.p_u_pos_given_t_pos)
    }

    pub fn p_u_neg_t_pos(&self) -> Option<f64> {
        Some(self.t_tur()? * (1.0 - val(&self.p_u_pos_given_t_pos)?))
    }

    /// `P(R+,T+)` in the TRU group: the direct route to `R+`.
    pub fn p_r_pos_t_pos(&self) -> Option<f64> {
        joint(self.t_tru(), &self.p_r_pos_given_t_pos)
    }

    pub fn p_r_neg_t_pos(&self) -> Option<f64> {
        Some(self.t_tru()? * (1.0 - val(&self.p_r_pos_given_t_pos)?))
    }

    pub fn p_r_pos_u_pos_t_pos(&self) -> Option<f64> {
        joint(self.p_u_pos_t_pos(), &self.p_r_pos_given_u_pos_t_pos)
    }

    pub fn p_r_pos_u_neg_t_pos(&self) -> Option<f64> {
        joint(self.p_u_neg_t_pos(), &self.p_r_pos_given_u_neg_t_pos)
    }

    pub fn p_u_pos_r_pos_t_pos(&self) -> Option<f64> {
        joint(self.p_r_pos_t_pos(), &self.p_u_pos_given_r_pos_t_pos)
    }

    pub fn p_u_pos_r_neg_t_pos(&self) -> Option<f64> {
        joint(self.p_r_neg_t_pos(), &self.p_u_pos_given_r_neg_t_pos)
    }
}

/// The probabilities a model would produce with infinitely many respondents
/// in each group.
pub fn model_probabilities(model: &QueryModel) -> Result<SequentialProbabilities, EstimationError> {
    use Dimension::*;
    use Outcome::*;

    let p = |seq: &[(Dimension, Outcome)]| predict_sequence_prob(model, seq);
    let ratio = |num: f64, den: f64| (den > 0.0).then(|| Estimate::exact(num / den));
    let t = p(&[(Topicality, Positive)])?;
    let tu = p(&[(Topicality, Positive), (Understandability, Positive)])?;
    let tun = p(&[(Topicality, Positive), (Understandability, Negative)])?;
    let tr = p(&[(Topicality, Positive), (Reliability, Positive)])?;
    let trn = p(&[(Topicality, Positive), (Reliability, Negative)])?;
    let tur = p(&[
        (Topicality, Positive),
        (Understandability, Positive),
        (Reliability, Positive),
    ])?;
    let tunr = p(&[
        (Topicality, Positive),
        (Understandability, Negative),
        (Reliability, Positive),
    ])?;
    let tru = p(&[
        (Topicality, Positive),
        (Reliability, Positive),
        (Understandability, Positive),
    ])?;
    let trnu = p(&[
        (Topicality, Positive),
        (Reliability, Negative),
        (Understandability, Positive),
    ])?;
    Ok(SequentialProbabilities {
        query_id: model.query_id().to_string(),
        p_t_pos: Some(Estimate::exact(t)),
        p_t_pos_tur: Some(Estimate::exact(t)),
        p_t_pos_tru: Some(Estimate::exact(t)),
        p_u_pos_given_t_pos: ratio(tu, t),
        p_r_pos_given_u_pos_t_pos: ratio(tur, tu),
        p_r_pos_given_u_neg_t_pos: ratio(tunr, tun),
        p_r_pos_given_t_pos: ratio(tr, t),
        p_u_pos_given_r_pos_t_pos: ratio(tru, tr),
        p_u_pos_given_r_neg_t_pos: ratio(trnu, trn),
    })
}

/// Counts the records of one query into sequential probabilities.
pub fn aggregate(
    dataset: &ResponseDataset,
    query_id: &str,
) -> Result<SequentialProbabilities, EstimationError> {
    use Dimension::*;

    let records: Vec<_> = dataset
        .records()
        .iter()
        .filter(|r| r.query_id == query_id)
        .collect();
    let group = |order: QuestionOrder| -> Result<Vec<&ResponseRecord>, EstimationError> {
        let g: Vec<_> = records
            .iter()
            .copied()
            .filter(|r| r.sequence == order)
            .collect();
        if g.is_empty() {
            return Err(EstimationError::EmptyGroup {
                query_id: query_id.to_string(),
                group: order,
            });
        }
        Ok(g)
    };
    let tur = group(QuestionOrder::Tur)?;
    let tru = group(QuestionOrder::Tru)?;

    let count = |g: &[&ResponseRecord], pred: &dyn Fn(&ResponseRecord) -> bool| {
        g.iter().filter(|r| pred(r)).count() as u64
    };
    let t_pos = |r: &ResponseRecord| r.answer(Topicality);

    let tur_t = count(&tur, &t_pos);
    let tru_t = count(&tru, &t_pos);
    let tur_tu = count(&tur, &|r| t_pos(r) && r.answer(Understandability));
    let tur_tun = tur_t - tur_tu;
    let tur_tur = count(&tur, &|r| {
        t_pos(r) && r.answer(Understandability) && r.answer(Reliability)
    });
    let tur_tunr = count(&tur, &|r| {
        t_pos(r) && !r.answer(Understandability) && r.answer(Reliability)
    });
    let tru_tr = count(&tru, &|r| t_pos(r) && r.answer(Reliability));
    let tru_trn = tru_t - tru_tr;
    let tru_tru = count(&tru, &|r| {
        t_pos(r) && r.answer(Reliability) && r.answer(Understandability)
    });
    let tru_trnu = count(&tru, &|r| {
        t_pos(r) && !r.answer(Reliability) && r.answer(Understandability)
    });

    Ok(SequentialProbabilities {
        query_id: query_id.to_string(),
        p_t_pos: Estimate::from_counts(tur_t + tru_t, (tur.len() + tru.len()) as u64),
        p_t_pos_tur: Estimate::from_counts(tur_t, tur.len() as u64),
        p_t_pos_tru: Estimate::from_counts(tru_t, tru.len() as u64),
        p_u_pos_given_t_pos: Estimate::from_counts(tur_tu, tur_t),
        p_r_pos_given_u_pos_t_pos: Estimate::from_counts(tur_tur, tur_tu),
        p_r_pos_given_u_neg_t_pos: Estimate::from_counts(tur_tunr, tur_tun),
        p_r_pos_given_t_pos: Estimate::from_counts(tru_tr, tru_t),
        p_u_pos_given_r_pos_t_pos: Estimate::from_counts(tru_tru, tru_tr),
        p_u_pos_given_r_neg_t_pos: Estimate::from_counts(tru_trnu, tru_trn),
    })
}

fn check_probability(name: &str, p: f64) -> Result<(), EstimationError> {
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(EstimationError::Domain(format!(
            "{name} must be a probability in [0, 1], got {p}"
        )));
    }
    Ok(())
}

/// `t = √P(T+)`
pub fn fit_t(p_t_pos: f64) -> Result<f64, EstimationError> {
    check_probability("P(T+)", p_t_pos)?;
    Ok(p_t_pos.sqrt())
}

/// `u = √P(U+|T+)`
pub fn fit_u(p_u_pos_given_t_pos: f64) -> Result<f64, EstimationError> {
    check_probability("P(U+|T+)", p_u_pos_given_t_pos)?;
    Ok(p_u_pos_given_t_pos.sqrt())
}

/// `r = √P(R+|T+)`, measured in the TRU group.
pub fn fit_r(p_r_pos_given_t_pos: f64) -> Result<f64, EstimationError> {
    check_probability("P(R+|T+)", p_r_pos_given_t_pos)?;
    Ok(p_r_pos_given_t_pos.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaFit {
    /// Radians, in `[0, π]`.
    pub theta_r: f64,
    /// Before clamping into `[-1, 1]`.
    pub cos_theta_raw: f64,
    /// `u` or `r` sits at 0 or 1, so `θ_r` is set to 0 and carries no information.
    pub degenerate: bool,
}

/// Inverts `|⟨U+|R+⟩|² = (ur)² + (1−u²)(1−r²) + 2ur√((1−u²)(1−r²))·cos θ_r`
/// for the phase, given `q = P(R+|U+,T+)`.
pub fn fit_theta(u: f64, r: f64, q: f64) -> Result<ThetaFit, EstimationError> {
    check_probability("u", u)?;
    check_probability("r", r)?;
    check_probability("P(R+|U+,T+)", q)?;
    let at_edge = |x: f64| !(DEGENERATE_TOL..=1.0 - DEGENERATE_TOL).contains(&x);
    if at_edge(u) || at_edge(r) {
        return Ok(ThetaFit {
            theta_r: 0.0,
            cos_theta_raw: 1.0,
            degenerate: true,
        });
    }
    let (u2, r2) = (u * u, r * r);
    let rest = (1.0 - u2) * (1.0 - r2);
    let cos_raw = (q - u2 * r2 - rest) / (2.0 * u * r * rest.sqrt());
    if cos_raw.abs() > 1.0 + COS_CLAMP_EPS {
        return Err(EstimationError::InfeasibleModel {
            cos_theta_raw: cos_raw,
        });
    }
    Ok(ThetaFit {
        theta_r: cos_raw.clamp(-1.0, 1.0).acos(),
        cos_theta_raw: cos_raw,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: QueryModel,
    pub cos_theta_raw: f64,
    pub feasible: bool,
    pub degenerate_phase: bool,
    /// Measured `P(U+,R+,T+)` minus the model's prediction for the TRU path.
    pub residual_tru_third_step: Option<f64>,
    pub notes: Vec<String>,
}

fn need(e: &Option<Estimate>, name: &'static str) -> Result<f64, EstimationError> {
    val(e).ok_or(EstimationError::MissingProbability(name))
}

/// Runs the three-step elicitation on aggregated probabilities.
pub fn fit_model(agg: &SequentialProbabilities) -> Result<FitReport, EstimationError> {
    use Dimension::*;
    use Outcome::Positive;

    let t = fit_t(need(&agg.p_t_pos, "P(T+)")?)?;
    let u = fit_u(need(&agg.p_u_pos_given_t_pos, "P(U+|T+)")?)?;
    let r = fit_r(need(&agg.p_r_pos_given_t_pos, "P(R+|T+)")?)?;
    let q = need(&agg.p_r_pos_given_u_pos_t_pos, "P(R+|U+,T+)")?;
    let theta = fit_theta(u, r, q)?;

    let params = RelevanceParams::new(t, u, r, theta.theta_r)?;
    let model = QueryModel::new(
        agg.query_id.clone(),
        params,
        "three-step elicitation from sequential probabilities",
    )?;

    let mut notes = Vec::new();
    if theta.degenerate {
        notes.push("u or r is 0 or 1: theta_r is unidentifiable and set to 0".to_string());
    } else {
        notes.push("only cos(theta_r) is identified; theta_r reported in [0, 180] deg".to_string());
    }
    if theta.cos_theta_raw.abs() > 1.0 {
        notes.push(format!(
            "cos(theta_r) = {:.8} clamped into [-1, 1]",
            theta.cos_theta_raw
        ));
    }

    let residual = match agg.p_u_pos_r_pos_t_pos() {
        Some(measured) => {
            let predicted = predict_sequence_prob(
                &model,
                &[
                    (Topicality, Positive),
                    (Reliability, Positive),
                    (Understandability, Positive),
                ],
            )?;
            Some(measured - predicted)
        }
        None => None,
    };

    Ok(FitReport {
        model,
        cos_theta_raw: theta.cos_theta_raw,
        feasible: true,
        degenerate_phase: theta.degenerate,
        residual_tru_third_step: residual,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub significant: bool,
}

/// Pearson chi-square test of `k1/n1 = k2/n2` on the 2×2 table, one degree
/// of freedom, no continuity correction.
pub fn chi_square_two_proportions(
    k1: u64,
    n1: u64,
    k2: u64,
    n2: u64,
) -> Result<ChiSquareResult, EstimationError> {
    if n1 == 0 || n2 == 0 {
        return Err(EstimationError::Domain(
            "both groups need at least one trial".into(),
        ));
    }
    if k1 > n1 || k2 > n2 {
        return Err(EstimationError::Domain(format!(
            "successes exceed trials ({k1}/{n1}, {k2}/{n2})"
        )));
    }
    let (a, b, c, d) = (k1 as f64, (n1 - k1) as f64, k2 as f64, (n2 - k2) as f64);
    let (n1, n2) = (n1 as f64, n2 as f64);
    let (yes, no) = (a + c, b + d);
    let statistic = if yes == 0.0 || no == 0.0 {
        0.0
    } else {
        let cross = a * d - b * c;
        (n1 + n2) * cross * cross / (n1 * n2 * yes * no)
    };
    // Survival function of chi-square(1): P(X > x) = erfc(√(x/2)).
    let p_value = libm::erfc((statistic / 2.0).sqrt()).clamp(0.0, 1.0);
    Ok(ChiSquareResult {
        statistic,
        p_value,
        alpha: SIGNIFICANCE_ALPHA,
        significant: p_value < SIGNIFICANCE_ALPHA,
    })
}
