//! Diagnostics that separate the fitted model from a classical one: Wigner
//! negativity, non-commuting observables, and law-of-total-probability
//! violation.

use serde::Serialize;

use crate::estimation::{
    chi_square_two_proportions, ChiSquareResult, Estimate, EstimationError, SequentialProbabilities,
};
use crate::hilbert::commutator;
use crate::model::{interference_term, observable, Dimension, QueryModel};

/// Entries below this count as negative.
pub const NEGATIVITY_TOL: f64 = 1e-12;

/// Commutators with a smaller Frobenius norm count as zero.
pub const COMMUTE_TOL: f64 = 1e-9;

/// Discrete 2×2 Wigner quasi-probability table of the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WignerDistribution {
    pub w: [[f64; 2]; 2],
    pub r_x: f64,
    pub r_z: f64,
}

impl WignerDistribution {
    pub fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        self.w.iter().flatten().copied()
    }
}

/// Wigner table of `√t²|T+⟩ + √(1−t²)|T−⟩` from its Bloch components.
pub fn wigner(t_squared: f64) -> Result<WignerDistribution, EstimationError> {
    if !t_squared.is_finite() || !(0.0..=1.0).contains(&t_squared) {
        return Err(EstimationError::Domain(format!(
            "t^2 must be a probability in [0, 1], got {t_squared}"
        )));
    }
    let r_x = 2.0 * (t_squared * (1.0 - t_squared)).sqrt();
    let r_z = 2.0 * t_squared - 1.0;
    let w = [
        [(1.0 + r_x + r_z) / 4.0, (1.0 - r_x + r_z) / 4.0],
        [(1.0 - r_x - r_z) / 4.0, (1.0 + r_x - r_z) / 4.0],
    ];
    Ok(WignerDistribution { w, r_x, r_z })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Negativity {
    pub has_negative: bool,
    pub min_entry: f64,
}

pub fn negativity(w: &WignerDistribution) -> Negativity {
    let min_entry = w.entries().fold(f64::INFINITY, f64::min);
    Negativity {
        has_negative: min_entry < -NEGATIVITY_TOL,
        min_entry,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommutatorEntry {
    pub pair: (Dimension, Dimension),
    pub frobenius_norm: f64,
    pub commutes: bool,
}

/// `[T̂,Û]`, `[T̂,R̂]` and `[R̂,Û]` for the model.
pub fn commutator_report(model: &QueryModel) -> Vec<CommutatorEntry> {
    use Dimension::*;
    let params = model.params();
    [
        (Topicality, Understandability),
        (Topicality, Reliability),
        (Reliability, Understandability),
    ]
    .into_iter()
    .map(|(a, b)| {
        let norm = commutator(&observable(params, a), &observable(params, b)).frobenius_norm();
        CommutatorEntry {
            pair: (a, b),
            frobenius_norm: norm,
            commutes: norm < COMMUTE_TOL,
        }
    })
    .collect()
}

/// Direct versus two-path probability of `R+` after `T+`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LtpReport {
    /// Measured `P(R+,T+)` in the TRU group.
    pub p_direct: f64,
    /// `P(R+,U+,T+) + P(R+,U−,T+)` in the TUR group.
    pub p_ltp_sum: f64,
    /// `p_direct − p_ltp_sum`
    pub delta: f64,
    /// `Int(θ_r)` predicted by the model.
    pub model_interference: f64,
    /// Direct versus two-path proportions, when counts are known.
    pub significance: Option<ChiSquareResult>,
}

pub fn ltp_report(
    agg: &SequentialProbabilities,
    model: &QueryModel,
) -> Result<LtpReport, EstimationError> {
    let p_direct = agg
        .p_r_pos_t_pos()
        .ok_or(EstimationError::MissingProbability("P(R+,T+)"))?;
    let via_pos = agg
        .p_r_pos_u_pos_t_pos()
        .ok_or(EstimationError::MissingProbability("P(R+,U+,T+)"))?;
    let via_neg = agg
        .p_r_pos_u_neg_t_pos()
        .ok_or(EstimationError::MissingProbability("P(R+,U-,T+)"))?;
    let p_ltp_sum = (via_pos + via_neg).clamp(0.0, 1.0);

    let significance = (|| {
        let direct = agg.p_r_pos_given_t_pos?.counts?;
        let tru_total = agg.p_t_pos_tru?.counts?.trials;
        let two_path = agg.p_r_pos_given_u_pos_t_pos?.counts?.successes
            + agg.p_r_pos_given_u_neg_t_pos?.counts?.successes;
        let tur_total = agg.p_t_pos_tur?.counts?.trials;
        chi_square_two_proportions(direct.successes, tru_total, two_path, tur_total).ok()
    })();

    Ok(LtpReport {
        p_direct,
        p_ltp_sum,
        delta: p_direct - p_ltp_sum,
        model_interference: interference_term(model.params()),
        significance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectCell {
    pub label: &'static str,
    pub estimate: Estimate,
    /// Against the table's baseline conditional, when both have counts.
    pub versus_baseline: Option<ChiSquareResult>,
}

/// One conditional and the same conditional after an intervening question.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectTable {
    pub baseline: EffectCell,
    pub given_positive: EffectCell,
    pub given_negative: EffectCell,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectTables {
    /// Effect of Understandability on Reliability.
    pub reliability: EffectTable,
    /// Effect of Reliability on Understandability.
    pub understandability: EffectTable,
}

fn effect_table(
    labels: [&'static str; 3],
    cells: [Option<Estimate>; 3],
) -> Result<EffectTable, EstimationError> {
    let mut out = Vec::with_capacity(3);
    for (label, cell) in labels.into_iter().zip(cells) {
        out.push((
            label,
            cell.ok_or(EstimationError::MissingProbability(label))?,
        ));
    }
    let baseline = out[0].1;
    let cell = |(label, estimate): (&'static str, Estimate), compare: bool| EffectCell {
        label,
        estimate,
        versus_baseline: if compare {
            estimate.counts.zip(baseline.counts).and_then(|(a, b)| {
                chi_square_two_proportions(a.successes, a.trials, b.successes, b.trials).ok()
            })
        } else {
            None
        },
    };
    Ok(EffectTable {
        baseline: cell(out[0], false),
        given_positive: cell(out[1], true),
        given_negative: cell(out[2], true),
    })
}

pub fn effect_tables(agg: &SequentialProbabilities) -> Result<EffectTables, EstimationError> {
    Ok(EffectTables {
        reliability: effect_table(
            ["P(R+|T+)", "P(R+|U+,T+)", "P(R+|U-,T+)"],
            [
                agg.p_r_pos_given_t_pos,
                agg.p_r_pos_given_u_pos_t_pos,
                agg.p_r_pos_given_u_neg_t_pos,
            ],
        )?,
        understandability: effect_table(
            ["P(U+|T+)", "P(U+|R+,T+)", "P(U+|R-,T+)"],
            [
                agg.p_u_pos_given_t_pos,
                agg.p_u_pos_given_r_pos_t_pos,
                agg.p_u_pos_given_r_neg_t_pos,
            ],
        )?,
    })
}
