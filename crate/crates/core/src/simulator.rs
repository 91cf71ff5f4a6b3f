//! Monte Carlo sequential projective measurements.
//!
//! Every respondent draws from its own ChaCha8 stream, selected by
//! `set_stream(index)` on a generator seeded from the run seed, so a dataset
//! is a pure function of `(seed, config)` however the work is scheduled.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::estimation::{QuestionOrder, ResponseDataset, ResponseRecord};
use crate::hilbert::{prob_projection, Basis2, Ket2, Outcome};
use crate::model::{basis_kets, initial_state, QueryModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("need at least one respondent")]
    NoRespondents,
    #[error("tur_fraction must lie in [0, 1], got {0}")]
    BadFraction(f64),
    #[error("a cascade needs at least one stage")]
    NoStages,
    #[error("a cascade needs at least one shot")]
    NoShots,
}

/// Measures `state` in `basis`, returning the outcome and the collapsed state.
pub fn measure<R: Rng + ?Sized>(state: &Ket2, basis: &Basis2, rng: &mut R) -> (Outcome, Ket2) {
    let p_plus = prob_projection(state, &basis.plus());
    let outcome = if rng.random::<f64>() < p_plus {
        Outcome::Positive
    } else {
        Outcome::Negative
    };
    (outcome, basis.ket(outcome))
}

/// Asks the three questions of `sequence`, collapsing after each answer.
pub fn simulate_respondent<R: Rng + ?Sized>(
    model: &QueryModel,
    respondent_id: impl Into<String>,
    sequence: QuestionOrder,
    rng: &mut R,
) -> ResponseRecord {
    let params = model.params();
    let mut state = initial_state(params);
    let mut answers = [false; 3];
    for (slot, dim) in answers.iter_mut().zip(sequence.dimensions()) {
        let (outcome, next) = measure(&state, &basis_kets(params, dim), rng);
        *slot = outcome.is_positive();
        state = next;
    }
    ResponseRecord {
        respondent_id: respondent_id.into(),
        query_id: model.query_id().to_string(),
        sequence,
        answers,
    }
}

/// How respondents are divided between the TUR and TRU groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupSplit {
    /// Each respondent joins TUR with probability `tur_fraction`.
    #[default]
    Random,
    /// Exactly `round(n · tur_fraction)` TUR respondents, interleaved by index.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    model: QueryModel,
    n_respondents: u64,
    tur_fraction: f64,
    seed: u64,
    split: GroupSplit,
}

impl SimConfig {
    pub fn new(model: QueryModel, n_respondents: u64, seed: u64) -> Result<Self, SimError> {
        if n_respondents == 0 {
            return Err(SimError::NoRespondents);
        }
        Ok(Self {
            model,
            n_respondents,
            tur_fraction: 0.5,
            seed,
            split: GroupSplit::Random,
        })
    }

    pub fn with_tur_fraction(mut self, tur_fraction: f64) -> Result<Self, SimError> {
        if !(0.0..=1.0).contains(&tur_fraction) {
            return Err(SimError::BadFraction(tur_fraction));
        }
        self.tur_fraction = tur_fraction;
        Ok(self)
    }

    pub fn with_split(mut self, split: GroupSplit) -> Self {
        self.split = split;
        self
    }

    pub fn model(&self) -> &QueryModel {
        &self.model
    }

    pub fn n_respondents(&self) -> u64 {
        self.n_respondents
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn exact_group(&self, index: u64) -> QuestionOrder {
        let f = self.tur_fraction;
        let before = (index as f64 * f).round();
        let after = ((index + 1) as f64 * f).round();
        if after > before {
            QuestionOrder::Tur
        } else {
            QuestionOrder::Tru
        }
    }
}

/// The generator for respondent `index` of a run seeded with `seed`.
pub fn respondent_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn simulate_dataset(config: &SimConfig) -> ResponseDataset {
    let records: Vec<ResponseRecord> = (0..config.n_respondents)
        .into_par_iter()
        .map(|i| {
            let mut rng = respondent_rng(config.seed, i);
            let group = match config.split {
                GroupSplit::Random => {
                    if rng.random::<f64>() < config.tur_fraction {
                        QuestionOrder::Tur
                    } else {
                        QuestionOrder::Tru
                    }
                }
                GroupSplit::Exact => config.exact_group(i),
            };
            simulate_respondent(&config.model, format!("s{i}"), group, &mut rng)
        })
        .collect();
    ResponseDataset::new(records).expect("respondent ids are unique by construction")
}

/// Spin measurement axes, expressed in the Z basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpinAxis {
    Z,
    X,
    Y,
}

impl fmt::Display for SpinAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SpinAxis::Z => "Z",
            SpinAxis::X => "X",
            SpinAxis::Y => "Y",
        };
        f.write_str(s)
    }
}

pub fn spin_basis(axis: SpinAxis) -> Basis2 {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let ket = |a0: Complex64, a1: Complex64| Ket2::new(a0, a1).expect("unit amplitudes");
    match axis {
        SpinAxis::Z => Basis2::standard(),
        SpinAxis::X => Basis2::new(ket(h, h), ket(h, -h)).expect("orthonormal"),
        SpinAxis::Y => {
            let ih = Complex64::new(0.0, FRAC_1_SQRT_2);
            Basis2::new(ket(h, ih), ket(h, -ih)).expect("orthonormal")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeStage {
    pub label: String,
    pub basis: Basis2,
    /// Particles with this outcome are removed from the beam.
    pub block: Option<Outcome>,
}

impl CascadeStage {
    pub fn spin(axis: SpinAxis, block: Option<Outcome>) -> Self {
        Self {
            label: axis.to_string(),
            basis: spin_basis(axis),
            block,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSpec {
    stages: Vec<CascadeStage>,
    shots: u64,
}

impl CascadeSpec {
    pub fn new(stages: Vec<CascadeStage>, shots: u64) -> Result<Self, SimError> {
        if stages.is_empty() {
            return Err(SimError::NoStages);
        }
        if shots == 0 {
            return Err(SimError::NoShots);
        }
        Ok(Self { stages, shots })
    }

    pub fn stages(&self) -> &[CascadeStage] {
        &self.stages
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }
}

/// Population at one apparatus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct StageCounts {
    pub positive: u64,
    pub negative: u64,
    /// Particles that left the stage unblocked.
    pub passed: u64,
}

impl StageCounts {
    pub fn entered(&self) -> u64 {
        self.positive + self.negative
    }
}

pub fn run_cascade<R: Rng + ?Sized>(
    initial: &Ket2,
    spec: &CascadeSpec,
    rng: &mut R,
) -> Vec<StageCounts> {
    let mut counts = vec![StageCounts::default(); spec.stages.len()];
    for _ in 0..spec.shots {
        let mut state = *initial;
        for (stage, tally) in spec.stages.iter().zip(counts.iter_mut()) {
            let (outcome, next) = measure(&state, &stage.basis, rng);
            match outcome {
                Outcome::Positive => tally.positive += 1,
                Outcome::Negative => tally.negative += 1,
            }
            if stage.block == Some(outcome) {
                break;
            }
            tally.passed += 1;
            state = next;
        }
    }
    counts
}

/// The three Stern-Gerlach arrangements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SternGerlachSetup {
    /// Z (block −), then Z again.
    A,
    /// Z (block −), then X.
    B,
    /// Z (block −), X (block −), then Z.
    C,
}

impl SternGerlachSetup {
    pub fn cascade(self, shots: u64) -> Result<CascadeSpec, SimError> {
        use SpinAxis::*;
        let block = Some(Outcome::Negative);
        let stages = match self {
            SternGerlachSetup::A => vec![CascadeStage::spin(Z, block), CascadeStage::spin(Z, None)],
            SternGerlachSetup::B => vec![CascadeStage::spin(Z, block), CascadeStage::spin(X, None)],
            SternGerlachSetup::C => vec![
                CascadeStage::spin(Z, block),
                CascadeStage::spin(X, block),
                CascadeStage::spin(Z, None),
            ],
        };
        CascadeSpec::new(stages, shots)
    }

    /// Particles enter every setup spin-up along Z.
    pub fn source(self) -> Ket2 {
        spin_basis(SpinAxis::Z).plus()
    }
}
