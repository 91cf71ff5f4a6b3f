//! The three-dimension relevance model.
//!
//! Topicality is the standard basis. The user's state before judging is
//! `t|T+⟩ + √(1−t²)|T−⟩`, Understandability is a real rotation of the
//! standard basis and Reliability carries the complex phase `θ_r`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{
    inner, observable_from_basis, sequential_prob, Basis2, Ket2, Observable2, Outcome,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParams {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("query id must not be empty")]
    EmptyQueryId,
    #[error("invalid question sequence: {0}")]
    InvalidSequence(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dimension {
    Topicality,
    Understandability,
    Reliability,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [
        Dimension::Topicality,
        Dimension::Understandability,
        Dimension::Reliability,
    ];

    pub fn letter(self) -> char {
        match self {
            Dimension::Topicality => 'T',
            Dimension::Understandability => 'U',
            Dimension::Reliability => 'R',
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// The four numbers that pin down the Hilbert space for one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelevanceParams {
    t: f64,
    u: f64,
    r: f64,
    theta_r: f64,
}

fn check_amplitude(name: &'static str, value: f64) -> Result<(), ModelError> {
    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
        return Err(ModelError::InvalidParams {
            name,
            value,
            reason: "amplitude must lie in [0, 1]",
        });
    }
    Ok(())
}

impl RelevanceParams {
    /// Amplitudes in `[0, 1]`, `theta_r` in radians within `[0, π]`.
    pub fn new(t: f64, u: f64, r: f64, theta_r: f64) -> Result<Self, ModelError> {
        check_amplitude("t", t)?;
        check_amplitude("u", u)?;
        check_amplitude("r", r)?;
        if !theta_r.is_finite() || !(0.0..=PI).contains(&theta_r) {
            return Err(ModelError::InvalidParams {
                name: "theta_r",
                value: theta_r,
                reason: "phase must lie in [0, pi] radians",
            });
        }
        Ok(Self { t, u, r, theta_r })
    }

    /// From the squared amplitudes (probabilities) and a phase in degrees.
    pub fn from_squares(t2: f64, u2: f64, r2: f64, theta_deg: f64) -> Result<Self, ModelError> {
        for (name, v) in [("t^2", t2), ("u^2", u2), ("r^2", r2)] {
            check_amplitude(name, v)?;
        }
        Self::new(t2.sqrt(), u2.sqrt(), r2.sqrt(), theta_deg.to_radians())
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta_r(&self) -> f64 {
        self.theta_r
    }

    pub fn theta_r_deg(&self) -> f64 {
        self.theta_r.to_degrees()
    }

    pub fn with_theta(&self, theta_r: f64) -> Result<Self, ModelError> {
        Self::new(self.t, self.u, self.r, theta_r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryModel {
    query_id: String,
    params: RelevanceParams,
    provenance: String,
}

impl QueryModel {
    pub fn new(
        query_id: impl Into<String>,
        params: RelevanceParams,
        provenance: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let query_id = query_id.into();
        if query_id.trim().is_empty() {
            return Err(ModelError::EmptyQueryId);
        }
        Ok(Self {
            query_id,
            params,
            provenance: provenance.into(),
        })
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    pub fn params(&self) -> &RelevanceParams {
        &self.params
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }
}

fn complement(x: f64) -> f64 {
    (1.0 - x * x).max(0.0).sqrt()
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `t|T+⟩ + √(1−t²)|T−⟩`
pub fn initial_state(params: &RelevanceParams) -> Ket2 {
    Ket2::normalized(real(params.t), real(complement(params.t)))
        .expect("amplitudes in [0,1] always give a unit vector")
}

pub fn basis_kets(params: &RelevanceParams, dim: Dimension) -> Basis2 {
    let pair = |plus: (Complex64, Complex64), minus: (Complex64, Complex64)| {
        let plus = Ket2::normalized(plus.0, plus.1).expect("unit amplitudes");
        let minus = Ket2::normalized(minus.0, minus.1).expect("unit amplitudes");
        Basis2::new(plus, minus).expect("orthogonal by construction")
    };
    match dim {
        Dimension::Topicality => Basis2::standard(),
        Dimension::Understandability => {
            let (u, s) = (params.u, complement(params.u));
            pair((real(u), real(s)), (real(s), real(-u)))
        }
        Dimension::Reliability => {
            let (r, s) = (params.r, complement(params.r));
            pair(
                (real(r), Complex64::from_polar(s, params.theta_r)),
                (Complex64::from_polar(s, -params.theta_r), real(-r)),
            )
        }
    }
}

pub fn observable(params: &RelevanceParams, dim: Dimension) -> Observable2 {
    observable_from_basis(&basis_kets(params, dim))
}

/// Probability of the answers in `seq`, asked in order, under the model.
pub fn predict_sequence_prob(
    model: &QueryModel,
    seq: &[(Dimension, Outcome)],
) -> Result<f64, ModelError> {
    if seq.is_empty() {
        return Err(ModelError::InvalidSequence("empty sequence".into()));
    }
    if let Some(w) = seq.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(ModelError::InvalidSequence(format!(
            "dimension {} asked twice in a row",
            w[0].0
        )));
    }
    let params = model.params();
    let chain: Vec<Ket2> = seq
        .iter()
        .map(|&(dim, outcome)| basis_kets(params, dim).ket(outcome))
        .collect();
    Ok(sequential_prob(&initial_state(params), &chain))
}

/// Model-side terms of the total-probability decomposition for `R+` after `T+`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LtpComponents {
    /// `P(R+,T+) = t²r²`, Reliability asked straight after Topicality.
    pub direct: f64,
    /// `P(R+,U+,T+) + P(R+,U−,T+)`, Understandability asked in between.
    pub two_path: f64,
    /// `direct − two_path`
    pub interference: f64,
}

pub fn ltp_components(params: &RelevanceParams) -> LtpComponents {
    let t2 = params.t * params.t;
    let r_plus = basis_kets(params, Dimension::Reliability).plus();
    let u_basis = basis_kets(params, Dimension::Understandability);
    let direct = t2 * params.r * params.r;
    let two_path = t2
        * Outcome::BOTH
            .iter()
            .map(|&o| {
                let u = u_basis.ket(o);
                inner(&u, &Ket2::up()).norm_sqr() * inner(&r_plus, &u).norm_sqr()
            })
            .sum::<f64>();
    LtpComponents {
        direct,
        two_path,
        interference: direct - two_path,
    }
}

/// The cross term `Int(θ_r)` that closes the quantum total-probability law.
pub fn interference_term(params: &RelevanceParams) -> f64 {
    ltp_components(params).interference
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{commutator, prob_projection, Matrix2c};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use Dimension::*;
    use Outcome::*;

    fn query1() -> QueryModel {
        // θ_r fitted from Table-3 P(R+|U+,T+) = 0.5872 (oracle script value).
        let p =
            RelevanceParams::from_squares(0.7622, 0.5779, 0.5462, 80.637_626_056_380_98).unwrap();
        QueryModel::new("q1", p, "test").unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(RelevanceParams::new(1.1, 0.5, 0.5, 0.0).is_err());
        assert!(RelevanceParams::new(0.5, -0.1, 0.5, 0.0).is_err());
        assert!(RelevanceParams::new(0.5, 0.5, 0.5, 4.0).is_err());
        assert!(RelevanceParams::new(0.5, 0.5, f64::NAN, 0.0).is_err());
        let p = RelevanceParams::new(1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(QueryModel::new(" ", p, ""), Err(ModelError::EmptyQueryId));
    }

    #[test]
    fn initial_state_examples() {
        let p = RelevanceParams::from_squares(0.7622, 0.5, 0.5, 0.0).unwrap();
        let s = initial_state(&p);
        assert_abs_diff_eq!(s.a0().re, 0.87304, epsilon = 1e-5);
        assert_abs_diff_eq!(s.a1().re, 0.48765, epsilon = 1e-5);
        let one = RelevanceParams::new(1.0, 0.5, 0.5, 0.0).unwrap();
        assert!(initial_state(&one).same_ray(&Ket2::up()));
        let zero = RelevanceParams::new(0.0, 0.5, 0.5, 0.0).unwrap();
        assert!(initial_state(&zero).same_ray(&Ket2::down()));
    }

    #[test]
    fn basis_examples() {
        let q1 = query1();
        let u = basis_kets(q1.params(), Understandability);
        assert_abs_diff_eq!(u.plus().a0().re, 0.7601, epsilon = 1e-3);
        assert_abs_diff_eq!(u.plus().a1().re, 0.6496, epsilon = 1e-3);
        let r = basis_kets(q1.params(), Reliability);
        assert_abs_diff_eq!(r.plus().a0().re, 0.7390, epsilon = 1e-3);
        assert_abs_diff_eq!(r.plus().a1().norm(), 0.6737, epsilon = 1e-3);
        assert_abs_diff_eq!(r.plus().a1().arg().to_degrees(), 80.62, epsilon = 0.1);

        let compatible = RelevanceParams::new(0.5, 1.0, 0.5, 0.0).unwrap();
        assert!(basis_kets(&compatible, Understandability)
            .plus()
            .same_ray(&Ket2::up()));
    }

    #[test]
    fn observable_examples() {
        let q1 = query1();
        let t = observable(q1.params(), Topicality).matrix();
        assert_eq!(t, Matrix2c::from_real([[1.0, 0.0], [0.0, -1.0]]));
        let u = observable(q1.params(), Understandability).matrix();
        let published = Matrix2c::from_real([[0.1558, 0.9874], [0.9874, -0.1558]]);
        assert!(u.approx_eq(&published, 1e-3));
        let r = observable(q1.params(), Reliability).matrix();
        assert_abs_diff_eq!(r.get(0, 0).re, 0.0924, epsilon = 1e-3);
        assert_abs_diff_eq!(r.get(1, 1).re, -0.0924, epsilon = 1e-3);
        assert_abs_diff_eq!(r.get(0, 1).norm(), 0.9955, epsilon = 1e-3);
        assert_abs_diff_eq!(r.get(1, 0).norm(), 0.9955, epsilon = 1e-3);
    }

    #[test]
    fn predict_examples() {
        let q1 = query1();
        assert_abs_diff_eq!(
            predict_sequence_prob(&q1, &[(Topicality, Positive)]).unwrap(),
            0.7622,
            epsilon = 1e-12
        );
        let tur = [
            (Topicality, Positive),
            (Understandability, Positive),
            (Reliability, Positive),
        ];
        assert_abs_diff_eq!(
            predict_sequence_prob(&q1, &tur).unwrap(),
            0.2587,
            epsilon = 2e-3
        );
        let tru = [
            (Topicality, Positive),
            (Reliability, Positive),
            (Understandability, Positive),
        ];
        // 0.7622 · 0.5462 · |⟨U+|R+⟩|², the last factor equal to the fitted 0.5872.
        assert_abs_diff_eq!(
            predict_sequence_prob(&q1, &tru).unwrap(),
            0.7622 * 0.5462 * 0.5872,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            predict_sequence_prob(&q1, &tru).unwrap(),
            0.2445,
            epsilon = 1e-4
        );
    }

    #[test]
    fn predict_rejects_bad_sequences() {
        let q1 = query1();
        assert!(matches!(
            predict_sequence_prob(&q1, &[]),
            Err(ModelError::InvalidSequence(_))
        ));
        assert!(matches!(
            predict_sequence_prob(&q1, &[(Topicality, Positive), (Topicality, Positive)]),
            Err(ModelError::InvalidSequence(_))
        ));
        // Non-consecutive repeats are fine.
        assert!(predict_sequence_prob(
            &q1,
            &[
                (Topicality, Positive),
                (Reliability, Positive),
                (Topicality, Positive)
            ]
        )
        .is_ok());
    }

    #[test]
    fn order_asymmetry_witness() {
        let q1 = query1();
        let tur = [
            (Topicality, Positive),
            (Understandability, Positive),
            (Reliability, Positive),
        ];
        let tru = [
            (Topicality, Positive),
            (Reliability, Positive),
            (Understandability, Positive),
        ];
        let a = predict_sequence_prob(&q1, &tur).unwrap();
        let b = predict_sequence_prob(&q1, &tru).unwrap();
        assert!((a - b).abs() > 1e-3);
    }

    /// Independent oracle: expand ⟨R+|U±⟩⟨U±|T+⟩ by hand and take the cross term.
    fn cross_term_oracle(t: f64, u: f64, r: f64, theta: f64) -> f64 {
        let su = (1.0 - u * u).sqrt();
        let sr = (1.0 - r * r).sqrt();
        let e = Complex64::from_polar(1.0, -theta);
        let a = (r * u + sr * su * e) * u; // ⟨R+|U+⟩⟨U+|T+⟩
        let b = (r * su - sr * u * e) * su; // ⟨R+|U−⟩⟨U−|T+⟩
        t * t * 2.0 * (a * b.conj()).re
    }

    #[test]
    fn interference_examples() {
        let q1 = query1();
        let p = q1.params();
        assert_abs_diff_eq!(interference_term(p), 0.0249, epsilon = 1e-3);
        assert_abs_diff_eq!(
            interference_term(p),
            cross_term_oracle(p.t(), p.u(), p.r(), p.theta_r()),
            epsilon = 1e-12
        );
        let h = 0.5f64.sqrt();
        let quarter = RelevanceParams::new(0.8, h, h, PI / 2.0).unwrap();
        assert_abs_diff_eq!(interference_term(&quarter), 0.0, epsilon = 1e-12);
        let compatible = RelevanceParams::new(0.8, 1.0, 0.6, 1.0).unwrap();
        assert_abs_diff_eq!(interference_term(&compatible), 0.0, epsilon = 1e-12);
        let orthogonal = RelevanceParams::new(0.8, 0.0, 0.6, 1.0).unwrap();
        assert_abs_diff_eq!(interference_term(&orthogonal), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn commutators_of_query1_are_nonzero() {
        let p = *query1().params();
        let t = observable(&p, Topicality);
        let u = observable(&p, Understandability);
        let r = observable(&p, Reliability);
        for (a, b) in [(&t, &u), (&t, &r), (&r, &u)] {
            assert!(commutator(a, b).frobenius_norm() > 0.1);
        }
    }

    fn params_strategy() -> impl Strategy<Value = RelevanceParams> {
        (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64, 0.0..=PI)
            .prop_map(|(t, u, r, th)| RelevanceParams::new(t, u, r, th).unwrap())
    }

    #[test]
    fn closed_form_overlap_grid() {
        for ui in 0..=10 {
            for ri in 0..=10 {
                for deg in (0..=180).step_by(30) {
                    let (u, r) = (ui as f64 / 10.0, ri as f64 / 10.0);
                    let th = (deg as f64).to_radians();
                    let p = RelevanceParams::new(0.5, u, r, th).unwrap();
                    let direct = prob_projection(
                        &basis_kets(&p, Reliability).plus(),
                        &basis_kets(&p, Understandability).plus(),
                    );
                    let a = (1.0 - u * u) * (1.0 - r * r);
                    let closed = (u * r).powi(2) + a + 2.0 * u * r * a.sqrt() * th.cos();
                    assert!((direct - closed).abs() < 1e-9, "u={u} r={r} deg={deg}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn two_path_completeness(p in params_strategy()) {
            let r_plus = basis_kets(&p, Reliability).plus();
            let ub = basis_kets(&p, Understandability);
            let s = prob_projection(&r_plus, &ub.plus()) + prob_projection(&r_plus, &ub.minus());
            prop_assert!((s - 1.0).abs() < 1e-9);
        }

        #[test]
        fn amplitude_resolution(p in params_strategy()) {
            let r_plus = basis_kets(&p, Reliability).plus();
            let ub = basis_kets(&p, Understandability);
            let t_plus = Ket2::up();
            let lhs = inner(&r_plus, &t_plus);
            let rhs = inner(&r_plus, &ub.plus()) * inner(&ub.plus(), &t_plus)
                + inner(&r_plus, &ub.minus()) * inner(&ub.minus(), &t_plus);
            prop_assert!((lhs - rhs).norm() < 1e-9);
        }

        #[test]
        fn interference_matches_cross_term(p in params_strategy()) {
            let oracle = cross_term_oracle(p.t(), p.u(), p.r(), p.theta_r());
            prop_assert!((interference_term(&p) - oracle).abs() < 1e-9);
        }

        #[test]
        fn outcome_paths_sum_to_one(p in params_strategy(), order in 0usize..6) {
            let orders = [
                [Topicality, Understandability, Reliability],
                [Topicality, Reliability, Understandability],
                [Understandability, Topicality, Reliability],
                [Understandability, Reliability, Topicality],
                [Reliability, Topicality, Understandability],
                [Reliability, Understandability, Topicality],
            ];
            let dims = orders[order];
            let model = QueryModel::new("q", p, "").unwrap();
            let mut total = 0.0;
            for mask in 0..8u8 {
                let seq: Vec<_> = dims
                    .iter()
                    .enumerate()
                    .map(|(i, &d)| (d, if mask >> i & 1 == 0 { Positive } else { Negative }))
                    .collect();
                total += predict_sequence_prob(&model, &seq).unwrap();
            }
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }
}
