//! Two-dimensional complex Hilbert-space primitives.
//!
//! Everything here is a small immutable value type. Kets are always
//! normalized on construction, bases are always orthonormal, and observables
//! are Hermitian. Kets are compared up to a global phase.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub type ComplexScalar = Complex64;

/// Tolerance for algebraic identities (normalization, orthogonality, Hermiticity).
pub const IDENTITY_TOL: f64 = 1e-9;

/// Probabilities at or below this are treated as exact orthogonality.
pub const COLLAPSE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HilbertError {
    #[error("non-finite amplitude")]
    NonFinite,
    #[error("ket is not normalized (norm squared = {0})")]
    NotNormalized(f64),
    #[error("the zero vector has no direction")]
    ZeroVector,
    #[error("basis kets are not orthogonal (|<plus|minus>| = {0})")]
    NotOrthogonal(f64),
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("cannot collapse onto a state reached with probability {0}")]
    ZeroProbabilityCollapse(f64),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Outcome of a yes/no measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Positive,
    Negative,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Positive, Outcome::Negative];

    pub fn is_positive(self) -> bool {
        self == Outcome::Positive
    }

    pub fn sign(self) -> char {
        match self {
            Outcome::Positive => '+',
            Outcome::Negative => '-',
        }
    }
}

fn finite(z: ComplexScalar) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// A normalized state vector in C².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ket2 {
    a0: ComplexScalar,
    a1: ComplexScalar,
}

impl Ket2 {
    /// Builds a ket from amplitudes that must already be normalized.
    pub fn new(a0: ComplexScalar, a1: ComplexScalar) -> Result<Self, HilbertError> {
        if !finite(a0) || !finite(a1) {
            return Err(HilbertError::NonFinite);
        }
        let n = a0.norm_sqr() + a1.norm_sqr();
        if (n - 1.0).abs() > IDENTITY_TOL {
            return Err(HilbertError::NotNormalized(n));
        }
        Ok(Self { a0, a1 })
    }

    /// Builds a ket by rescaling arbitrary (non-zero) amplitudes.
    pub fn normalized(a0: ComplexScalar, a1: ComplexScalar) -> Result<Self, HilbertError> {
        if !finite(a0) || !finite(a1) {
            return Err(HilbertError::NonFinite);
        }
        let n = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        if n <= f64::MIN_POSITIVE {
            return Err(HilbertError::ZeroVector);
        }
        Ok(Self {
            a0: a0 / n,
            a1: a1 / n,
        })
    }

    pub fn from_real(a0: f64, a1: f64) -> Result<Self, HilbertError> {
        Self::new(ComplexScalar::new(a0, 0.0), ComplexScalar::new(a1, 0.0))
    }

    /// `(1, 0)`
    pub fn up() -> Self {
        Self {
            a0: ComplexScalar::new(1.0, 0.0),
            a1: ComplexScalar::new(0.0, 0.0),
        }
    }

    /// `(0, 1)`
    pub fn down() -> Self {
        Self {
            a0: ComplexScalar::new(0.0, 0.0),
            a1: ComplexScalar::new(1.0, 0.0),
        }
    }

    pub fn a0(&self) -> ComplexScalar {
        self.a0
    }

    pub fn a1(&self) -> ComplexScalar {
        self.a1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a0.norm_sqr() + self.a1.norm_sqr()
    }

    /// Equality up to a global phase.
    pub fn same_ray(&self, other: &Ket2) -> bool {
        (inner(self, other).norm() - 1.0).abs() <= IDENTITY_TOL
    }

    fn scaled(&self, z: ComplexScalar) -> Self {
        Self {
            a0: self.a0 * z,
            a1: self.a1 * z,
        }
    }
}

impl fmt::Display for Ket2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a0, self.a1)
    }
}

/// An orthonormal pair of kets labelled by measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Basis2 {
    plus: Ket2,
    minus: Ket2,
}

impl Basis2 {
    pub fn new(plus: Ket2, minus: Ket2) -> Result<Self, HilbertError> {
        let overlap = inner(&plus, &minus).norm();
        if overlap > IDENTITY_TOL {
            return Err(HilbertError::NotOrthogonal(overlap));
        }
        Ok(Self { plus, minus })
    }

    pub fn standard() -> Self {
        Self {
            plus: Ket2::up(),
            minus: Ket2::down(),
        }
    }

    pub fn plus(&self) -> Ket2 {
        self.plus
    }

    pub fn minus(&self) -> Ket2 {
        self.minus
    }

    pub fn ket(&self, outcome: Outcome) -> Ket2 {
        match outcome {
            Outcome::Positive => self.plus,
            Outcome::Negative => self.minus,
        }
    }
}

/// General complex 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2c {
    m: [[ComplexScalar; 2]; 2],
}

impl Matrix2c {
    pub fn new(m: [[ComplexScalar; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        let c = |x: f64| ComplexScalar::new(x, 0.0);
        Self::new([[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]])
    }

    pub fn zero() -> Self {
        Self::from_real([[0.0, 0.0], [0.0, 0.0]])
    }

    pub fn identity() -> Self {
        Self::from_real([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn get(&self, row: usize, col: usize) -> ComplexScalar {
        self.m[row][col]
    }

    pub fn entries(&self) -> [[ComplexScalar; 2]; 2] {
        self.m
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::new([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix2c) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Matrix2c, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.approx_eq(&self.adjoint(), tol)
    }

    pub fn is_anti_hermitian(&self, tol: f64) -> bool {
        self.approx_eq(&-self.adjoint(), tol)
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|z| finite(*z))
    }

    pub fn apply(&self, ket: &Ket2) -> (ComplexScalar, ComplexScalar) {
        let m = &self.m;
        (
            m[0][0] * ket.a0 + m[0][1] * ket.a1,
            m[1][0] * ket.a0 + m[1][1] * ket.a1,
        )
    }
}

impl Mul for Matrix2c {
    type Output = Matrix2c;

    fn mul(self, rhs: Matrix2c) -> Matrix2c {
        let (a, b) = (&self.m, &rhs.m);
        let cell = |i: usize, j: usize| a[i][0] * b[0][j] + a[i][1] * b[1][j];
        Matrix2c::new([[cell(0, 0), cell(0, 1)], [cell(1, 0), cell(1, 1)]])
    }
}

impl Add for Matrix2c {
    type Output = Matrix2c;

    fn add(self, rhs: Matrix2c) -> Matrix2c {
        let (a, b) = (&self.m, &rhs.m);
        Matrix2c::new([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Matrix2c {
    type Output = Matrix2c;

    fn sub(self, rhs: Matrix2c) -> Matrix2c {
        self + (-rhs)
    }
}

impl Neg for Matrix2c {
    type Output = Matrix2c;

    fn neg(self) -> Matrix2c {
        let m = &self.m;
        Matrix2c::new([[-m[0][0], -m[0][1]], [-m[1][0], -m[1][1]]])
    }
}

impl fmt::Display for Matrix2c {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.m;
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            m[0][0], m[0][1], m[1][0], m[1][1]
        )
    }
}

/// Hermitian 2×2 matrix representing a yes/no question.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observable2 {
    m: Matrix2c,
}

impl Observable2 {
    pub fn new(m: Matrix2c) -> Result<Self, HilbertError> {
        if !m.is_finite() {
            return Err(HilbertError::NonFinite);
        }
        if !m.is_hermitian(IDENTITY_TOL) {
            return Err(HilbertError::NotHermitian);
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> Matrix2c {
        self.m
    }
}

/// `⟨bra|ket⟩`
pub fn inner(bra: &Ket2, ket: &Ket2) -> ComplexScalar {
    bra.a0.conj() * ket.a0 + bra.a1.conj() * ket.a1
}

/// Born-rule probability `|⟨onto|state⟩|²`, clamped to `[0, 1]`.
pub fn prob_projection(state: &Ket2, onto: &Ket2) -> f64 {
    inner(onto, state).norm_sqr().clamp(0.0, 1.0)
}

/// Post-measurement state after observing `onto`.
///
/// The projected vector `|onto⟩⟨onto|state⟩` is renormalized, so the result
/// is `onto` times the phase of the overlap.
pub fn collapse(state: &Ket2, onto: &Ket2) -> Result<Ket2, HilbertError> {
    let overlap = inner(onto, state);
    let p = overlap.norm_sqr();
    if p <= COLLAPSE_THRESHOLD {
        return Err(HilbertError::ZeroProbabilityCollapse(p));
    }
    Ok(onto.scaled(overlap / overlap.norm()))
}

/// Probability of observing each ket of `chain` in turn, starting from `state`.
///
/// Each link contributes `|⟨next|prev⟩|²` where `prev` is the state the
/// previous outcome collapsed to. An empty chain has probability 1.
pub fn sequential_prob(state: &Ket2, chain: &[Ket2]) -> f64 {
    let mut prev = state;
    let mut p = 1.0;
    for next in chain {
        p *= prob_projection(prev, next);
        prev = next;
    }
    p
}

/// Rank-one projector `|ket⟩⟨ket|`.
pub fn projector(ket: &Ket2) -> Matrix2c {
    let a = [ket.a0, ket.a1];
    let cell = |i: usize, j: usize| a[i] * a[j].conj();
    Matrix2c::new([[cell(0, 0), cell(0, 1)], [cell(1, 0), cell(1, 1)]])
}

/// `|plus⟩⟨plus| − |minus⟩⟨minus|`, eigenvalues +1 and −1.
pub fn observable_from_basis(basis: &Basis2) -> Observable2 {
    Observable2 {
        m: projector(&basis.plus) - projector(&basis.minus),
    }
}

/// `ab − ba`
pub fn commutator(a: &Observable2, b: &Observable2) -> Matrix2c {
    a.m * b.m - b.m * a.m
}

/// Re-expresses a basis `{|C⟩, |D⟩}` in terms of `{|A⟩, |B⟩}` given a state
/// with real coordinates `(a, b)` in the first basis and `(c, d)` in the second.
///
/// Returns the coordinates of `|C⟩` and `|D⟩` relative to `|A⟩, |B⟩`.
pub fn change_of_basis(a: f64, b: f64, c: f64, d: f64) -> Result<(Ket2, Ket2), HilbertError> {
    for (name, x, y) in [("(a, b)", a, b), ("(c, d)", c, d)] {
        if !x.is_finite() || !y.is_finite() {
            return Err(HilbertError::NonFinite);
        }
        let n = x * x + y * y;
        if (n - 1.0).abs() > IDENTITY_TOL {
            return Err(HilbertError::Domain(format!(
                "{name} must be unit length, got squared norm {n}"
            )));
        }
    }
    let same = a * c + b * d;
    let cross = b * c - a * d;
    Ok((
        Ket2::from_real(same, cross)?,
        Ket2::from_real(-cross, same)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> ComplexScalar {
        ComplexScalar::new(re, im)
    }

    fn sx_plus() -> Ket2 {
        Ket2::from_real(FRAC_1_SQRT_2, FRAC_1_SQRT_2).unwrap()
    }

    fn sy_plus() -> Ket2 {
        Ket2::new(c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)).unwrap()
    }

    #[test]
    fn inner_examples() {
        let k = Ket2::from_real(0.6, 0.8).unwrap();
        assert_abs_diff_eq!(inner(&k, &k).re, 1.0, epsilon = 1e-12);
        assert_eq!(inner(&Ket2::up(), &Ket2::down()), c(0.0, 0.0));
        let z = inner(&sx_plus(), &sy_plus());
        assert_abs_diff_eq!(z.re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(z.im, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(z.norm_sqr(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn prob_projection_examples() {
        assert_abs_diff_eq!(
            prob_projection(&sx_plus(), &sx_plus()),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            prob_projection(&Ket2::up(), &sx_plus()),
            0.5,
            epsilon = 1e-12
        );
        let t2: f64 = 0.7622;
        let s = Ket2::from_real(t2.sqrt(), (1.0 - t2).sqrt()).unwrap();
        assert_abs_diff_eq!(prob_projection(&s, &Ket2::up()), 0.7622, epsilon = 1e-12);
    }

    #[test]
    fn collapse_examples() {
        let t: f64 = 0.3;
        let s = Ket2::from_real(t, (1.0 - t * t).sqrt()).unwrap();
        assert!(collapse(&s, &Ket2::up()).unwrap().same_ray(&Ket2::up()));
        let out = collapse(&Ket2::up(), &sx_plus()).unwrap();
        assert!(out.same_ray(&sx_plus()));
        assert_abs_diff_eq!(out.norm_sqr(), 1.0, epsilon = 1e-12);
        assert!(matches!(
            collapse(&Ket2::up(), &Ket2::down()),
            Err(HilbertError::ZeroProbabilityCollapse(_))
        ));
    }

    #[test]
    fn sequential_prob_examples() {
        let t2: f64 = 0.7622;
        let u2: f64 = 0.5779;
        let s = Ket2::from_real(t2.sqrt(), (1.0 - t2).sqrt()).unwrap();
        let u_plus = Ket2::from_real(u2.sqrt(), (1.0 - u2).sqrt()).unwrap();
        assert_abs_diff_eq!(sequential_prob(&s, &[Ket2::up()]), 0.7622, epsilon = 1e-12);
        assert_abs_diff_eq!(
            sequential_prob(&s, &[Ket2::up(), u_plus]),
            0.7622 * 0.5779,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            sequential_prob(&s, &[Ket2::up(), u_plus]),
            0.4405,
            epsilon = 1e-4
        );
        assert_eq!(sequential_prob(&s, &[Ket2::up(), Ket2::down()]), 0.0);
    }

    #[test]
    fn projector_examples() {
        assert_eq!(
            projector(&Ket2::up()),
            Matrix2c::from_real([[1.0, 0.0], [0.0, 0.0]])
        );
        assert_eq!(
            projector(&Ket2::down()),
            Matrix2c::from_real([[0.0, 0.0], [0.0, 1.0]])
        );
        // Outer product of the published |U+⟩ = (0.7601, 0.6496), computed by hand.
        let u_plus = Ket2::normalized(c(0.7601, 0.0), c(0.6496, 0.0)).unwrap();
        let expected = Matrix2c::from_real([[0.5779, 0.4938], [0.4938, 0.4221]]);
        assert!(projector(&u_plus).approx_eq(&expected, 1e-3));
    }

    #[test]
    fn observable_standard_basis() {
        let t = observable_from_basis(&Basis2::standard());
        assert_eq!(t.matrix(), Matrix2c::from_real([[1.0, 0.0], [0.0, -1.0]]));
    }

    #[test]
    fn commutator_examples() {
        let t = observable_from_basis(&Basis2::standard());
        assert_eq!(commutator(&t, &t), Matrix2c::zero());

        // Oracle: hand multiplication with the closed-form Û entries.
        let u2: f64 = 0.5779;
        let diag = 2.0 * u2 - 1.0;
        let off = 2.0 * (u2 * (1.0 - u2)).sqrt();
        let u_hat = Observable2::new(Matrix2c::from_real([[diag, off], [off, -diag]])).unwrap();
        let comm = commutator(&t, &u_hat);
        let expected = Matrix2c::from_real([[0.0, 2.0 * off], [-2.0 * off, 0.0]]);
        assert!(comm.approx_eq(&expected, 1e-12));
        assert_abs_diff_eq!(comm.get(0, 1).re, 1.9748, epsilon = 1e-3);
        assert_abs_diff_eq!(comm.frobenius_norm(), 2.793888129, epsilon = 1e-8);
        assert!(comm.is_anti_hermitian(1e-12));

        // The published (rounded) Û gives 2·0.9874·√2.
        let published =
            Observable2::new(Matrix2c::from_real([[0.1558, 0.9874], [0.9874, -0.1558]])).unwrap();
        let norm = commutator(&t, &published).frobenius_norm();
        assert_abs_diff_eq!(norm, 2.0 * 0.9874 * 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(norm, comm.frobenius_norm(), epsilon = 2e-3);
    }

    #[test]
    fn change_of_basis_examples() {
        let (cc, dd) = change_of_basis(1.0, 0.0, 1.0, 0.0).unwrap();
        assert!(cc.same_ray(&Ket2::up()) && dd.same_ray(&Ket2::down()));

        let h = FRAC_1_SQRT_2;
        let (cc, _) = change_of_basis(h, h, h, h).unwrap();
        assert_abs_diff_eq!(cc.a0().re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cc.a1().re, 0.0, epsilon = 1e-12);

        let (cc, dd) = change_of_basis(h, h, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(cc.a0().re, h, epsilon = 1e-12);
        assert_abs_diff_eq!(cc.a1().re, h, epsilon = 1e-12);
        assert!(inner(&cc, &dd).norm() < 1e-12);

        assert!(matches!(
            change_of_basis(1.0, 1.0, 1.0, 0.0),
            Err(HilbertError::Domain(_))
        ));
    }

    #[test]
    fn constructors_reject_bad_input() {
        assert!(matches!(
            Ket2::from_real(1.0, 1.0),
            Err(HilbertError::NotNormalized(_))
        ));
        assert_eq!(Ket2::from_real(f64::NAN, 0.0), Err(HilbertError::NonFinite));
        assert_eq!(
            Ket2::normalized(c(0.0, 0.0), c(0.0, 0.0)),
            Err(HilbertError::ZeroVector)
        );
        assert!(matches!(
            Basis2::new(Ket2::up(), sx_plus()),
            Err(HilbertError::NotOrthogonal(_))
        ));
        let not_herm = Matrix2c::new([[c(1.0, 0.0), c(0.0, 1.0)], [c(0.0, 1.0), c(1.0, 0.0)]]);
        assert_eq!(Observable2::new(not_herm), Err(HilbertError::NotHermitian));
    }

    fn ket_strategy() -> impl Strategy<Value = Ket2> {
        (
            0.0..std::f64::consts::PI,
            0.0..std::f64::consts::TAU,
            0.0..std::f64::consts::TAU,
        )
            .prop_map(|(theta, phi, global)| {
                let g = ComplexScalar::from_polar(1.0, global);
                Ket2::new(
                    g * (theta / 2.0).cos(),
                    g * ComplexScalar::from_polar((theta / 2.0).sin(), phi),
                )
                .unwrap()
            })
    }

    fn basis_from(k: Ket2) -> Basis2 {
        let minus = Ket2::new(-k.a1().conj(), k.a0().conj()).unwrap();
        Basis2::new(k, minus).unwrap()
    }

    proptest! {
        #[test]
        fn completeness(state in ket_strategy(), k in ket_strategy()) {
            let b = basis_from(k);
            let total = prob_projection(&state, &b.plus()) + prob_projection(&state, &b.minus());
            prop_assert!((total - 1.0).abs() < 1e-9);
        }

        #[test]
        fn projector_is_idempotent_hermitian(k in ket_strategy()) {
            let p = projector(&k);
            prop_assert!((p * p).approx_eq(&p, 1e-9));
            prop_assert!(p.is_hermitian(1e-9));
        }

        #[test]
        fn observable_is_involution(k in ket_strategy()) {
            let o = observable_from_basis(&basis_from(k));
            prop_assert!((o.matrix() * o.matrix()).approx_eq(&Matrix2c::identity(), 1e-9));
            prop_assert!(o.matrix().is_hermitian(1e-9));
        }

        #[test]
        fn commutator_antisymmetry(k1 in ket_strategy(), k2 in ket_strategy()) {
            let a = observable_from_basis(&basis_from(k1));
            let b = observable_from_basis(&basis_from(k2));
            let ab = commutator(&a, &b);
            prop_assert!(ab.is_anti_hermitian(1e-9));
            prop_assert!(ab.approx_eq(&-commutator(&b, &a), 0.0));
        }

        #[test]
        fn collapse_stays_normalized(state in ket_strategy(), onto in ket_strategy()) {
            prop_assume!(prob_projection(&state, &onto) > 1e-9);
            let out = collapse(&state, &onto).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-9);
            prop_assert!(out.same_ray(&onto));
        }

        #[test]
        fn change_of_basis_orthonormal(alpha in 0.0..std::f64::consts::TAU, beta in 0.0..std::f64::consts::TAU) {
            let (cc, dd) = change_of_basis(alpha.cos(), alpha.sin(), beta.cos(), beta.sin()).unwrap();
            prop_assert!((cc.norm_sqr() - 1.0).abs() < 1e-9);
            prop_assert!(inner(&cc, &dd).norm() < 1e-9);
        }
    }
}
