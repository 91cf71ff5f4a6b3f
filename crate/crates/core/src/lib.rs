//! Complex two-dimensional Hilbert-space models of sequential relevance
//! judgments.
//!
//! A user's judgment of a document along Topicality, Understandability and
//! Reliability is modelled as three incompatible yes/no measurements on a
//! single qubit-like state. The crate fits that model from sequential
//! answer probabilities, checks it for non-classical signatures, and
//! simulates respondents and Stern-Gerlach cascades.

pub mod estimation;
pub mod hilbert;
pub mod io;
pub mod model;
pub mod quantumness;
pub mod simulator;

pub use estimation::{
    aggregate, chi_square_two_proportions, fit_model, fit_r, fit_t, fit_theta, fit_u,
    model_probabilities, ChiSquareResult, EstimationError, FitReport, QuestionOrder,
    ResponseDataset, ResponseRecord, SequentialProbabilities,
};
pub use hilbert::{Basis2, ComplexScalar, HilbertError, Ket2, Matrix2c, Observable2, Outcome};
pub use model::{Dimension, ModelError, QueryModel, RelevanceParams};
pub use quantumness::{
    commutator_report, effect_tables, ltp_report, negativity, wigner, LtpReport, WignerDistribution,
};
pub use simulator::{simulate_dataset, SimConfig};
