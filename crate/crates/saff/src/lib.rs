//! Audit the group fairness of an acceptance-rate predictor and learn a
//! population's aggregate preference over fairness notions from Likert-scale
//! feedback.
//!
//! The pipeline has four stages:
//!
//! 1. [`metrics`] turns donor-recipient match data into signed
//!    group-fairness profiles over six notions (SP, C, AE, EO, PE, OMR).
//! 2. [`feedback`] models how a participant with a preference weight `β`
//!    turns a profile into a Likert score: a logit-normal evaluation over a
//!    fixed 14-cell partition of [-1, 1] yields seven score utilities, and a
//!    softmax yields the score distribution.
//! 3. [`learner`] fits the social weight `β*` by projected gradient descent
//!    on the feedback regret, with the gradient assembled analytically per
//!    tuple and verified against finite differences ([`gradcheck`]).
//! 4. [`sim`] and [`io`] provide the synthetic-data generator, the
//!    convergence experiment grid, and the CSV/JSON surfaces.
//!
//! ```
//! use saff::feedback::{feedback_distribution, utility_vector};
//!
//! // A perceived-fair evaluation concentrates mass on score 7.
//! let utilities = utility_vector(0.0, 1.0);
//! let distribution = feedback_distribution(&utilities, 10.0);
//! let p = distribution.probabilities();
//! assert!(p[6] > p[0]);
//! ```

pub mod erf;
pub mod error;
pub mod feedback;
pub mod gradcheck;
pub mod io;
pub mod learner;
pub mod metrics;
pub mod sim;

pub use error::{Result, SaffError};

#[cfg(doctest)]
mod book;
