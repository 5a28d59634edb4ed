//! Fairness-aware multivariate adaptive regression splines.
//!
//! A [`Dataset`] is fit with [`fit`], which runs the forward knot search
//! ([`forward`]), prunes with generalized cross-validation ([`backward`]) and
//! optionally refits with subgroup-balanced weights. The resulting
//! [`FairMarsModel`] predicts, exports readable rules and round-trips through a
//! versioned JSON file. [`evaluation`] runs the k-fold and λ-sweep protocols.

pub mod backward;
pub mod basis;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod fairness;
pub mod forward;
pub mod least_squares;
pub mod model;

pub use backward::{gcv, run_backward, PruneConfig, PruneTrace};
pub use basis::{BasisFunction, Direction, HingeTerm};
pub use dataset::{load_csv, make_folds, CsvOptions, Dataset, FeatureSpec, FoldPlan};
pub use error::{FairMarsError, Result};
pub use evaluation::{cross_validate, lambda_sweep, metrics, Metrics, Variant};
pub use fairness::{disparity, penalized_objective, subgroup_weights, DisparityReport};
pub use forward::{run_forward, ForwardConfig, ForwardState};
pub use least_squares::{build_system, NormalSystem, WeightVector};
pub use model::{fit, FairMarsModel, FitConfig, FitOutcome};
