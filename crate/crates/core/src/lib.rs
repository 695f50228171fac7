//! Rescaled Pólya urn models for binary sentiment series.
//!
//! * [`urn`]: exact k-color Pólya and Rescaled Pólya engines.
//! * [`model`]: two-color streaming predictors (approximated RP dynamics and
//!   the standard Pólya predictor).
//! * [`estimation`]: slot-based maximum-likelihood fitting.
//! * [`evaluation`]: relative skill against the past-majority baseline,
//!   spline smoothing and smoothed-curve MSE.
//! * [`ingest`]: thresholding of pre-scored posts into binary series.
//! * [`pipeline`]: the end-to-end fit/evaluate run used by the CLI.

pub mod error;
pub mod estimation;
pub mod evaluation;
pub mod exec;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod series;
pub mod urn;

pub use error::{Error, Result};
pub use estimation::{fit, fit_trajectory, FitOptions, FitResult, ParamTrajectory, SlotScheme};
pub use exec::Execution;
pub use model::{ApproxParams, ApproxVariant, ModelKind, ModelParams, PolyaPredictorParams, PredictorState};
pub use series::{BinarySeries, Subset};
pub use urn::{CountVector, DrawOutcome, PolyaUrn, RpUrn, Urn};
