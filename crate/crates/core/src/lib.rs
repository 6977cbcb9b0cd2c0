//! Tail asymptotics for the maximum drawdown and maximum drawup of
//! fractional Brownian motion with trend,
//!
//! ```text
//! X_t = B_H(t) - t^{2H}/2 + mu t,   0 <= t <= T,
//! ```
//!
//! together with the machinery needed to check them numerically: exact
//! samplers for fBm (Cholesky and circulant embedding), drawdown/drawup
//! functionals, Monte Carlo estimators for the Pickands and Piterbarg
//! constants that enter the prefactors, and local-expansion checks of the
//! variance and correlation structure the asymptotics rest on.
//!
//! Monte Carlo loops run on rayon when the `parallel` feature is enabled
//! (the default); [`Execution::Sequential`] selects the single-threaded path
//! at runtime and is the only path when the feature is off.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asym;
pub mod constants;
pub mod error;
pub mod exec;
pub mod fbm;
pub mod io;
pub mod path_stats;
pub mod stats;
pub mod validation;

pub use asym::{
    asym_drawdown, asym_drawup, AsymptoticResult, DrawupVariant, Regime, ThresholdFunctions,
};
pub use constants::{ConstantEstimate, ConstantSource, ConstantsProvider, Provenance};
pub use error::{Error, Result};
pub use exec::Execution;
pub use fbm::{FbmPath, GridSpec, ModelParams, PathKind};
pub use path_stats::{Functional, TailQuery};
pub use validation::{LemmaCheckReport, McEstimate};
