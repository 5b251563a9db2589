//! Decomposition-based bi-objective optimization toolkit.
//!
//! The crate is organized bottom-up:
//!
//! - [`landscape`]: correlated bi-objective NK-landscapes (ρMNK) and their file format.
//! - [`scalarize`]: the generalized scalarizing function, its named special cases
//!   and the opening angles of its equal-value lines.
//! - [`evolve`]: the scalarized (1+λ)-EA.
//! - [`indicators`]: Pareto filtering, final angle, deviation to best,
//!   hypervolume and the multiplicative epsilon indicator.
//! - [`stats`]: correlation, least squares and the Mann-Whitney U test.
//! - [`harness`]: campaigns, the on-disk results store, analyses and reports.

pub mod error;
pub mod evolve;
pub mod harness;
pub mod indicators;
pub mod landscape;
pub mod scalarize;
pub mod stats;

pub use error::{Error, Result};
pub use evolve::{mutate, run_ea, EaParams, EaRun, RunKey, RunRecord, TrajectoryPoint};
pub use indicators::{ApproxPoint, ApproxSet, ReferenceData};
pub use landscape::{Instance, InstanceParams, ObjectiveVector};
pub use scalarize::{Direction, OpeningAngles, ScalarizerConfig, ScalarizerKind};
pub use stats::{RankTestResult, RegressionFit};
