//! Web server access logs to session graphs and degree-distribution fits.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`logparse`]: text lines to [`LogRecord`]s.
//! 2. [`botfilter`]: robot/human split from a signature list.
//! 3. [`sessionizer`]: per-agent sessions cut at a time-gap threshold.
//! 4. [`graph`]: the directed session graph and its connectivity metrics.
//! 5. [`stats`]: exponential, lognormal, zeta and DPLN fits to degrees.
//! 6. [`modelselect`]: pairwise Vuong likelihood-ratio tests.
//!
//! [`pipeline`] strings them together and produces an [`AnalysisReport`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod botfilter;
pub mod graph;
pub mod logparse;
pub mod modelselect;
pub mod pipeline;
pub mod sessionizer;
pub mod stats;

pub use botfilter::{AgentSignatureDb, TrafficClass};
pub use graph::{ComponentMode, ReciprocityMode, SessionGraph};
pub use logparse::{LogFormat, LogRecord, PathPolicy};
pub use modelselect::{Direction, LlrResult};
pub use pipeline::{AnalysisReport, RunConfig};
pub use sessionizer::{AgentKey, Session, TrafficSummary};
pub use stats::{DplnParams, FitResult, Kind, Params, TailSample};
