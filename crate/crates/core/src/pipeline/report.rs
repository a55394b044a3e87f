//! Report types and their deterministic JSON encoding.

use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::graph::{ComponentSummary, GraphMetrics};
use crate::modelselect::{Direction, LlrResult};
use crate::sessionizer::TrafficSummary;
use crate::stats::{FitResult, Kind};

use super::config::{RunConfig, XminMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitOutcome {
    Ok(FitResult),
    Failed { error: String },
}

impl FitOutcome {
    pub fn fit(&self) -> Option<&FitResult> {
        match self {
            FitOutcome::Ok(f) => Some(f),
            FitOutcome::Failed { .. } => None,
        }
    }
}

/// Fits of the four candidates to one degree direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeFits {
    pub direction: Direction,
    pub xmin_mode: XminMode,
    /// Absent when no tail could be formed.
    pub xmin: Option<u64>,
    /// KS distance of the zeta fit at `xmin`.
    pub ks_distance: Option<f64>,
    pub n_tail: usize,
    pub zero_degree_nodes: usize,
    pub positive_degree_nodes: usize,
    pub error: Option<String>,
    pub fits: BTreeMap<Kind, FitOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComparisonOutcome {
    Ok(LlrResult),
    Skipped { first: Kind, second: Kind, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionReport {
    pub fits: DegreeFits,
    pub comparisons: Vec<ComparisonOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKSummary {
    pub k: usize,
    pub nodes: u64,
    pub edges: u64,
    pub largest_wcc_nodes: u64,
    pub largest_wcc_edges: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    /// True when the class produced no sessions; only `summary` is filled.
    pub empty: bool,
    pub summary: TrafficSummary,
    pub graph: Option<GraphMetrics>,
    pub components: Option<ComponentSummary>,
    pub top_k: Option<TopKSummary>,
    pub degrees: BTreeMap<Direction, DirectionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileStats {
    pub path: String,
    pub lines: usize,
    pub records: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParseStats {
    pub files: Vec<FileStats>,
    pub records: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub human_records: usize,
    pub robot_records: usize,
    pub unidentified_records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo {
            name: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool: ToolInfo,
    pub config: RunConfig,
    pub parse: ParseStats,
    pub split: SplitStats,
    pub classes: BTreeMap<String, ClassReport>,
}

/// Pretty JSON with floats always written as 17 significant digits.
struct FixedPrecision<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for FixedPrecision<'_> {
    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }

    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }
}

/// Serializes with sorted object keys and fixed float precision, so equal
/// values always produce identical bytes.
pub fn to_canonical_json<T: Serialize>(value: &T) -> serde_json::Result<Vec<u8>> {
    // round-tripping through Value sorts the keys
    let value = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedPrecision(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}
