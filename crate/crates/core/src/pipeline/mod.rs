//! End-to-end orchestration. Each stage is a public function so the CLI
//! subcommands and [`run`] share one code path and produce identical files.

mod config;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::botfilter::{load_signature_db, split_stream, AgentSignatureDb, SignatureError, TrafficClass};
use crate::graph::export::{write_edge_list, write_graphml, write_node_table, NodeRow};
use crate::graph::{component_summary, ComponentMode, ComponentSummary, GraphMetrics, SessionGraph};
use crate::logparse::{lines_lossy, parse_stream, LogFormat, LogRecord, ParseError};
use crate::modelselect::{vuong_test, Direction, PAIRS};
use crate::sessionizer::{sessionize, summarize, write_requests_csv, write_sessions_csv, Session, TrafficSummary};
use crate::stats::{
    estimate_xmin, fit, frequency_table, ks_distance_zeta, write_frequency_csv, Kind, Params, TailSample,
};

pub use config::{Exports, RunConfig, XminMode};
pub use report::{
    to_canonical_json, AnalysisReport, ClassReport, ComparisonOutcome, DegreeFits, DirectionReport, FileStats,
    FitOutcome, ParseStats, SplitStats, ToolInfo, TopKSummary,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Signature { path: PathBuf, source: SignatureError },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
}

impl PipelineError {
    /// True for mistakes in how the tool was invoked rather than in the data.
    pub fn is_usage(&self) -> bool {
        matches!(self, PipelineError::Config(_))
    }

    fn io(path: &Path, source: io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

type Result<T> = std::result::Result<T, PipelineError>;

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| PipelineError::io(path, e))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| PipelineError::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| PipelineError::io(path, e))
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> PipelineError + '_ {
    move |source| PipelineError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes a CSV file through `body`.
pub fn write_csv_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> csv::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    body(&mut w).map_err(csv_err(path))?;
    finish(path, w)
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let bytes = to_canonical_json(value).map_err(|source| PipelineError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, bytes).map_err(|e| PipelineError::io(path, e))
}

pub fn read_json_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_reader(io::BufReader::new(open(path)?)).map_err(|source| PipelineError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| PipelineError::io(path, e))
}

/// Expands glob patterns. Literal paths are kept even when missing so the
/// later read reports them; a pattern matching nothing is an error naming it.
pub fn expand_inputs(patterns: &[String]) -> Result<Vec<PathBuf>> {
    let mut out = BTreeSet::new();
    for pat in patterns {
        if !pat.contains(['*', '?', '[']) {
            out.insert(PathBuf::from(pat));
            continue;
        }
        let paths = glob::glob(pat).map_err(|e| PipelineError::Config(format!("bad glob {pat:?}: {e}")))?;
        let mut matched = false;
        for p in paths {
            let p = p.map_err(|e| {
                let path = e.path().to_path_buf();
                PipelineError::Io { path, source: e.into() }
            })?;
            out.insert(p);
            matched = true;
        }
        if !matched {
            return Err(PipelineError::io(
                Path::new(pat),
                io::Error::new(io::ErrorKind::NotFound, "pattern matched no files"),
            ));
        }
    }
    Ok(out.into_iter().collect())
}

/// Parsed records of several files, in file order, plus every rejected line.
#[derive(Debug, Default)]
pub struct ParsedFiles {
    pub records: Vec<LogRecord>,
    pub errors: Vec<(PathBuf, usize, ParseError)>,
    pub stats: ParseStats,
}

pub fn parse_files(paths: &[PathBuf], format: &LogFormat) -> Result<ParsedFiles> {
    let mut out = ParsedFiles::default();
    for path in paths {
        let bytes = fs::read(path).map_err(|e| PipelineError::io(path, e))?;
        let lines = lines_lossy(&bytes);
        let parsed = parse_stream(&lines, format);
        out.stats.files.push(FileStats {
            path: path.display().to_string(),
            lines: lines.len(),
            records: parsed.records.len(),
            errors: parsed.errors.len(),
        });
        out.records.extend(parsed.records);
        out.errors
            .extend(parsed.errors.into_iter().map(|(line, e)| (path.clone(), line, e)));
    }
    out.stats.records = out.records.len();
    out.stats.errors = out.errors.len();
    Ok(out)
}

/// `file,line,error`
pub fn write_parse_errors_csv<W: io::Write>(errors: &[(PathBuf, usize, ParseError)], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["file", "line", "error"])?;
    for (path, line, err) in errors {
        w.write_record([path.display().to_string(), line.to_string(), err.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes records back as log lines in `format`.
pub fn write_log(path: &Path, records: &[LogRecord], format: &LogFormat) -> Result<()> {
    let mut w = create(path)?;
    for rec in records {
        writeln!(w, "{}", format.format_record(rec)).map_err(|e| PipelineError::io(path, e))?;
    }
    finish(path, w)
}

/// Loads the signature list; without one every record is human.
pub fn load_bots(path: Option<&Path>) -> Result<AgentSignatureDb> {
    let Some(path) = path else {
        return Ok(AgentSignatureDb::default());
    };
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    load_signature_db(&text).map_err(|source| PipelineError::Signature {
        path: path.to_path_buf(),
        source,
    })
}

/// Metrics, components and the top-k summary of one session graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub metrics: GraphMetrics,
    pub components: ComponentSummary,
    pub top_k: Option<TopKSummary>,
}

pub fn graph_summary(graph: &SessionGraph, top_k: Option<usize>) -> GraphSummary {
    let top_k = top_k.map(|k| {
        let sub = graph.top_k_degree_subgraph(k);
        let core = sub.largest_component(ComponentMode::Weak);
        TopKSummary {
            k,
            nodes: sub.node_count() as u64,
            edges: sub.edge_count() as u64,
            largest_wcc_nodes: core.node_count() as u64,
            largest_wcc_edges: core.edge_count() as u64,
        }
    });
    GraphSummary {
        metrics: GraphMetrics::of(graph),
        components: component_summary(graph),
        top_k,
    }
}

/// In- and out-degree of every node, zeros included.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Degrees {
    pub in_degree: Vec<u64>,
    pub out_degree: Vec<u64>,
}

impl Degrees {
    pub fn of(graph: &SessionGraph) -> Self {
        let (in_degree, out_degree) = graph.degrees();
        Degrees { in_degree, out_degree }
    }

    pub fn from_rows(rows: &[NodeRow]) -> Self {
        Degrees {
            in_degree: rows.iter().map(|r| r.in_degree).collect(),
            out_degree: rows.iter().map(|r| r.out_degree).collect(),
        }
    }

    pub fn get(&self, direction: Direction) -> &[u64] {
        match direction {
            Direction::In => &self.in_degree,
            Direction::Out => &self.out_degree,
        }
    }
}

/// Chooses `xmin` and fits all four candidates to one degree direction.
/// Zero degrees are excluded. Failures are recorded, not raised.
pub fn degree_fits(degrees: &[u64], direction: Direction, mode: XminMode) -> DegreeFits {
    let zeros = degrees.iter().filter(|&&d| d == 0).count();
    let mut out = DegreeFits {
        direction,
        xmin_mode: mode,
        xmin: None,
        ks_distance: None,
        n_tail: 0,
        zero_degree_nodes: zeros,
        positive_degree_nodes: degrees.len() - zeros,
        error: None,
        fits: BTreeMap::new(),
    };
    let xmin = match mode {
        XminMode::Fixed(x) => x,
        XminMode::Auto => match estimate_xmin(degrees) {
            Ok(est) => est.xmin,
            Err(e) => {
                out.error = Some(e.to_string());
                return out;
            }
        },
    };
    out.xmin = Some(xmin);
    let sample = match TailSample::from_degrees(degrees, xmin) {
        Ok(s) => s,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    out.n_tail = sample.n_tail();
    for kind in Kind::ALL {
        let outcome = match fit(kind, &sample) {
            Ok(f) => FitOutcome::Ok(f),
            Err(e) => FitOutcome::Failed { error: e.to_string() },
        };
        out.fits.insert(kind, outcome);
    }
    if let Some(FitOutcome::Ok(f)) = out.fits.get(&Kind::Zeta) {
        if let Params::Zeta { alpha } = f.params {
            out.ks_distance = ks_distance_zeta(&sample, alpha).ok();
        }
    }
    out
}

/// Vuong tests for every candidate pair; a pair whose fits are missing is
/// reported as skipped.
pub fn compare_direction(degrees: &[u64], fits: &DegreeFits) -> Vec<ComparisonOutcome> {
    let skip = |first, second, reason: String| ComparisonOutcome::Skipped { first, second, reason };
    let sample = match fits.xmin.map(|x| TailSample::from_degrees(degrees, x)) {
        Some(Ok(s)) => Some(s),
        Some(Err(e)) => return PAIRS.iter().map(|&(a, b)| skip(a, b, e.to_string())).collect(),
        None => None,
    };
    PAIRS
        .iter()
        .map(|&(a, b)| {
            let Some(sample) = &sample else {
                return skip(a, b, fits.error.clone().unwrap_or_else(|| "no tail".into()));
            };
            let get = |k: Kind| match fits.fits.get(&k) {
                Some(FitOutcome::Ok(f)) => Ok(f),
                Some(FitOutcome::Failed { error }) => Err(format!("{k} fit failed: {error}")),
                None => Err(format!("no {k} fit")),
            };
            match (get(a), get(b)) {
                (Ok(fa), Ok(fb)) => match vuong_test(sample, fa, fb, fits.direction) {
                    Ok(r) => ComparisonOutcome::Ok(r),
                    Err(e) => skip(a, b, e.to_string()),
                },
                (Err(reason), _) | (_, Err(reason)) => skip(a, b, reason),
            }
        })
        .collect()
}

/// Fits for each requested direction, keyed by direction.
pub fn fit_directions(degrees: &Degrees, directions: &[Direction], mode: XminMode) -> BTreeMap<Direction, DegreeFits> {
    directions
        .iter()
        .map(|&d| (d, degree_fits(degrees.get(d), d, mode)))
        .collect()
}

pub fn compare_directions(degrees: &Degrees, fits: &BTreeMap<Direction, DegreeFits>) -> Vec<ComparisonOutcome> {
    fits.values()
        .flat_map(|f| compare_direction(degrees.get(f.direction), f))
        .collect()
}

/// `first,second,direction,R,p_value,better`. Skipped pairs leave `R` and
/// `p_value` empty and put `skipped` in `better`.
pub fn write_comparisons_csv<W: io::Write>(
    rows: &[ComparisonOutcome],
    direction_of: impl Fn(usize) -> Direction,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["first", "second", "direction", "R", "p_value", "better"])?;
    for (i, row) in rows.iter().enumerate() {
        match row {
            ComparisonOutcome::Ok(r) => w.write_record([
                r.first.as_str(),
                r.second.as_str(),
                r.direction.as_str(),
                &format!("{:.16e}", r.r),
                &format!("{:.16e}", r.p_value),
                r.better().map_or("none", Kind::as_str),
            ])?,
            ComparisonOutcome::Skipped { first, second, .. } => w.write_record([
                first.as_str(),
                second.as_str(),
                direction_of(i).as_str(),
                "",
                "",
                "skipped",
            ])?,
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes comparisons produced by [`compare_directions`] for `fits`.
pub fn write_comparisons_file(
    path: &Path,
    fits: &BTreeMap<Direction, DegreeFits>,
    rows: &[ComparisonOutcome],
) -> Result<()> {
    let dirs: Vec<Direction> = fits.keys().flat_map(|&d| std::iter::repeat_n(d, PAIRS.len())).collect();
    write_csv_file(path, |w| write_comparisons_csv(rows, |i| dirs[i], w))
}

/// File names inside a class directory.
pub mod files {
    pub const SESSIONS: &str = "sessions.csv";
    pub const SESSION_REQUESTS: &str = "session_requests.csv";
    pub const SUMMARY: &str = "summary.json";
    pub const EDGES: &str = "edges.csv";
    pub const NODES: &str = "nodes.csv";
    pub const GRAPH: &str = "graph.json";
    pub const GRAPHML: &str = "graph.graphml";
    pub const TOPK_GRAPHML: &str = "topk.graphml";
    pub const FREQ_IN: &str = "freq_in.csv";
    pub const FREQ_OUT: &str = "freq_out.csv";
    pub const FITS: &str = "fits.json";
    pub const COMPARISONS: &str = "comparisons.csv";
    pub const REPORT: &str = "report.json";
}

pub fn write_session_files(dir: &Path, sessions: &[Session], summary: &TrafficSummary) -> Result<()> {
    write_csv_file(&dir.join(files::SESSIONS), |w| write_sessions_csv(sessions, w))?;
    write_csv_file(&dir.join(files::SESSION_REQUESTS), |w| write_requests_csv(sessions, w))?;
    write_json_file(&dir.join(files::SUMMARY), summary)
}

pub fn write_graph_files(dir: &Path, graph: &SessionGraph, summary: &GraphSummary) -> Result<()> {
    write_csv_file(&dir.join(files::EDGES), |w| write_edge_list(graph, w))?;
    write_csv_file(&dir.join(files::NODES), |w| write_node_table(graph, w))?;
    write_json_file(&dir.join(files::GRAPH), summary)
}

/// GraphML of the whole graph and of its top-k subgraph.
pub fn write_graphml_files(dir: &Path, graph: &SessionGraph, top_k: Option<usize>) -> Result<()> {
    let path = dir.join(files::GRAPHML);
    let mut w = create(&path)?;
    write_graphml(graph, &mut w).map_err(|e| PipelineError::io(&path, e))?;
    finish(&path, w)?;
    if let Some(k) = top_k {
        let path = dir.join(files::TOPK_GRAPHML);
        let mut w = create(&path)?;
        write_graphml(&graph.top_k_degree_subgraph(k), &mut w).map_err(|e| PipelineError::io(&path, e))?;
        finish(&path, w)?;
    }
    Ok(())
}

pub fn write_frequency_files(dir: &Path, degrees: &Degrees) -> Result<()> {
    write_csv_file(&dir.join(files::FREQ_IN), |w| {
        write_frequency_csv(&frequency_table(&degrees.in_degree), w)
    })?;
    write_csv_file(&dir.join(files::FREQ_OUT), |w| {
        write_frequency_csv(&frequency_table(&degrees.out_degree), w)
    })
}

pub fn read_node_rows(path: &Path) -> Result<Vec<NodeRow>> {
    crate::graph::export::read_node_table(open(path)?).map_err(csv_err(path))
}

pub fn read_graph_files(nodes: &Path, edges: &Path) -> Result<SessionGraph> {
    let n = open(nodes)?;
    let e = open(edges)?;
    crate::graph::export::read_graph(n, e).map_err(csv_err(edges))
}

pub fn read_sessions(path: &Path) -> Result<Vec<Session>> {
    crate::sessionizer::read_requests_csv(open(path)?).map_err(csv_err(path))
}

const DIRECTIONS: [Direction; 2] = [Direction::In, Direction::Out];

/// Sessionizes, builds the graph, fits and compares one traffic class,
/// writing its files under `dir`.
pub fn analyze_class(records: &[LogRecord], config: &RunConfig, dir: &Path) -> Result<ClassReport> {
    let sessions = sessionize(records, config.cutoff()?, config.path_policy);
    let summary = summarize(records, &sessions);
    if sessions.is_empty() {
        return Ok(ClassReport {
            empty: true,
            summary,
            graph: None,
            components: None,
            top_k: None,
            degrees: BTreeMap::new(),
        });
    }
    ensure_dir(dir)?;
    let ex = config.exports;
    if ex.sessions {
        write_session_files(dir, &sessions, &summary)?;
    }
    let graph = SessionGraph::build(&sessions);
    let gs = graph_summary(&graph, config.top_k);
    if ex.edgelist {
        write_graph_files(dir, &graph, &gs)?;
    }
    if ex.graphml {
        write_graphml_files(dir, &graph, config.top_k)?;
    }
    let degrees = Degrees::of(&graph);
    if ex.frequency {
        write_frequency_files(dir, &degrees)?;
    }
    let fits = fit_directions(&degrees, &DIRECTIONS, config.xmin);
    let comparisons = compare_directions(&degrees, &fits);
    write_json_file(&dir.join(files::FITS), &fits)?;
    write_comparisons_file(&dir.join(files::COMPARISONS), &fits, &comparisons)?;

    let mut by_direction: BTreeMap<Direction, Vec<ComparisonOutcome>> = BTreeMap::new();
    for (fit, chunk) in fits.values().zip(comparisons.chunks(PAIRS.len())) {
        by_direction.insert(fit.direction, chunk.to_vec());
    }
    let degrees_report = fits
        .into_iter()
        .map(|(d, fits)| {
            let comparisons = by_direction.remove(&d).unwrap_or_default();
            (d, DirectionReport { fits, comparisons })
        })
        .collect();
    Ok(ClassReport {
        empty: false,
        summary,
        graph: Some(gs.metrics),
        components: Some(gs.components),
        top_k: gs.top_k,
        degrees: degrees_report,
    })
}

/// Runs every stage for both traffic classes, writes `report.json` and the
/// enabled exports under `config.out_dir`, and returns the report.
pub fn run(config: &RunConfig) -> Result<AnalysisReport> {
    config.validate()?;
    let format = config.log_format()?;
    let db = load_bots(config.bots_db.as_deref())?;
    let paths = expand_inputs(&config.inputs)?;
    let parsed = parse_files(&paths, &format)?;
    let split = split_stream(parsed.records, &db);

    ensure_dir(&config.out_dir)?;
    let mut classes = BTreeMap::new();
    for (class, records) in [
        (TrafficClass::Human, &split.humans),
        (TrafficClass::Robot, &split.robots),
    ] {
        let dir = config.out_dir.join(class.as_str());
        classes.insert(class.as_str().to_string(), analyze_class(records, config, &dir)?);
    }
    let report = AnalysisReport {
        tool: ToolInfo::default(),
        config: config.clone(),
        parse: parsed.stats,
        split: SplitStats {
            human_records: split.humans.len(),
            robot_records: split.robots.len(),
            unidentified_records: split.unidentified,
        },
        classes,
    };
    write_json_file(&config.out_dir.join(files::REPORT), &report)?;
    Ok(report)
}
