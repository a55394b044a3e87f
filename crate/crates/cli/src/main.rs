use std::num::NonZeroU64;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use sessgraph::botfilter::split_stream;
use sessgraph::logparse::LogFormat;
use sessgraph::pipeline::{
    self, compare_directions, ensure_dir, files, fit_directions, graph_summary, load_bots, parse_files,
    read_graph_files, read_json_file, read_node_rows, read_sessions, write_comparisons_file, write_csv_file,
    write_frequency_files, write_graph_files, write_graphml_files, write_json_file, write_log, write_parse_errors_csv,
    write_session_files, DegreeFits, Degrees, Exports, PipelineError, RunConfig, XminMode,
};
use sessgraph::sessionizer::{sessionize, summarize, DEFAULT_CUTOFF};
use sessgraph::{Direction, PathPolicy, SessionGraph};

/// Session graphs and degree-distribution fits from web server access logs.
#[derive(Debug, Parser)]
#[command(name = "sessgraph", version, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Every stage for both traffic classes, plus report.json.
    Run(RunArgs),
    /// Parse logs; writes records.log and parse_errors.csv.
    Parse(ParseArgs),
    /// Separate robot from human traffic; writes human.log and robot.log.
    Split(SplitArgs),
    /// Group one class into sessions; writes sessions.csv, session_requests.csv and summary.json.
    Sessionize(SessionizeArgs),
    /// Build the session graph; writes edges.csv, nodes.csv and graph.json.
    Graph(GraphArgs),
    /// Fit the candidate distributions to node degrees; writes fits JSON.
    Fit(FitArgs),
    /// Pairwise likelihood-ratio tests of fitted candidates; writes a CSV.
    Compare(CompareArgs),
    /// GraphML and degree frequency tables from a node/edge table pair.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct FormatArg {
    /// Preset (trailing-ip, combined, common) or a field-token string.
    #[arg(long, env = "SESSGRAPH_FORMAT", default_value = "trailing-ip")]
    format: String,
}

impl FormatArg {
    fn parse(&self) -> Result<LogFormat, PipelineError> {
        self.format
            .parse()
            .map_err(|e| PipelineError::Config(format!("log format {:?}: {e}", self.format)))
    }
}

#[derive(Debug, Args)]
struct SessionArgs {
    /// Gap in seconds that starts a new session.
    #[arg(long, env = "SESSGRAPH_CUTOFF", default_value_t = DEFAULT_CUTOFF)]
    cutoff: NonZeroU64,
    /// Drop query strings before using a path as a node.
    #[arg(long, env = "SESSGRAPH_STRIP_QUERY")]
    strip_query: bool,
}

impl SessionArgs {
    fn policy(&self) -> PathPolicy {
        if self.strip_query {
            PathPolicy::StripQuery
        } else {
            PathPolicy::Verbatim
        }
    }
}

#[derive(Debug, Args)]
struct TopKArg {
    /// Size of the highest-degree subgraph; 0 disables it.
    #[arg(long, env = "SESSGRAPH_TOP_K", default_value_t = 5000)]
    top_k: usize,
}

impl TopKArg {
    fn get(&self) -> Option<usize> {
        (self.top_k > 0).then_some(self.top_k)
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Log files or glob patterns.
    #[arg(required = true, env = "SESSGRAPH_INPUTS", value_delimiter = ',')]
    inputs: Vec<String>,
    #[command(flatten)]
    format: FormatArg,
    /// Robot signature list.
    #[arg(long, env = "SESSGRAPH_BOTS_DB")]
    bots_db: Option<PathBuf>,
    #[command(flatten)]
    session: SessionArgs,
    /// `auto` or a fixed lower cutoff for the fitted tail.
    #[arg(long, env = "SESSGRAPH_XMIN", default_value = "auto")]
    xmin: XminMode,
    #[arg(long, env = "SESSGRAPH_OUT", default_value = "out")]
    out: PathBuf,
    /// Echoed in the report; no stage draws random numbers.
    #[arg(long, env = "SESSGRAPH_SEED", default_value_t = 0)]
    seed: u64,
    /// Comma list of graphml, edgelist, frequency, sessions; or all / none.
    #[arg(long, env = "SESSGRAPH_EXPORT", default_value = "all")]
    export: Exports,
    #[command(flatten)]
    top_k: TopKArg,
}

#[derive(Debug, Args)]
struct ParseArgs {
    #[arg(required = true, env = "SESSGRAPH_INPUTS", value_delimiter = ',')]
    inputs: Vec<String>,
    #[command(flatten)]
    format: FormatArg,
    #[arg(long, env = "SESSGRAPH_OUT", default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Parsed log, usually records.log.
    input: PathBuf,
    #[command(flatten)]
    format: FormatArg,
    #[arg(long, env = "SESSGRAPH_BOTS_DB")]
    bots_db: Option<PathBuf>,
    #[arg(long, env = "SESSGRAPH_OUT", default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SessionizeArgs {
    /// One traffic class, e.g. human.log.
    input: PathBuf,
    #[command(flatten)]
    format: FormatArg,
    #[command(flatten)]
    session: SessionArgs,
    #[arg(long, env = "SESSGRAPH_OUT", default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GraphArgs {
    /// session_requests.csv from `sessionize`.
    input: PathBuf,
    #[command(flatten)]
    top_k: TopKArg,
    #[arg(long, env = "SESSGRAPH_OUT", default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirectionArg {
    In,
    Out,
    Both,
}

impl DirectionArg {
    fn directions(self) -> &'static [Direction] {
        match self {
            DirectionArg::In => &[Direction::In],
            DirectionArg::Out => &[Direction::Out],
            DirectionArg::Both => &[Direction::In, Direction::Out],
        }
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    /// nodes.csv from `graph`.
    input: PathBuf,
    #[arg(long, env = "SESSGRAPH_XMIN", default_value = "auto")]
    xmin: XminMode,
    #[arg(long, env = "SESSGRAPH_DIRECTION", value_enum, default_value = "both")]
    direction: DirectionArg,
    #[arg(long, env = "SESSGRAPH_OUT", default_value = files::FITS)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// nodes.csv the fits were made from.
    input: PathBuf,
    #[arg(long, env = "SESSGRAPH_FITS", default_value = files::FITS)]
    fits: PathBuf,
    #[arg(long, env = "SESSGRAPH_OUT", default_value = files::COMPARISONS)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long, env = "SESSGRAPH_NODES", default_value = files::NODES)]
    nodes: PathBuf,
    #[arg(long, env = "SESSGRAPH_EDGES", default_value = files::EDGES)]
    edges: PathBuf,
    #[command(flatten)]
    top_k: TopKArg,
    /// Comma list of graphml, frequency; or all / none.
    #[arg(long, env = "SESSGRAPH_EXPORT", default_value = "all")]
    export: Exports,
    #[arg(long, env = "SESSGRAPH_OUT", default_value = ".")]
    out: PathBuf,
}

fn run(args: RunArgs) -> Result<(), PipelineError> {
    let config = RunConfig {
        inputs: args.inputs,
        format: args.format.format,
        bots_db: args.bots_db,
        cutoff_secs: args.session.cutoff.get(),
        path_policy: args.session.policy(),
        xmin: args.xmin,
        out_dir: args.out,
        seed: args.seed,
        exports: args.export,
        top_k: args.top_k.get(),
    };
    let report = pipeline::run(&config)?;
    eprintln!(
        "{} records ({} rejected): {} human, {} robot",
        report.parse.records, report.parse.errors, report.split.human_records, report.split.robot_records
    );
    for (name, class) in &report.classes {
        match &class.graph {
            Some(g) => eprintln!(
                "{name}: {} sessions, {} nodes, {} edges",
                class.summary.session_count, g.nodes, g.edges
            ),
            None => eprintln!("{name}: no sessions"),
        }
    }
    println!("{}", config.out_dir.join(files::REPORT).display());
    Ok(())
}

fn parse(args: ParseArgs) -> Result<(), PipelineError> {
    let format = args.format.parse()?;
    let paths = pipeline::expand_inputs(&args.inputs)?;
    let parsed = parse_files(&paths, &format)?;
    ensure_dir(&args.out)?;
    write_log(&args.out.join("records.log"), &parsed.records, &format)?;
    write_csv_file(&args.out.join("parse_errors.csv"), |w| {
        write_parse_errors_csv(&parsed.errors, w)
    })?;
    eprintln!(
        "{} records, {} rejected lines",
        parsed.records.len(),
        parsed.errors.len()
    );
    Ok(())
}

fn read_log(path: &Path, format: &LogFormat) -> Result<Vec<sessgraph::LogRecord>, PipelineError> {
    let parsed = parse_files(&[path.to_path_buf()], format)?;
    if let Some((_, line, err)) = parsed.errors.first() {
        eprintln!(
            "warning: {}:{line}: {err} ({} lines skipped)",
            path.display(),
            parsed.errors.len()
        );
    }
    Ok(parsed.records)
}

fn split(args: SplitArgs) -> Result<(), PipelineError> {
    let format = args.format.parse()?;
    let db = load_bots(args.bots_db.as_deref())?;
    let split = split_stream(read_log(&args.input, &format)?, &db);
    ensure_dir(&args.out)?;
    write_log(&args.out.join("human.log"), &split.humans, &format)?;
    write_log(&args.out.join("robot.log"), &split.robots, &format)?;
    eprintln!("{} human, {} robot", split.humans.len(), split.robots.len());
    Ok(())
}

fn sessionize_cmd(args: SessionizeArgs) -> Result<(), PipelineError> {
    let format = args.format.parse()?;
    let records = read_log(&args.input, &format)?;
    let sessions = sessionize(&records, args.session.cutoff, args.session.policy());
    let summary = summarize(&records, &sessions);
    ensure_dir(&args.out)?;
    write_session_files(&args.out, &sessions, &summary)?;
    eprintln!("{} sessions from {} agents", summary.session_count, summary.agent_count);
    Ok(())
}

fn graph(args: GraphArgs) -> Result<(), PipelineError> {
    let sessions = read_sessions(&args.input)?;
    let graph = SessionGraph::build(&sessions);
    let summary = graph_summary(&graph, args.top_k.get());
    ensure_dir(&args.out)?;
    write_graph_files(&args.out, &graph, &summary)?;
    eprintln!("{} nodes, {} edges", graph.node_count(), graph.edge_count());
    Ok(())
}

fn fit(args: FitArgs) -> Result<(), PipelineError> {
    let degrees = Degrees::from_rows(&read_node_rows(&args.input)?);
    let fits = fit_directions(&degrees, args.direction.directions(), args.xmin);
    write_json_file(&args.out, &fits)?;
    for f in fits.values() {
        match (&f.error, f.xmin) {
            (Some(e), _) => eprintln!("{}: {e}", f.direction.as_str()),
            (None, Some(x)) => eprintln!("{}: xmin {x}, {} tail values", f.direction.as_str(), f.n_tail),
            (None, None) => {}
        }
    }
    Ok(())
}

fn compare(args: CompareArgs) -> Result<(), PipelineError> {
    let degrees = Degrees::from_rows(&read_node_rows(&args.input)?);
    let fits: std::collections::BTreeMap<Direction, DegreeFits> = read_json_file(&args.fits)?;
    let rows = compare_directions(&degrees, &fits);
    write_comparisons_file(&args.out, &fits, &rows)
}

fn export(args: ExportArgs) -> Result<(), PipelineError> {
    let graph = read_graph_files(&args.nodes, &args.edges)?;
    ensure_dir(&args.out)?;
    if args.export.graphml {
        write_graphml_files(&args.out, &graph, args.top_k.get())?;
    }
    if args.export.frequency {
        write_frequency_files(&args.out, &Degrees::of(&graph))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Parse(a) => parse(a),
        Command::Split(a) => split(a),
        Command::Sessionize(a) => sessionize_cmd(a),
        Command::Graph(a) => graph(a),
        Command::Fit(a) => fit(a),
        Command::Compare(a) => compare(a),
        Command::Export(a) => export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}
