use std::fmt;
use std::num::NonZeroU64;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::logparse::{LogFormat, PathPolicy};
use crate::sessionizer::DEFAULT_CUTOFF;

use super::PipelineError;

/// How the lower cutoff of the fitted tail is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum XminMode {
    /// KS-minimizing scan over the observed degrees.
    #[default]
    Auto,
    Fixed(u64),
}

impl fmt::Display for XminMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XminMode::Auto => f.write_str("auto"),
            XminMode::Fixed(n) => write!(f, "fixed:{n}"),
        }
    }
}

impl FromStr for XminMode {
    type Err = String;

    /// `auto`, `fixed:N` or a bare `N`; `N` must be at least 1.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(XminMode::Auto);
        }
        let digits = s.strip_prefix("fixed:").unwrap_or(s);
        match digits.parse::<u64>() {
            Ok(n) if n >= 1 => Ok(XminMode::Fixed(n)),
            _ => Err(format!("xmin must be 'auto' or a positive integer, got {s:?}")),
        }
    }
}

impl From<XminMode> for String {
    fn from(m: XminMode) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for XminMode {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Which optional files a run writes next to the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exports {
    pub graphml: bool,
    pub edgelist: bool,
    pub frequency: bool,
    pub sessions: bool,
}

impl Default for Exports {
    fn default() -> Self {
        Exports::all()
    }
}

impl Exports {
    pub fn all() -> Self {
        Exports {
            graphml: true,
            edgelist: true,
            frequency: true,
            sessions: true,
        }
    }

    pub fn none() -> Self {
        Exports {
            graphml: false,
            edgelist: false,
            frequency: false,
            sessions: false,
        }
    }
}

impl FromStr for Exports {
    type Err = String;

    /// Comma-separated subset of `graphml,edgelist,frequency,sessions`, or
    /// `all` / `none`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = Exports::none();
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            match item {
                "all" => out = Exports::all(),
                "none" => out = Exports::none(),
                "graphml" => out.graphml = true,
                "edgelist" => out.edgelist = true,
                "frequency" => out.frequency = true,
                "sessions" => out.sessions = true,
                other => return Err(format!("unknown export {other:?}")),
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Log files or glob patterns.
    pub inputs: Vec<String>,
    /// Preset name or token string, see [`LogFormat`].
    pub format: String,
    pub bots_db: Option<PathBuf>,
    pub cutoff_secs: u64,
    pub path_policy: PathPolicy,
    pub xmin: XminMode,
    pub out_dir: PathBuf,
    /// Recorded in the report. No current stage draws random numbers.
    pub seed: u64,
    pub exports: Exports,
    /// Size of the highest-degree subgraph summarized and exported.
    pub top_k: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: Vec::new(),
            format: "trailing-ip".to_string(),
            bots_db: None,
            cutoff_secs: DEFAULT_CUTOFF.get(),
            path_policy: PathPolicy::Verbatim,
            xmin: XminMode::Auto,
            out_dir: PathBuf::from("out"),
            seed: 0,
            exports: Exports::all(),
            top_k: Some(5000),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.inputs.is_empty() {
            return Err(PipelineError::Config("at least one input path is required".into()));
        }
        if self.cutoff_secs == 0 {
            return Err(PipelineError::Config("session cutoff must be positive".into()));
        }
        if self.top_k == Some(0) {
            return Err(PipelineError::Config("top-k must be at least 1".into()));
        }
        self.log_format()?;
        Ok(())
    }

    pub fn log_format(&self) -> Result<LogFormat, PipelineError> {
        self.format
            .parse()
            .map_err(|e| PipelineError::Config(format!("log format {:?}: {e}", self.format)))
    }

    pub fn cutoff(&self) -> Result<NonZeroU64, PipelineError> {
        NonZeroU64::new(self.cutoff_secs).ok_or_else(|| PipelineError::Config("session cutoff must be positive".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xmin_modes() {
        assert_eq!("auto".parse::<XminMode>().unwrap(), XminMode::Auto);
        assert_eq!("fixed:3".parse::<XminMode>().unwrap(), XminMode::Fixed(3));
        assert_eq!("7".parse::<XminMode>().unwrap(), XminMode::Fixed(7));
        assert!("0".parse::<XminMode>().is_err());
        assert!("fixed:x".parse::<XminMode>().is_err());
        assert_eq!(serde_json::to_string(&XminMode::Fixed(2)).unwrap(), "\"fixed:2\"");
    }

    #[test]
    fn export_lists() {
        let e: Exports = "graphml,sessions".parse().unwrap();
        assert!(e.graphml && e.sessions && !e.edgelist && !e.frequency);
        assert_eq!("all".parse::<Exports>().unwrap(), Exports::all());
        assert_eq!("none".parse::<Exports>().unwrap(), Exports::none());
        assert!("pdf".parse::<Exports>().is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        assert!(matches!(c.validate(), Err(PipelineError::Config(_))));
        c.inputs.push("a.log".into());
        assert!(c.validate().is_ok());
        c.cutoff_secs = 0;
        assert!(c.validate().is_err());
        c.cutoff_secs = 10;
        c.format = "t r".into();
        assert!(c.validate().is_err());
    }
}
