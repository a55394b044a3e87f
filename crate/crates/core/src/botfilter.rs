//! Robot/human traffic split driven by a signature list of user-agent
//! fragments and client addresses.
//!
//! Signature file layout:
//!
//! ```text
//! # comment
//! [ua]
//! Googlebot
//! bingbot
//! [ip]
//! 66.249.66.1
//! 157.55.39.0/24
//! ```

use std::collections::BTreeSet;
use std::net::IpAddr;

use aho_corasick::AhoCorasick;
use ipnet::IpNet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logparse::LogRecord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("line {line}: unknown section {header:?}")]
    BadSection { line: usize, header: String },
    #[error("line {line}: entry outside of a section")]
    NoSection { line: usize },
    #[error("line {line}: invalid CIDR block {value:?}")]
    BadCidr { line: usize, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficClass {
    Human,
    Robot,
}

impl TrafficClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TrafficClass::Human => "human",
            TrafficClass::Robot => "robot",
        }
    }
}

/// Immutable robot signature set.
#[derive(Debug, Clone)]
pub struct AgentSignatureDb {
    ua_substrings: BTreeSet<String>,
    ip_exact: BTreeSet<String>,
    ip_cidr: BTreeSet<IpNet>,
    matcher: Option<AhoCorasick>,
}

impl Default for AgentSignatureDb {
    fn default() -> Self {
        Self::new(Vec::<String>::new(), Vec::<String>::new(), Vec::new())
    }
}

impl AgentSignatureDb {
    /// Builds a db. Empty substrings are dropped; UA matching ignores ASCII case.
    pub fn new<U, I>(ua_substrings: U, ip_exact: I, ip_cidr: Vec<IpNet>) -> Self
    where
        U: IntoIterator,
        U::Item: Into<String>,
        I: IntoIterator,
        I::Item: Into<String>,
    {
        let ua_substrings: BTreeSet<String> = ua_substrings
            .into_iter()
            .map(|s| s.into().to_ascii_lowercase())
            .filter(|s| !s.is_empty())
            .collect();
        let matcher = if ua_substrings.is_empty() {
            None
        } else {
            Some(
                AhoCorasick::builder()
                    .ascii_case_insensitive(true)
                    .build(&ua_substrings)
                    .expect("signature automaton fits default limits"),
            )
        };
        AgentSignatureDb {
            ua_substrings,
            ip_exact: ip_exact.into_iter().map(Into::into).collect(),
            ip_cidr: ip_cidr.into_iter().map(|n| n.trunc()).collect(),
            matcher,
        }
    }

    pub fn ua_substrings(&self) -> &BTreeSet<String> {
        &self.ua_substrings
    }

    pub fn ip_exact(&self) -> &BTreeSet<String> {
        &self.ip_exact
    }

    pub fn ip_cidr(&self) -> &BTreeSet<IpNet> {
        &self.ip_cidr
    }

    pub fn is_empty(&self) -> bool {
        self.ua_substrings.is_empty() && self.ip_exact.is_empty() && self.ip_cidr.is_empty()
    }

    fn ua_matches(&self, ua: &str) -> bool {
        self.matcher.as_ref().is_some_and(|m| m.is_match(ua))
    }

    fn ip_matches(&self, ip: &str) -> bool {
        if self.ip_exact.contains(ip) {
            return true;
        }
        match ip.parse::<IpAddr>() {
            Ok(addr) => self.ip_cidr.iter().any(|net| net.contains(&addr)),
            Err(_) => false,
        }
    }
}

pub fn load_signature_db(text: &str) -> Result<AgentSignatureDb, SignatureError> {
    #[derive(Clone, Copy)]
    enum Section {
        Ua,
        Ip,
    }

    let mut section = None;
    let mut uas = Vec::new();
    let mut ips = Vec::new();
    let mut nets = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = match &line[1..line.len() - 1] {
                "ua" => Some(Section::Ua),
                "ip" => Some(Section::Ip),
                other => {
                    return Err(SignatureError::BadSection {
                        line: line_no,
                        header: other.to_string(),
                    })
                }
            };
            continue;
        }
        match section {
            None => return Err(SignatureError::NoSection { line: line_no }),
            Some(Section::Ua) => uas.push(line.to_string()),
            Some(Section::Ip) if line.contains('/') => {
                let net: IpNet = line.parse().map_err(|_| SignatureError::BadCidr {
                    line: line_no,
                    value: line.to_string(),
                })?;
                nets.push(net);
            }
            Some(Section::Ip) => ips.push(line.to_string()),
        }
    }
    Ok(AgentSignatureDb::new(uas, ips, nets))
}

fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

pub fn classify(record: &LogRecord, db: &AgentSignatureDb) -> TrafficClass {
    let by_ua = record.user_agent.as_deref().is_some_and(|ua| db.ua_matches(ua));
    let by_ip = record.client_ip.as_deref().is_some_and(|ip| db.ip_matches(ip));
    if by_ua || by_ip {
        TrafficClass::Robot
    } else {
        TrafficClass::Human
    }
}

#[derive(Debug, Default, Clone)]
pub struct SplitStream {
    pub humans: Vec<LogRecord>,
    pub robots: Vec<LogRecord>,
    /// Records carrying neither a user agent nor a client IP. Counted as human.
    pub unidentified: usize,
}

pub fn split_stream<I>(records: I, db: &AgentSignatureDb) -> SplitStream
where
    I: IntoIterator<Item = LogRecord>,
{
    let mut out = SplitStream::default();
    for rec in records {
        if rec.user_agent.is_none() && rec.client_ip.is_none() {
            out.unidentified += 1;
        }
        match classify(&rec, db) {
            TrafficClass::Human => out.humans.push(rec),
            TrafficClass::Robot => out.robots.push(rec),
        }
    }
    out
}
