//! Time-gap sessionization.
//!
//! Requests are grouped by agent (user agent plus client IP), ordered by
//! time, and cut wherever two consecutive requests are at least `cutoff`
//! seconds apart.

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::num::NonZeroU64;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::logparse::{resource_key, LogRecord, PathPolicy};

/// Thirty minutes.
pub const DEFAULT_CUTOFF: NonZeroU64 = NonZeroU64::new(1800).unwrap();

/// Requester identity. `None` fields compare equal to each other.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentKey {
    pub user_agent: Option<String>,
    pub client_ip: Option<String>,
}

impl AgentKey {
    pub fn of(record: &LogRecord) -> Self {
        AgentKey {
            user_agent: record.user_agent.clone(),
            client_ip: record.client_ip.clone(),
        }
    }

    /// Stable 64-bit digest, hex encoded, for exports that should not carry
    /// raw agent strings.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for part in [&self.user_agent, &self.client_ip] {
            match part {
                Some(s) => {
                    h.update([1u8]);
                    h.update(s.as_bytes());
                }
                None => h.update([0u8]),
            }
            h.update([0xffu8]);
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub resource: String,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub agent: AgentKey,
    pub requests: Vec<Request>,
}

impl Session {
    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn start(&self) -> i64 {
        self.requests[0].timestamp
    }

    pub fn end(&self) -> i64 {
        self.requests[self.requests.len() - 1].timestamp
    }
}

/// Splits records into sessions. Output is ordered by agent key, then time.
/// Requests with equal timestamps keep their input order.
pub fn sessionize(records: &[LogRecord], cutoff: NonZeroU64, policy: PathPolicy) -> Vec<Session> {
    let cutoff = i64::try_from(cutoff.get()).unwrap_or(i64::MAX);
    let mut by_agent: BTreeMap<AgentKey, Vec<&LogRecord>> = BTreeMap::new();
    for rec in records {
        by_agent.entry(AgentKey::of(rec)).or_default().push(rec);
    }

    let mut sessions = Vec::new();
    for (agent, mut recs) in by_agent {
        recs.sort_by_key(|r| r.timestamp);
        let mut current: Vec<Request> = Vec::new();
        let mut last = i64::MIN;
        for rec in recs {
            if !current.is_empty() && rec.timestamp.saturating_sub(last) >= cutoff {
                sessions.push(Session {
                    agent: agent.clone(),
                    requests: std::mem::take(&mut current),
                });
            }
            current.push(Request {
                resource: resource_key(rec, policy).to_string(),
                timestamp: rec.timestamp,
            });
            last = rec.timestamp;
        }
        if !current.is_empty() {
            sessions.push(Session {
                agent,
                requests: current,
            });
        }
    }
    sessions
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficSummary {
    pub request_count: u64,
    pub session_count: u64,
    pub agent_count: u64,
    pub ip_count: u64,
    pub resource_count: u64,
    pub start_time: Option<i64>,
    pub end_time: Option<i64>,
}

pub fn summarize(records: &[LogRecord], sessions: &[Session]) -> TrafficSummary {
    let agents: BTreeSet<AgentKey> = records.iter().map(AgentKey::of).collect();
    let ips: BTreeSet<&str> = records.iter().filter_map(|r| r.client_ip.as_deref()).collect();
    let resources: BTreeSet<&str> = sessions
        .iter()
        .flat_map(|s| s.requests.iter().map(|r| r.resource.as_str()))
        .collect();
    TrafficSummary {
        request_count: records.len() as u64,
        session_count: sessions.len() as u64,
        agent_count: agents.len() as u64,
        ip_count: ips.len() as u64,
        resource_count: resources.len() as u64,
        start_time: records.iter().map(|r| r.timestamp).min(),
        end_time: records.iter().map(|r| r.timestamp).max(),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SessionRow {
    session_id: usize,
    agent_hash: String,
    start_ts: i64,
    length: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct RequestRow {
    session_id: usize,
    position: usize,
    timestamp: i64,
    resource: String,
}

/// `session_id,agent_hash,start_ts,length`
pub fn write_sessions_csv<W: io::Write>(sessions: &[Session], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (id, s) in sessions.iter().enumerate() {
        w.serialize(SessionRow {
            session_id: id,
            agent_hash: s.agent.digest(),
            start_ts: s.start(),
            length: s.len(),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// `session_id,position,timestamp,resource`: one row per request, enough to
/// rebuild the session graph without the original log.
pub fn write_requests_csv<W: io::Write>(sessions: &[Session], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (id, s) in sessions.iter().enumerate() {
        for (pos, r) in s.requests.iter().enumerate() {
            w.serialize(RequestRow {
                session_id: id,
                position: pos,
                timestamp: r.timestamp,
                resource: r.resource.clone(),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a requests CSV back. Agent identity is not stored there, so the
/// returned sessions carry an empty [`AgentKey`].
pub fn read_requests_csv<R: io::Read>(input: R) -> csv::Result<Vec<Session>> {
    let mut rd = csv::Reader::from_reader(input);
    let mut sessions: Vec<Session> = Vec::new();
    let mut last_id = None;
    for row in rd.deserialize() {
        let row: RequestRow = row?;
        if last_id != Some(row.session_id) {
            sessions.push(Session {
                agent: AgentKey::default(),
                requests: Vec::new(),
            });
            last_id = Some(row.session_id);
        }
        sessions.last_mut().unwrap().requests.push(Request {
            resource: row.resource,
            timestamp: row.timestamp,
        });
    }
    Ok(sessions)
}
