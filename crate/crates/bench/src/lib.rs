//! Seeded synthetic inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sessgraph::LogRecord;

pub const SAMPLE_LINE: &str = r#"- - [02/Apr/2016:00:00:09 -0400] "GET /path/to/some/resource HTTP/1.1" 200 5972 "http://www.example.com/refererpage.html" "Mozilla/5.0 (iPhone; CPU iPhone OS 7_0 like Mac OS X)" "11.111.111.111""#;

/// `n` requests from `agents` agents over `pages` resources, roughly one
/// request a minute per agent with occasional long pauses.
pub fn synthetic_records(n: usize, agents: usize, pages: usize, seed: u64) -> Vec<LogRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clock = vec![1_459_569_609i64; agents];
    (0..n)
        .map(|i| {
            let a = rng.random_range(0..agents);
            clock[a] += if rng.random_bool(0.05) {
                7200
            } else {
                rng.random_range(1..120)
            };
            LogRecord {
                timestamp: clock[a],
                utc_offset: 0,
                method: "GET".into(),
                path: format!("/p/{}", rng.random_range(0..pages)),
                protocol: "HTTP/1.1".into(),
                status: 200,
                size: Some(1000),
                referer: None,
                user_agent: Some(format!("agent-{a}")),
                client_ip: Some(format!("10.0.{}.{}", a / 256, a % 256)),
                source_line: i + 1,
            }
        })
        .collect()
}

/// Random directed edges over `n` nodes with `m` draws.
pub fn random_edges(n: usize, m: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
        .collect()
}
