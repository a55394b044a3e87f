use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};

/// One row of a degree frequency plot. `ccdf` is `P(X >= degree)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub degree: u64,
    pub count: u64,
    pub pmf: f64,
    pub ccdf: f64,
}

pub fn frequency_table(values: &[u64]) -> Vec<FrequencyRow> {
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for &v in values {
        *counts.entry(v).or_default() += 1;
    }
    let n = values.len() as f64;
    let mut remaining = values.len() as u64;
    counts
        .into_iter()
        .map(|(degree, count)| {
            let row = FrequencyRow {
                degree,
                count,
                pmf: count as f64 / n,
                ccdf: remaining as f64 / n,
            };
            remaining -= count;
            row
        })
        .collect()
}

/// `degree,count,pmf,ccdf`
pub fn write_frequency_csv<W: io::Write>(rows: &[FrequencyRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
