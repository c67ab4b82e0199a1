use std::io::Write;

use serde::{Deserialize, Serialize};

use super::runner::{BenchRecord, Status};
use crate::error::Result;

/// Linear-interpolation quantile of sorted data (the usual "type 7").
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Boxplot statistics; whiskers reach the most extreme data within
/// 1.5·IQR of the quartiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub count: usize,
}

impl BoxStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let q25 = quantile_sorted(&v, 0.25)?;
        let q75 = quantile_sorted(&v, 0.75)?;
        let iqr = q75 - q25;
        let (lo_fence, hi_fence) = (q25 - 1.5 * iqr, q75 + 1.5 * iqr);
        Some(Self {
            median: quantile_sorted(&v, 0.5)?,
            q25,
            q75,
            whisker_low: v.iter().copied().find(|x| *x >= lo_fence).unwrap_or(q25),
            whisker_high: v.iter().rev().copied().find(|x| *x <= hi_fence).unwrap_or(q75),
            count: v.len(),
        })
    }
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub function: String,
    pub s: usize,
    pub n: usize,
    pub family: String,
    pub rank: Option<usize>,
    pub metric: String,
    pub median: Option<f64>,
    pub q25: Option<f64>,
    pub q75: Option<f64>,
    pub failures: usize,
}

type CellKey = (String, usize, usize, String, Option<usize>);

/// Per-cell quartiles of `rmse_corr` and `q2`. Failed fits are left out of
/// the statistics and counted in `failures`. Cells keep their first
/// appearance order.
pub fn summarize(records: &[BenchRecord]) -> Vec<SummaryRow> {
    let mut cells: Vec<(CellKey, Vec<&BenchRecord>)> = Vec::new();
    for r in records {
        let key = (r.function.clone(), r.s, r.n, r.family.clone(), r.rank);
        match cells.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => cells.push((key, vec![r])),
        }
    }
    let mut out = Vec::new();
    for ((function, s, n, family, rank), recs) in cells {
        let failures = recs.iter().filter(|r| r.status == Status::Failed).count();
        let metrics: [(&str, fn(&BenchRecord) -> Option<f64>); 2] =
            [("rmse_corr", |r| r.rmse_corr), ("q2", |r| r.q2)];
        for (name, get) in metrics {
            let values: Vec<f64> = recs
                .iter()
                .filter(|r| r.status != Status::Failed)
                .filter_map(|r| get(r))
                .collect();
            if values.is_empty() && failures < recs.len() {
                // metric not defined for this family (e.g. per-slice models)
                continue;
            }
            let st = BoxStats::from_values(&values);
            out.push(SummaryRow {
                function: function.clone(),
                s,
                n,
                family: family.clone(),
                rank,
                metric: name.to_string(),
                median: st.map(|b| b.median),
                q25: st.map(|b| b.q25),
                q75: st.map(|b| b.q75),
                failures,
            });
        }
    }
    out
}

pub fn write_summary<W: Write>(writer: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        w.write_record(["function", "s", "n", "family", "rank", "metric", "median", "q25", "q75", "failures"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Looks up the median of one metric for a cell.
pub fn median_of(rows: &[SummaryRow], function: &str, s: usize, n: usize, label: &str, metric: &str) -> Option<f64> {
    let (family, rank) = match label.strip_prefix("LRC") {
        Some(r) => ("LRC", r.parse().ok()),
        None => (label, None),
    };
    rows.iter()
        .find(|r| r.function == function && r.s == s && r.n == n && r.family == family && r.rank == rank && r.metric == metric)
        .and_then(|r| r.median)
}
