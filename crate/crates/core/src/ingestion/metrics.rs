//! Aggregation of raw per-module metrics and finding counts into indicator
//! observations.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleMetricsRow {
    pub module: String,
    pub loc: u64,
    pub sloc: u64,
    pub comment_lines: u64,
    pub cyclomatic_complexity: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregates {
    pub comment_ratio: f64,
    pub avg_cyclomatic_complexity: f64,
    pub avg_module_size: f64,
}

/// Comment ratio is total comment lines over total LOC; the other two are
/// plain means over modules.
pub fn aggregate_metrics(rows: &[ModuleMetricsRow]) -> Result<MetricAggregates> {
    if rows.is_empty() {
        return Err(Error::InvalidData("no module rows".into()));
    }
    if let Some(r) = rows.iter().find(|r| r.sloc > r.loc) {
        return Err(Error::InvalidData(format!("module `{}` has sloc > loc", r.module)));
    }
    let n = rows.len() as f64;
    let loc: u64 = rows.iter().map(|r| r.loc).sum();
    let comments: u64 = rows.iter().map(|r| r.comment_lines).sum();
    let cc: u64 = rows.iter().map(|r| r.cyclomatic_complexity).sum();
    Ok(MetricAggregates {
        comment_ratio: if loc == 0 { 0.0 } else { comments as f64 / loc as f64 },
        avg_cyclomatic_complexity: cc as f64 / n,
        avg_module_size: loc as f64 / n,
    })
}

/// Occurrences per thousand source lines.
pub fn density_per_ksloc(count: u64, sloc: u64) -> Result<f64> {
    if sloc == 0 {
        return Err(Error::InvalidData("sloc must be positive".into()));
    }
    Ok(1000.0 * count as f64 / sloc as f64)
}

/// Reads `module,loc,sloc,comment_lines,cyclomatic_complexity`.
pub fn read_metrics_csv(reader: impl Read) -> Result<Vec<ModuleMetricsRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let expected = ["module", "loc", "sloc", "comment_lines", "cyclomatic_complexity"];
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::InvalidData(format!(
            "expected header `{}`",
            expected.join(",")
        )));
    }
    let rows = rdr.deserialize().collect::<Result<Vec<ModuleMetricsRow>, _>>()?;
    Ok(rows)
}

pub fn write_metrics_csv(rows: &[ModuleMetricsRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

/// Pattern-finding counts per metric tag plus the system size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FindingCounts {
    pub counts: BTreeMap<String, u64>,
    pub sloc: u64,
}

pub const FINDING_TAGS: [&str; 6] = ["OJI", "FDL", "FDI", "FZL", "COS", "DWS"];

impl FindingCounts {
    pub fn densities(&self) -> Result<BTreeMap<String, f64>> {
        self.counts
            .iter()
            .map(|(tag, &c)| Ok((tag.clone(), density_per_ksloc(c, self.sloc)?)))
            .collect()
    }
}

/// Reads `metric_tag,count` rows terminated by a `sloc,<n>` row.
pub fn read_findings_csv(reader: impl Read) -> Result<FindingCounts> {
    let mut rdr = csv::Reader::from_reader(reader);
    if rdr.headers()?.iter().collect::<Vec<_>>() != ["metric_tag", "count"] {
        return Err(Error::InvalidData("expected header `metric_tag,count`".into()));
    }
    let mut counts = BTreeMap::new();
    let mut sloc = None;
    for record in rdr.records() {
        let record = record?;
        let tag = record.get(0).unwrap_or("").trim();
        let value: u64 = record
            .get(1)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| Error::InvalidData(format!("bad count for `{tag}`")))?;
        if sloc.is_some() {
            return Err(Error::InvalidData("rows after the sloc footer".into()));
        }
        if tag == "sloc" {
            sloc = Some(value);
        } else if FINDING_TAGS.contains(&tag) {
            counts.insert(tag.to_string(), value);
        } else {
            return Err(Error::InvalidData(format!("unknown metric tag `{tag}`")));
        }
    }
    let sloc = sloc.ok_or_else(|| Error::InvalidData("missing sloc footer row".into()))?;
    if sloc == 0 {
        return Err(Error::InvalidData("sloc must be positive".into()));
    }
    Ok(FindingCounts { counts, sloc })
}

pub fn write_findings_csv(findings: &FindingCounts) -> String {
    let mut out = String::from("metric_tag,count\n");
    for tag in FINDING_TAGS {
        if let Some(c) = findings.counts.get(tag) {
            out.push_str(&format!("{tag},{c}\n"));
        }
    }
    out.push_str(&format!("sloc,{}\n", findings.sloc));
    out
}
