//! Seeded generators of raw measurement data whose aggregates reproduce the
//! reference case figures to two decimals.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::metrics::{FindingCounts, MetricAggregates, ModuleMetricsRow, FINDING_TAGS};
use crate::error::{Error, Result};

/// Splits `total` into `parts` non-negative integers with random weights.
fn split(rng: &mut ChaCha8Rng, total: u64, parts: usize) -> Vec<u64> {
    let weights: Vec<f64> = (0..parts).map(|_| rng.gen_range(0.2..1.0)).collect();
    let sum: f64 = weights.iter().sum();
    let mut out: Vec<u64> = weights.iter().map(|w| (total as f64 * w / sum).floor() as u64).collect();
    let mut rest = total - out.iter().sum::<u64>();
    let mut i = 0;
    while rest > 0 {
        out[i % parts] += 1;
        rest -= 1;
        i += 1;
    }
    out
}

/// Module rows whose comment ratio, average cyclomatic complexity and
/// average module size round to `target`.
pub fn module_metrics(target: &MetricAggregates, modules: usize, seed: u64) -> Result<Vec<ModuleMetricsRow>> {
    if modules == 0 {
        return Err(Error::InvalidData("need at least one module".into()));
    }
    let MetricAggregates {
        comment_ratio,
        avg_cyclomatic_complexity,
        avg_module_size,
    } = *target;
    if !(0.0..1.0).contains(&comment_ratio) || avg_cyclomatic_complexity < 1.0 || avg_module_size < 1.0 {
        return Err(Error::InvalidData(format!("unreachable aggregates {target:?}")));
    }
    let n = modules as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total_loc = (avg_module_size * n as f64).round() as u64;
    let total_cc = (avg_cyclomatic_complexity * n as f64).round() as u64;
    let total_comments = (comment_ratio * total_loc as f64).round() as u64;
    if total_loc < n || total_cc < n {
        return Err(Error::InvalidData(format!("unreachable aggregates {target:?}")));
    }

    let loc: Vec<u64> = split(&mut rng, total_loc - n, modules).into_iter().map(|l| l + 1).collect();
    let cc: Vec<u64> = split(&mut rng, total_cc - n, modules).into_iter().map(|c| c + 1).collect();
    let mut comments: Vec<u64> = loc.iter().map(|&l| l * total_comments / total_loc).collect();
    let mut rest = total_comments - comments.iter().sum::<u64>();
    for (c, &l) in comments.iter_mut().zip(&loc) {
        if rest == 0 {
            break;
        }
        if *c < l {
            *c += 1;
            rest -= 1;
        }
    }

    Ok((0..modules)
        .map(|i| ModuleMetricsRow {
            module: format!("m{:04}", i + 1),
            loc: loc[i],
            sloc: loc[i] - comments[i],
            comment_lines: comments[i],
            cyclomatic_complexity: cc[i],
        })
        .collect())
}

/// Finding counts whose densities per KSLOC round to the given values.
pub fn finding_counts(densities: &[(&str, f64)], sloc: u64) -> Result<FindingCounts> {
    if sloc == 0 {
        return Err(Error::InvalidData("sloc must be positive".into()));
    }
    let mut counts = BTreeMap::new();
    for &(tag, density) in densities {
        let tag = tag.to_ascii_uppercase();
        if !FINDING_TAGS.contains(&tag.as_str()) {
            return Err(Error::InvalidData(format!("unknown metric tag `{tag}`")));
        }
        if !(density >= 0.0) {
            return Err(Error::InvalidData(format!("negative density for {tag}")));
        }
        counts.insert(tag, (density * sloc as f64 / 1000.0).round() as u64);
    }
    Ok(FindingCounts { counts, sloc })
}
