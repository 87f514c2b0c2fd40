//! Fitting the change-effort table to a target prior mean and sd.

use super::cases::{EFFORT_BINS, EFFORT_PRIOR_MEAN, EFFORT_PRIOR_SD, EFFORT_RANGE};
use crate::engine::dist::{bin_midpoints, discretize, uniform_edges};
use crate::engine::{compile, infer_node, BayesianNetwork, Distribution, Evidence, Summary};
use crate::error::{Error, Result};

/// Effort means `(centre + spread, centre, centre - spread)` for low,
/// medium, high maintainability, all with one variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffortCalibration {
    pub centre: f64,
    pub spread: f64,
    pub variance: f64,
}

impl EffortCalibration {
    pub fn initial(spread: f64) -> Self {
        EffortCalibration {
            centre: EFFORT_PRIOR_MEAN,
            spread,
            variance: 100.0,
        }
    }

    pub fn params(&self) -> [(f64, f64); 3] {
        [
            (self.centre + self.spread, self.variance),
            (self.centre, self.variance),
            (self.centre - self.spread, self.variance),
        ]
    }
}

struct Mixture {
    weights: Vec<f64>,
    edges: Vec<f64>,
    mids: Vec<f64>,
    labels: Vec<String>,
}

impl Mixture {
    fn summary(&self, cal: &EffortCalibration) -> Result<Summary> {
        let mut probs = vec![0.0; self.mids.len()];
        for (w, (mean, var)) in self.weights.iter().zip(cal.params()) {
            let (lo, hi) = EFFORT_RANGE;
            let bins = discretize(&Distribution::tnormal(mean, var, lo, hi), &self.edges)?;
            for (p, b) in probs.iter_mut().zip(bins) {
                *p += w * b;
            }
        }
        Ok(Summary::from_probabilities(&probs, &self.mids, &self.labels))
    }
}

fn bisect(mut lo: f64, mut hi: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo.signum() == fhi.signum() {
        return Err(Error::Calibration(format!(
            "target not bracketed on [{lo}, {hi}]"
        )));
    }
    let rising = fhi > flo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        if (v > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Finds centre and variance so the change-effort prior hits the target
/// mean and sd. `network` must contain `activity` with three states.
pub fn calibrate_effort(network: &BayesianNetwork, activity: &str, spread: f64) -> Result<EffortCalibration> {
    let compiled = compile(network)?;
    let prior = infer_node(&compiled, &Evidence::new(), activity)?;
    if prior.probabilities.len() != 3 {
        return Err(Error::Calibration(format!("{activity} must have three states")));
    }
    let (lo, hi) = EFFORT_RANGE;
    let edges = uniform_edges(lo, hi, EFFORT_BINS);
    let mix = Mixture {
        weights: prior.probabilities.clone(),
        mids: bin_midpoints(&edges),
        labels: (0..EFFORT_BINS).map(|i| i.to_string()).collect(),
        edges,
    };
    let fit_centre = |variance: f64| -> Result<f64> {
        bisect(lo, hi, |centre| {
            Ok(mix.summary(&EffortCalibration { centre, spread, variance })?.mean - EFFORT_PRIOR_MEAN)
        })
    };
    let variance = bisect(1.0, 400.0, |variance| {
        let centre = fit_centre(variance)?;
        Ok(mix.summary(&EffortCalibration { centre, spread, variance })?.sd - EFFORT_PRIOR_SD)
    })?;
    let centre = fit_centre(variance)?;
    Ok(EffortCalibration { centre, spread, variance })
}
