//! Estimators of the proportion of true nulls at one node.

use crate::error::{Error, Result};

/// Default Storey tuning parameter.
pub const DEFAULT_STOREY_LAMBDA: f64 = 0.5;

/// Which estimator produced a [`NullProportionEstimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimateMethod {
    Storey { lambda: f64 },
    Spacing { s: usize },
    /// The generative value, handed in by a test or simulation.
    OracleTruth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullProportionEstimate {
    pub value: f64,
    pub method: EstimateMethod,
}

impl NullProportionEstimate {
    pub fn oracle(r0: f64) -> Self {
        NullProportionEstimate { value: r0.clamp(0.0, 1.0), method: EstimateMethod::OracleTruth }
    }
}

/// Storey's estimator `min{(1 - G(lambda)) / (1 - lambda), 1}` with `G` the
/// empirical CDF.
pub fn storey_estimate(pvalues: &[f64], lambda: f64) -> Result<NullProportionEstimate> {
    if pvalues.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::ProbabilityOutOfRange { value: lambda });
    }
    let above = pvalues.iter().filter(|&&p| p > lambda).count();
    let tail = above as f64 / pvalues.len() as f64;
    Ok(NullProportionEstimate {
        value: (tail / (1.0 - lambda)).min(1.0),
        method: EstimateMethod::Storey { lambda },
    })
}

/// Spacing estimator `min{2s / (m Z), 1}` where `Z` is the largest gap
/// `P_(j+s) - P_(j-s)` over `s + 1 <= j <= m - s` (1-based order statistics).
pub fn spacing_estimate(pvalues: &[f64], s: usize) -> Result<NullProportionEstimate> {
    let m = pvalues.len();
    if s == 0 || m < 2 * s + 1 {
        return Err(Error::TooFewForSpacing { m, s });
    }
    let mut sorted = pvalues.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    // 0-based: gaps sorted[k + 2s] - sorted[k] for k in 0..m-2s
    let z = sorted
        .iter()
        .zip(&sorted[2 * s..])
        .map(|(lo, hi)| hi - lo)
        .fold(0.0f64, f64::max);
    if z <= 0.0 {
        return Err(Error::DegenerateSpacing);
    }
    Ok(NullProportionEstimate {
        value: (2.0 * s as f64 / (m as f64 * z)).min(1.0),
        method: EstimateMethod::Spacing { s },
    })
}

/// Window half-width `max(1, round(m^0.7))`.
pub fn default_spacing_schedule(m: usize) -> usize {
    ((m as f64).powf(0.7).round() as usize).max(1)
}

/// Estimator selection used by the protocols and the experiment harness.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum EstimatorChoice {
    Storey { lambda: f64 },
    /// Spacing estimator with the window from [`default_spacing_schedule`],
    /// capped at `(m - 1) / 2` so the estimator stays defined on small nodes.
    #[default]
    Spacing,
    SpacingFixed { s: usize },
    OracleTruth,
}

impl EstimatorChoice {
    /// Estimates `r0` for one node. `true_r0` is only consulted by
    /// [`EstimatorChoice::OracleTruth`].
    pub fn estimate(&self, pvalues: &[f64], true_r0: f64) -> Result<NullProportionEstimate> {
        match *self {
            EstimatorChoice::Storey { lambda } => storey_estimate(pvalues, lambda),
            EstimatorChoice::Spacing => {
                let m = pvalues.len();
                let s = default_spacing_schedule(m).min(m.saturating_sub(1) / 2).max(1);
                spacing_estimate(pvalues, s)
            }
            EstimatorChoice::SpacingFixed { s } => spacing_estimate(pvalues, s),
            EstimatorChoice::OracleTruth => Ok(NullProportionEstimate::oracle(true_r0)),
        }
    }

    pub fn name(&self) -> String {
        match self {
            EstimatorChoice::Storey { lambda } => format!("storey:{lambda}"),
            EstimatorChoice::Spacing => "spacing".to_string(),
            EstimatorChoice::SpacingFixed { s } => format!("spacing:{s}"),
            EstimatorChoice::OracleTruth => "oracle".to_string(),
        }
    }

    /// Parses `storey`, `storey:<lambda>`, `spacing`, `spacing:<s>` or `oracle`.
    pub fn parse(text: &str) -> Option<Self> {
        let (head, arg) = match text.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (text, None),
        };
        match (head.trim(), arg) {
            ("storey", None) => Some(EstimatorChoice::Storey { lambda: DEFAULT_STOREY_LAMBDA }),
            ("storey", Some(a)) => a.trim().parse().ok().filter(|l: &f64| *l > 0.0 && *l < 1.0).map(|lambda| EstimatorChoice::Storey { lambda }),
            ("spacing", None) => Some(EstimatorChoice::Spacing),
            ("spacing", Some(a)) => a.trim().parse().ok().filter(|&s: &usize| s > 0).map(|s| EstimatorChoice::SpacingFixed { s }),
            ("oracle", None) => Some(EstimatorChoice::OracleTruth),
            _ => None,
        }
    }
}
