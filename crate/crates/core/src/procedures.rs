//! The BH family, proportion-matching calibration, asymptotic thresholds and
//! confusion metrics.

use crate::distmodel::LabeledSample;
use crate::error::{Error, Result};
use crate::estimators::NullProportionEstimate;

/// Rejections made at one node (or on one pooled vector).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RejectionOutcome {
    /// Rejected p-value indices, ascending.
    pub rejected: Vec<usize>,
    /// Rejection threshold for threshold-type procedures: every rejected
    /// p-value is `<= tau` and every other one is `> tau`. `None` for
    /// interval-type rejections.
    pub tau: Option<f64>,
}

impl RejectionOutcome {
    pub fn none() -> Self {
        RejectionOutcome { rejected: Vec::new(), tau: Some(0.0) }
    }

    /// Number of rejections.
    pub fn k_hat(&self) -> usize {
        self.rejected.len()
    }
}

/// Benjamini-Hochberg step-up procedure.
///
/// `k_hat` is the largest `k` with `P_(k) <= alpha k / m` (0 if none); all
/// p-values `<= tau = alpha k_hat / m` are rejected, ties included.
pub fn bh_procedure(pvalues: &[f64], alpha: f64) -> RejectionOutcome {
    let m = pvalues.len();
    if m == 0 {
        return RejectionOutcome::none();
    }
    let mf = m as f64;
    let step_up = |sorted: &mut [f64]| {
        sorted.sort_unstable_by(f64::total_cmp);
        (1..=m).rev().find(|&k| sorted[k - 1] <= alpha * k as f64 / mf).unwrap_or(0)
    };
    // short vectors sort on the stack
    let k_hat = if m <= 32 {
        let mut buf = [0.0; 32];
        buf[..m].copy_from_slice(pvalues);
        step_up(&mut buf[..m])
    } else {
        step_up(&mut pvalues.to_vec())
    };
    let tau = alpha * k_hat as f64 / mf;
    let rejected = if k_hat == 0 {
        Vec::new()
    } else {
        (0..m).filter(|&i| pvalues[i] <= tau).collect()
    };
    debug_assert_eq!(rejected.len(), k_hat);
    RejectionOutcome { rejected, tau: Some(tau) }
}

/// BH at level `min(alpha / r0_hat, 1)`.
pub fn adaptive_bh(pvalues: &[f64], alpha: f64, estimate: &NullProportionEstimate) -> Result<RejectionOutcome> {
    if estimate.value <= 0.0 {
        return Err(Error::ZeroNullEstimate);
    }
    Ok(bh_procedure(pvalues, adapted_level(alpha, estimate.value)))
}

/// `min(alpha / r0, 1)`.
pub fn adapted_level(alpha: f64, r0: f64) -> f64 {
    (alpha / r0).min(1.0)
}

/// Slope `beta(alpha; r0) = ((1/alpha) - r0) / (1 - r0)` of the line whose
/// largest crossing with the alternative CDF gives the asymptotic BH threshold.
pub fn beta_slope(alpha: f64, r0: f64) -> Result<f64> {
    if r0 >= 1.0 {
        return Err(Error::AllNull);
    }
    Ok((1.0 / alpha - r0) / (1.0 - r0))
}

/// Local test size `1 / ((1 - r0) beta + r0)` that reproduces slope `beta`
/// at a node with null proportion `r0`.
pub fn local_alpha(beta_star: f64, r0_local: f64) -> f64 {
    1.0 / ((1.0 - r0_local) * beta_star + r0_local)
}

/// Upper clamp on the pooled null proportion estimate.
pub const R0_STAR_CLAMP: f64 = 1.0 - 1e-6;

/// Proportion-matching calibration shared by every node.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub r0_star_hat: f64,
    pub beta_star_hat: f64,
    pub alpha_locals: Vec<f64>,
}

/// The integer message `floor(r0 m + 1/2)` a node sends instead of `r0`.
pub fn rounded_null_count(r0_hat: f64, m: usize) -> u64 {
    (r0_hat * m as f64 + 0.5).floor() as u64
}

/// Calibration from real-valued per-node estimates:
/// `r0* = (1/m) sum r0_i m_i`, `beta* = beta(alpha; r0*)`, `alpha_i = local_alpha(beta*, r0_i)`.
pub fn calibrate_proportion_matching(counts: &[usize], estimates: &[f64], alpha: f64) -> Result<Calibration> {
    check_calibration_inputs(counts, estimates)?;
    let m: usize = counts.iter().sum();
    let r0_star = counts.iter().zip(estimates).map(|(&c, &r)| r * c as f64).sum::<f64>() / m as f64;
    Ok(calibration_from_r0_star(r0_star, estimates, alpha))
}

/// Same as [`calibrate_proportion_matching`] but with `r0*` formed from the
/// rounded integer null counts, as a node sees it after the broadcast.
pub fn calibrate_proportion_matching_integer(counts: &[usize], estimates: &[f64], alpha: f64) -> Result<Calibration> {
    check_calibration_inputs(counts, estimates)?;
    let m: usize = counts.iter().sum();
    let m0: u64 = counts.iter().zip(estimates).map(|(&c, &r)| rounded_null_count(r, c)).sum();
    Ok(calibration_from_r0_star(m0 as f64 / m as f64, estimates, alpha))
}

fn check_calibration_inputs(counts: &[usize], estimates: &[f64]) -> Result<()> {
    if counts.len() != estimates.len() {
        return Err(Error::ShapeMismatch(format!("{} counts vs {} estimates", counts.len(), estimates.len())));
    }
    if counts.is_empty() || counts.contains(&0) {
        return Err(Error::InvalidModel("per-node counts must be positive".into()));
    }
    if let Some(&r) = estimates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::ProbabilityOutOfRange { value: r });
    }
    if estimates.iter().all(|&r| r >= 1.0) {
        return Err(Error::NoSignal);
    }
    Ok(())
}

/// Builds the calibration from an already aggregated `r0*` (clamped to
/// [`R0_STAR_CLAMP`]).
pub fn calibration_from_r0_star(r0_star: f64, estimates: &[f64], alpha: f64) -> Calibration {
    let r0_star = r0_star.min(R0_STAR_CLAMP);
    let beta = (1.0 / alpha - r0_star) / (1.0 - r0_star);
    Calibration {
        r0_star_hat: r0_star,
        beta_star_hat: beta,
        alpha_locals: estimates.iter().map(|&r| local_alpha(beta, r)).collect(),
    }
}

/// Number of uniform grid points scanned by [`sup_crossing`].
pub const THRESHOLD_GRID: usize = 10_000;

/// Largest `t` in (0, 1] with `cdf(t) = slope * t`, or 0 when the curve
/// never reaches the line above 0.
///
/// Scans a uniform grid downward from `t = 1` for the first point where
/// `cdf(t) >= slope t`, then bisects the bracketing cell. Scanning from the
/// top finds the supremum even when the curves cross several times. Below
/// the first grid cell a dyadic scan catches very small crossings.
pub fn sup_crossing<F: Fn(f64) -> f64>(cdf: F, slope: f64) -> f64 {
    let d = |t: f64| cdf(t) - slope * t;
    let n = THRESHOLD_GRID;
    if d(1.0) >= 0.0 {
        return 1.0;
    }
    let mut bracket = None;
    for k in (1..n).rev() {
        let t = k as f64 / n as f64;
        if d(t) >= 0.0 {
            bracket = Some((t, (k + 1) as f64 / n as f64));
            break;
        }
    }
    if bracket.is_none() {
        let mut hi = 1.0 / n as f64;
        for _ in 0..200 {
            let lo = hi * 0.5;
            if lo < 1e-300 {
                break;
            }
            if d(lo) >= 0.0 {
                bracket = Some((lo, hi));
                break;
            }
            hi = lo;
        }
    }
    let Some((mut lo, mut hi)) = bracket else {
        return 0.0;
    };
    while hi - lo > 1e-12f64.max(1e-10 * hi) * 0.5 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if d(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Asymptotic BH threshold `sup{t : G(t) = t / alpha}` for a continuous
/// mixture CDF `G`.
pub fn asymptotic_threshold<F: Fn(f64) -> f64>(mixture_cdf: F, alpha: f64) -> f64 {
    sup_crossing(mixture_cdf, 1.0 / alpha)
}

/// Counts and proportions of one set of rejections.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConfusionMetrics {
    /// Rejections.
    pub r: usize,
    /// False rejections.
    pub v: usize,
    /// Alternatives present.
    pub m1: usize,
    pub fdp: f64,
    pub tdp: f64,
}

impl ConfusionMetrics {
    pub fn from_counts(r: usize, v: usize, m1: usize) -> Self {
        ConfusionMetrics {
            r,
            v,
            m1,
            fdp: v as f64 / r.max(1) as f64,
            tdp: (r - v) as f64 / m1.max(1) as f64,
        }
    }
}

/// Global (pooled counts) and per-node metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkMetrics {
    pub global: ConfusionMetrics,
    pub per_node: Vec<ConfusionMetrics>,
}

impl NetworkMetrics {
    /// The mediant inequality `sum V / (1 v sum R) <= max_i V_i / (1 v R_i)`.
    pub fn pooling_inequality_holds(&self) -> bool {
        let max_node = self.per_node.iter().map(|m| m.fdp).fold(0.0, f64::max);
        self.global.fdp <= max_node
    }
}

/// Scores per-node outcomes against the ground-truth labels.
pub fn confusion_metrics(outcomes: &[RejectionOutcome], sample: &LabeledSample) -> Result<NetworkMetrics> {
    if outcomes.len() != sample.nodes.len() {
        return Err(Error::ShapeMismatch(format!("{} outcomes for {} nodes", outcomes.len(), sample.nodes.len())));
    }
    let mut per_node = Vec::with_capacity(outcomes.len());
    for (node, (out, s)) in outcomes.iter().zip(&sample.nodes).enumerate() {
        let mut v = 0;
        for &i in &out.rejected {
            match s.is_null.get(i) {
                Some(true) => v += 1,
                Some(false) => {}
                None => return Err(Error::IndexOutOfRange { node, index: i, len: s.len() }),
            }
        }
        per_node.push(ConfusionMetrics::from_counts(out.k_hat(), v, s.alt_count()));
    }
    let (r, v, m1) = per_node.iter().fold((0, 0, 0), |(r, v, m1), c| (r + c.r, v + c.v, m1 + c.m1));
    Ok(NetworkMetrics { global: ConfusionMetrics::from_counts(r, v, m1), per_node })
}
