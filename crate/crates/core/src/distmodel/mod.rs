//! Generative p-value models.
//!
//! Every node draws p-values from a two-component mixture: uniform nulls with
//! weight `r0` and one-sided p-values of a shifted Gaussian or Cauchy
//! statistic with weight `1 - r0`. This module provides the exact CDFs and
//! densities of those p-values and the per-trial sampler.

mod normal;
mod sample;

use std::f64::consts::PI;

pub use normal::{normal_pdf, normal_tail, normal_tail_inv};
pub(crate) use normal::normal_tail_inv_unchecked;
pub use sample::{sample_trial, Dependence, LabeledSample, NodeSample, SampleSizes, SamplingPlan, TrialSeed};

use crate::error::{Error, Result};

/// Family of the test statistic under the alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AltKind {
    GaussianLocation,
    CauchyLocation,
}

impl AltKind {
    pub fn name(self) -> &'static str {
        match self {
            AltKind::GaussianLocation => "gaussian",
            AltKind::CauchyLocation => "cauchy",
        }
    }
}

/// Distribution of a one-sided p-value computed for a location-shifted
/// statistic `X ~ family(mu, 1)` against the null `mu = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlternativeModel {
    pub kind: AltKind,
    pub mu: f64,
}

impl AlternativeModel {
    pub fn gaussian(mu: f64) -> Self {
        AlternativeModel { kind: AltKind::GaussianLocation, mu }
    }

    pub fn cauchy(mu: f64) -> Self {
        AlternativeModel { kind: AltKind::CauchyLocation, mu }
    }

    /// Same family with a different location.
    pub fn with_mu(self, mu: f64) -> Self {
        AlternativeModel { mu, ..self }
    }

    /// CDF of the p-value, total on [0, 1] (clamped outside).
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        match self.kind {
            AltKind::GaussianLocation => {
                normal_tail(normal_tail_inv_unchecked(t) - self.mu)
            }
            AltKind::CauchyLocation => {
                // 1/2 - atan(cot(pi t) - mu)/pi, rewritten to keep precision near 0.
                let (s, c) = (PI * t).sin_cos();
                (s.atan2(c - self.mu * s) / PI).clamp(0.0, 1.0)
            }
        }
    }

    /// `1 - cdf(t)` without cancellation when the CDF is close to 1.
    pub fn sf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        if t >= 1.0 {
            return 0.0;
        }
        match self.kind {
            AltKind::GaussianLocation => normal_tail(self.mu - normal_tail_inv_unchecked(t)),
            AltKind::CauchyLocation => {
                let (s, c) = (PI * t).sin_cos();
                (s.atan2(self.mu * s - c) / PI).clamp(0.0, 1.0)
            }
        }
    }

    /// Density of the p-value on the open interval (0, 1).
    pub fn pdf(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::DensityAtEndpoint(t));
        }
        Ok(self.density(t))
    }

    /// Density without the endpoint check. May be infinite at 0 or 1.
    pub(crate) fn density(&self, t: f64) -> f64 {
        match self.kind {
            AltKind::GaussianLocation => {
                let mu = self.mu;
                if mu == 0.0 {
                    return 1.0;
                }
                (-0.5 * mu * mu + mu * normal_tail_inv_unchecked(t)).exp()
            }
            AltKind::CauchyLocation => {
                // (cot^2 + 1) / ((cot - mu)^2 + 1) with sin^2 cleared.
                let (s, c) = (PI * t).sin_cos();
                let a = c - self.mu * s;
                1.0 / (a * a + s * s)
            }
        }
    }
}

/// One leaf node of the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeModel {
    /// Probability that a p-value lands at this node.
    pub q: f64,
    /// Proportion of true nulls.
    pub r0: f64,
    pub alt: AlternativeModel,
}

impl NodeModel {
    pub fn new(q: f64, r0: f64, alt: AlternativeModel) -> Self {
        NodeModel { q, r0, alt }
    }

    pub fn r1(&self) -> f64 {
        1.0 - self.r0
    }

    /// Mixture CDF `G(t) = r0 t + r1 F(t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        self.r0 * t + self.r1() * self.alt.cdf(t)
    }

    /// Mixture density `g(t) = r0 + r1 f(t)` on (0, 1).
    pub fn pdf(&self, t: f64) -> Result<f64> {
        Ok(self.r0 + self.r1() * self.alt.pdf(t)?)
    }
}

/// The generative truth for the whole network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    nodes: Vec<NodeModel>,
}

impl NetworkModel {
    /// Validates and wraps the node list.
    ///
    /// Weights must be positive and sum to one; `r0` may equal 1 to describe
    /// an all-null node.
    pub fn new(nodes: Vec<NodeModel>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidModel("network needs at least one node".into()));
        }
        for (i, n) in nodes.iter().enumerate() {
            if !(n.q > 0.0 && n.q <= 1.0) {
                return Err(Error::InvalidModel(format!("node {}: q = {} not in (0, 1]", i + 1, n.q)));
            }
            if !(n.r0 > 0.0 && n.r0 <= 1.0) {
                return Err(Error::InvalidModel(format!("node {}: r0 = {} not in (0, 1]", i + 1, n.r0)));
            }
            if !n.alt.mu.is_finite() {
                return Err(Error::InvalidModel(format!("node {}: non-finite mu", i + 1)));
            }
        }
        let total: f64 = nodes.iter().map(|n| n.q).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidModel(format!("node weights sum to {total}, expected 1")));
        }
        Ok(NetworkModel { nodes })
    }

    /// Builds a network whose weights are proportional to per-node counts.
    pub fn from_counts(counts: &[usize], r0: &[f64], alts: &[AlternativeModel]) -> Result<Self> {
        if counts.len() != r0.len() || counts.len() != alts.len() {
            return Err(Error::ShapeMismatch("counts, r0 and alternatives differ in length".into()));
        }
        let m: usize = counts.iter().sum();
        if m == 0 {
            return Err(Error::InvalidModel("total count is zero".into()));
        }
        let nodes = counts
            .iter()
            .zip(r0)
            .zip(alts)
            .map(|((&c, &r), &a)| NodeModel::new(c as f64 / m as f64, r, a))
            .collect();
        NetworkModel::new(nodes)
    }

    pub fn nodes(&self) -> &[NodeModel] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Marginal probability of a true null, `sum_i q_i r0_i`.
    pub fn r0_star(&self) -> f64 {
        self.nodes.iter().map(|n| n.q * n.r0).sum()
    }

    pub fn r1_star(&self) -> f64 {
        1.0 - self.r0_star()
    }

    /// Network-wide p-value CDF `sum_i q_i G_i(t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        self.nodes.iter().map(|n| n.q * n.cdf(t)).sum()
    }

    /// Centralized alternative CDF `(1/r1*) sum_i q_i r1_i F_i(t)`.
    pub fn pooled_alt_cdf(&self, t: f64) -> f64 {
        let r1 = self.r1_star();
        self.nodes.iter().map(|n| n.q * n.r1() * n.alt.cdf(t)).sum::<f64>() / r1
    }

    /// Density of [`NetworkModel::pooled_alt_cdf`] on (0, 1).
    pub fn pooled_alt_density(&self, t: f64) -> f64 {
        let r1 = self.r1_star();
        self.nodes.iter().map(|n| n.q * n.r1() * n.alt.density(t)).sum::<f64>() / r1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> impl Iterator<Item = f64> {
        (1..=99).map(|k| k as f64 / 100.0)
    }

    #[test]
    fn null_alternatives_are_uniform() {
        for alt in [AlternativeModel::gaussian(0.0), AlternativeModel::cauchy(0.0)] {
            for t in grid() {
                assert!((alt.cdf(t) - t).abs() < 1e-9, "{alt:?} t={t}");
                assert!((alt.pdf(t).unwrap() - 1.0).abs() < 1e-9);
            }
            assert_eq!(alt.cdf(0.0), 0.0);
            assert_eq!(alt.cdf(1.0), 1.0);
        }
        assert!((AlternativeModel::gaussian(0.0).cdf(0.3) - 0.3).abs() < 1e-12);
        assert!((AlternativeModel::cauchy(0.0).pdf(0.25).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cauchy_half_point() {
        // 1/2 + atan(1)/pi
        let v = AlternativeModel::cauchy(1.0).cdf(0.5);
        assert!((v - 0.75).abs() < 1e-12);
    }

    #[test]
    fn gaussian_shift_two_at_five_percent() {
        let alt = AlternativeModel::gaussian(2.0);
        let z = normal_tail_inv(0.05).unwrap();
        let closed = normal_tail(z - 2.0);
        assert!((alt.cdf(0.05) - closed).abs() < 1e-14);
        // Q(-0.3551) by high-precision evaluation; Monte Carlo check below
        assert!((alt.cdf(0.05) - 0.638760031312335).abs() < 1e-12);
        // density via central finite difference of the cdf
        let h = 1e-6;
        let fd = (alt.cdf(0.05 + h) - alt.cdf(0.05 - h)) / (2.0 * h);
        let pdf = alt.pdf(0.05).unwrap();
        assert!((pdf - fd).abs() < 1e-3, "pdf {pdf} fd {fd}");
        // exp(-2 + 2 * 1.6448536269514722)
        assert!((pdf - 3.6317232273174).abs() < 1e-9);
        assert!((pdf - fd).abs() < 1e-3);
    }

    #[test]
    fn gaussian_cdf_matches_monte_carlo() {
        use rand::{Rng, SeedableRng};
        use rand_distr::StandardNormal;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| {
                let z: f64 = rng.sample(StandardNormal);
                normal_tail(2.0 + z) <= 0.05
            })
            .count();
        let mc = hits as f64 / n as f64;
        // 1e6 draws: sd ~ 4.8e-4
        assert!((mc - AlternativeModel::gaussian(2.0).cdf(0.05)).abs() < 2.5e-3);
    }

    #[test]
    fn pdf_rejects_endpoints() {
        let alt = AlternativeModel::gaussian(1.0);
        assert!(alt.pdf(0.0).is_err());
        assert!(alt.pdf(1.0).is_err());
    }

    #[test]
    fn cdfs_monotone_and_pdfs_match_differences() {
        let alts = [
            AlternativeModel::gaussian(0.5),
            AlternativeModel::gaussian(2.0),
            AlternativeModel::gaussian(5.0),
            AlternativeModel::gaussian(-1.0),
            AlternativeModel::cauchy(1.0),
            AlternativeModel::cauchy(4.0),
            AlternativeModel::cauchy(10.0),
        ];
        let h = 1e-5;
        for alt in alts {
            let mut prev = 0.0;
            for t in grid() {
                let c = alt.cdf(t);
                assert!(c >= prev);
                prev = c;
                let fd = (alt.sf(t - h) - alt.sf(t + h)) / (2.0 * h);
                let pdf = alt.pdf(t).unwrap();
                assert!((alt.cdf(t) + alt.sf(t) - 1.0).abs() < 1e-14);
                assert!(((pdf - fd) / pdf).abs() < 1e-3, "{alt:?} t={t}: {pdf} vs {fd}");
            }
        }
    }

    #[test]
    fn mixture_examples() {
        let all_null = NodeModel::new(1.0, 1.0, AlternativeModel::gaussian(3.0));
        assert!((all_null.cdf(0.4) - 0.4).abs() < 1e-15);
        let flat = NodeModel::new(1.0, 0.5, AlternativeModel::gaussian(0.0));
        assert!((flat.cdf(0.7) - 0.7).abs() < 1e-12);
        let c = NodeModel::new(1.0, 0.5, AlternativeModel::cauchy(1.0));
        assert!((c.cdf(0.5) - 0.625).abs() < 1e-12);
        assert!((c.pdf(0.3).unwrap() - (0.5 + 0.5 * c.alt.pdf(0.3).unwrap())).abs() < 1e-15);
    }

    #[test]
    fn network_validation() {
        let a = AlternativeModel::gaussian(1.0);
        assert!(NetworkModel::new(vec![]).is_err());
        assert!(NetworkModel::new(vec![NodeModel::new(0.5, 0.5, a)]).is_err());
        assert!(NetworkModel::new(vec![NodeModel::new(1.0, 0.0, a)]).is_err());
        let net = NetworkModel::new(vec![NodeModel::new(0.25, 0.4, a), NodeModel::new(0.75, 0.8, a)]).unwrap();
        assert!((net.r0_star() - 0.7).abs() < 1e-12);
        let from = NetworkModel::from_counts(&[100, 300], &[0.4, 0.8], &[a, a]).unwrap();
        assert_eq!(from, net);
    }
}
