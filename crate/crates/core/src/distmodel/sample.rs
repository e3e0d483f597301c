//! Per-trial sampling of labeled p-values.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{normal_tail, AltKind, NetworkModel};
use crate::error::{Error, Result};

/// How many p-values each node receives.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleSizes {
    /// Exact per-node counts.
    Fixed(Vec<usize>),
    /// `total` p-values, each assigned to node `i` independently with
    /// probability `q_i`.
    RandomAssignment { total: usize },
}

/// Correlation structure of the underlying test statistics within a node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Dependence {
    #[default]
    Independent,
    /// Stationary AR(1) noise, giving `corr(Z_j, Z_k) = rho^|j - k|`.
    TaperingAr { rho: f64 },
}

impl Dependence {
    fn rho(self) -> f64 {
        match self {
            Dependence::Independent => 0.0,
            Dependence::TaperingAr { rho } => rho,
        }
    }
}

/// Everything besides the network model needed to draw one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub sizes: SampleSizes,
    pub dependence: Dependence,
    /// When set, each node draws its alternative location uniformly from
    /// `[mu - jitter, mu + jitter]` once per trial.
    pub mean_jitter: Option<f64>,
}

impl SamplingPlan {
    pub fn fixed(sizes: Vec<usize>) -> Self {
        SamplingPlan { sizes: SampleSizes::Fixed(sizes), dependence: Dependence::Independent, mean_jitter: None }
    }
}

/// Seed of one trial. Each trial owns an independent ChaCha stream selected
/// by its index, so trials can run in any order or on any thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeed {
    pub master: u64,
    pub trial: u64,
}

impl TrialSeed {
    pub fn new(master: u64, trial: u64) -> Self {
        TrialSeed { master, trial }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.trial);
        rng
    }
}

/// One node's share of a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSample {
    pub pvalues: Vec<f64>,
    /// `true` where the null hypothesis holds.
    pub is_null: Vec<bool>,
    /// Generative null proportion (used by the oracle estimator).
    pub true_r0: f64,
    /// Alternative location actually used in this trial.
    pub mu: f64,
}

impl NodeSample {
    pub fn len(&self) -> usize {
        self.pvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pvalues.is_empty()
    }

    pub fn null_count(&self) -> usize {
        self.is_null.iter().filter(|&&b| b).count()
    }

    pub fn alt_count(&self) -> usize {
        self.len() - self.null_count()
    }
}

/// Labeled p-values for every node of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub nodes: Vec<NodeSample>,
}

impl LabeledSample {
    pub fn total(&self) -> usize {
        self.nodes.iter().map(NodeSample::len).sum()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.nodes.iter().map(NodeSample::len).collect()
    }

    pub fn alt_total(&self) -> usize {
        self.nodes.iter().map(NodeSample::alt_count).sum()
    }

    /// All p-values concatenated in node order.
    pub fn pooled(&self) -> Vec<f64> {
        self.nodes.iter().flat_map(|n| n.pvalues.iter().copied()).collect()
    }
}

const P_MIN: f64 = f64::EPSILON;
const P_MAX: f64 = 1.0 - f64::EPSILON;

/// Draws one trial.
///
/// Draw order per node is: the jittered location (if any), then for each
/// hypothesis its label followed by one standard normal innovation. The AR
/// recursion with `rho = 0` reduces to the innovations themselves, so the
/// independent and dependent paths agree bit for bit at `rho = 0`. Cauchy
/// noise is obtained from the Gaussian noise through the probability
/// integral transform.
pub fn sample_trial(net: &NetworkModel, plan: &SamplingPlan, seed: TrialSeed) -> Result<LabeledSample> {
    let rho = plan.dependence.rho();
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::BadCorrelation(rho));
    }
    if let Some(j) = plan.mean_jitter {
        if !(j >= 0.0 && j.is_finite()) {
            return Err(Error::InvalidModel(format!("mean jitter {j} must be a finite non-negative number")));
        }
    }
    let mut rng = seed.rng();

    let counts = match &plan.sizes {
        SampleSizes::Fixed(c) => {
            if c.len() != net.len() {
                return Err(Error::ShapeMismatch(format!("{} sizes for {} nodes", c.len(), net.len())));
            }
            c.clone()
        }
        SampleSizes::RandomAssignment { total } => {
            let mut counts = vec![0usize; net.len()];
            let cum: Vec<f64> = net
                .nodes()
                .iter()
                .scan(0.0, |acc, n| {
                    *acc += n.q;
                    Some(*acc)
                })
                .collect();
            for _ in 0..*total {
                let u: f64 = rng.random();
                let i = cum.iter().position(|&c| u < c).unwrap_or(net.len() - 1);
                counts[i] += 1;
            }
            counts
        }
    };

    let innovation_scale = (1.0 - rho * rho).sqrt();
    let nodes = net
        .nodes()
        .iter()
        .zip(&counts)
        .map(|(node, &m)| {
            let mu = match plan.mean_jitter {
                Some(j) if j > 0.0 => node.alt.mu + rng.random_range(-j..=j),
                _ => node.alt.mu,
            };
            let mut pvalues = Vec::with_capacity(m);
            let mut is_null = Vec::with_capacity(m);
            let mut z = 0.0f64;
            for k in 0..m {
                let null = rng.random::<f64>() < node.r0;
                let eps: f64 = rng.sample(StandardNormal);
                z = if k == 0 { eps } else { rho * z + innovation_scale * eps };
                let shift = if null { 0.0 } else { mu };
                let p = match node.alt.kind {
                    AltKind::GaussianLocation => normal_tail(shift + z),
                    AltKind::CauchyLocation => {
                        // Cauchy quantile of Phi(z), then the one-sided p-value 1 - H_{C,0}(x).
                        let c = (PI * (0.5 - normal_tail(z))).tan();
                        1.0f64.atan2(shift + c) / PI
                    }
                };
                pvalues.push(p.clamp(P_MIN, P_MAX));
                is_null.push(null);
            }
            NodeSample { pvalues, is_null, true_r0: node.r0, mu }
        })
        .collect();
    Ok(LabeledSample { nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distmodel::{normal_tail_inv, AlternativeModel, NodeModel};

    fn one_node(r0: f64, alt: AlternativeModel) -> NetworkModel {
        NetworkModel::new(vec![NodeModel::new(1.0, r0, alt)]).unwrap()
    }

    #[test]
    fn empty_trial() {
        let a = AlternativeModel::gaussian(2.0);
        let net = NetworkModel::new(vec![NodeModel::new(0.5, 0.5, a), NodeModel::new(0.5, 0.7, a)]).unwrap();
        let s = sample_trial(&net, &SamplingPlan::fixed(vec![0, 0]), TrialSeed::new(1, 0)).unwrap();
        assert_eq!(s.total(), 0);
        assert_eq!(s.nodes.len(), 2);
    }

    #[test]
    fn all_null_passes_ks() {
        let net = one_node(1.0, AlternativeModel::gaussian(3.0));
        let s = sample_trial(&net, &SamplingPlan::fixed(vec![100]), TrialSeed::new(3, 0)).unwrap();
        assert!(s.nodes[0].is_null.iter().all(|&b| b));
        let mut p = s.nodes[0].pvalues.clone();
        p.sort_by(f64::total_cmp);
        let n = p.len() as f64;
        let d = p
            .iter()
            .enumerate()
            .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
            .fold(0.0, f64::max);
        assert!(d < 1.36 / 10.0, "KS statistic {d}");
    }

    #[test]
    fn ar_noise_has_requested_lag_one_correlation() {
        let net = one_node(1.0, AlternativeModel::gaussian(0.0));
        let plan = SamplingPlan {
            sizes: SampleSizes::Fixed(vec![10_000]),
            dependence: Dependence::TaperingAr { rho: 0.9 },
            mean_jitter: None,
        };
        let s = sample_trial(&net, &plan, TrialSeed::new(5, 2)).unwrap();
        let z: Vec<f64> = s.nodes[0].pvalues.iter().map(|&p| normal_tail_inv(p).unwrap()).collect();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let var: f64 = z.iter().map(|x| (x - mean).powi(2)).sum();
        let cov: f64 = z.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        let r = cov / var;
        assert!((r - 0.9).abs() < 0.03, "lag-1 autocorrelation {r}");
    }

    #[test]
    fn rho_zero_matches_independent() {
        let a = AlternativeModel::cauchy(3.0);
        let net = NetworkModel::new(vec![NodeModel::new(0.4, 0.6, a), NodeModel::new(0.6, 0.8, AlternativeModel::gaussian(2.0))]).unwrap();
        let mut plan = SamplingPlan::fixed(vec![300, 500]);
        plan.mean_jitter = Some(0.5);
        let ind = sample_trial(&net, &plan, TrialSeed::new(9, 4)).unwrap();
        plan.dependence = Dependence::TaperingAr { rho: 0.0 };
        let ar = sample_trial(&net, &plan, TrialSeed::new(9, 4)).unwrap();
        assert_eq!(ind, ar);
    }

    #[test]
    fn seeds_reproduce_and_differ() {
        let net = one_node(0.5, AlternativeModel::gaussian(2.0));
        let plan = SamplingPlan::fixed(vec![200]);
        let a = sample_trial(&net, &plan, TrialSeed::new(1, 1)).unwrap();
        let b = sample_trial(&net, &plan, TrialSeed::new(1, 1)).unwrap();
        let c = sample_trial(&net, &plan, TrialSeed::new(1, 2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_rho() {
        let net = one_node(0.5, AlternativeModel::gaussian(2.0));
        for rho in [1.0, -0.1, 1.5] {
            let plan = SamplingPlan {
                sizes: SampleSizes::Fixed(vec![10]),
                dependence: Dependence::TaperingAr { rho },
                mean_jitter: None,
            };
            assert_eq!(sample_trial(&net, &plan, TrialSeed::new(0, 0)), Err(Error::BadCorrelation(rho)));
        }
    }

    #[test]
    fn random_assignment_follows_weights() {
        let a = AlternativeModel::gaussian(1.0);
        let net = NetworkModel::new(vec![NodeModel::new(0.2, 0.5, a), NodeModel::new(0.8, 0.5, a)]).unwrap();
        let plan = SamplingPlan {
            sizes: SampleSizes::RandomAssignment { total: 20_000 },
            dependence: Dependence::Independent,
            mean_jitter: None,
        };
        let s = sample_trial(&net, &plan, TrialSeed::new(2, 0)).unwrap();
        assert_eq!(s.total(), 20_000);
        let frac = s.nodes[0].len() as f64 / 20_000.0;
        assert!((frac - 0.2).abs() < 0.01);
    }

    #[test]
    fn labels_follow_r0_and_alternatives_follow_cdf() {
        let alt = AlternativeModel::cauchy(2.0);
        let net = one_node(0.3, alt);
        let s = sample_trial(&net, &SamplingPlan::fixed(vec![50_000]), TrialSeed::new(8, 0)).unwrap();
        let node = &s.nodes[0];
        let frac_null = node.null_count() as f64 / node.len() as f64;
        assert!((frac_null - 0.3).abs() < 0.01);
        let alts: Vec<f64> = node.pvalues.iter().zip(&node.is_null).filter(|(_, &n)| !n).map(|(&p, _)| p).collect();
        for t in [0.05, 0.2, 0.5] {
            let emp = alts.iter().filter(|&&p| p <= t).count() as f64 / alts.len() as f64;
            assert!((emp - alt.cdf(t)).abs() < 0.01, "t={t}: {emp} vs {}", alt.cdf(t));
        }
    }
}
