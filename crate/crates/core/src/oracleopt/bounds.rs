//! Limiting-FDR and power bounds for proportion matching on a heterogeneous
//! network.

use crate::distmodel::NetworkModel;
use crate::error::{Error, Result};
use crate::procedures::{beta_slope, local_alpha, sup_crossing};

/// A bound, or the reason its hypotheses fail.
#[derive(Debug, Clone, PartialEq)]
pub enum Bound<T> {
    Value(T),
    Inapplicable(String),
}

impl<T> Bound<T> {
    pub fn value(&self) -> Option<&T> {
        match self {
            Bound::Value(v) => Some(v),
            Bound::Inapplicable(_) => None,
        }
    }

    pub fn is_applicable(&self) -> bool {
        matches!(self, Bound::Value(_))
    }
}

/// `Delta = sum_i q_i |r0_i - r0*|`.
pub fn heterogeneity_delta(net: &NetworkModel) -> f64 {
    let r0 = net.r0_star();
    net.nodes().iter().map(|n| n.q * (n.r0 - r0).abs()).sum()
}

/// `(V + R) Delta / (R - Delta)^2`.
fn excess(v: f64, r: f64, delta: f64) -> f64 {
    (v + r) * delta / ((r - delta) * (r - delta))
}

fn check_not_all_null(net: &NetworkModel) -> Result<()> {
    if net.nodes().iter().any(|n| n.r0 >= 1.0) {
        return Err(Error::AllNull);
    }
    Ok(())
}

/// Bound on the limiting FDR when node `i`'s estimator converges to
/// `limiting[i] >= r0_i`:
/// `alpha + (V + R) Delta / (R - Delta)^2` with `V = r0* sum q tau_i` and
/// `R = V + r1* sum q F_i(tau_i)`, where `tau_i` is the largest crossing of
/// `F_i` with the slope implied by the limiting local level.
pub fn fdr_bound_thm2(net: &NetworkModel, alpha: f64, limiting: &[f64]) -> Result<Bound<f64>> {
    if limiting.len() != net.len() {
        return Err(Error::ShapeMismatch(format!("{} limits for {} nodes", limiting.len(), net.len())));
    }
    check_not_all_null(net)?;
    let (r0s, r1s) = (net.r0_star(), net.r1_star());
    let r0_bar: f64 = net.nodes().iter().zip(limiting).map(|(n, &r)| n.q * r).sum();
    let beta_bar = beta_slope(alpha, r0_bar.min(crate::procedures::R0_STAR_CLAMP))?;
    let mut sum_tau = 0.0;
    let mut sum_f = 0.0;
    let mut condition = f64::INFINITY;
    for (n, &rb) in net.nodes().iter().zip(limiting) {
        let a = local_alpha(beta_bar, rb);
        let b = beta_slope(a, n.r0)?;
        let tau = sup_crossing(|t| n.alt.cdf(t), b);
        sum_tau += n.q * tau;
        sum_f += n.q * n.alt.cdf(tau);
        condition = condition.min((1.0 - rb) / (1.0 - n.r0));
    }
    if r0s > condition {
        return Ok(Bound::Inapplicable(format!("r0* = {r0s} exceeds {condition}")));
    }
    let v = r0s * sum_tau;
    let r = v + r1s * sum_f;
    let delta = heterogeneity_delta(net);
    if delta >= r {
        return Ok(Bound::Inapplicable(format!("Delta = {delta} is not below R = {r}")));
    }
    Ok(Bound::Value(alpha + excess(v, r, delta)))
}

/// The consistent-estimator form: `r0* alpha + (V + R) Delta / (R - Delta)^2`
/// with `tau = sum q tau_i`, `V = r0* tau`, `R = (r0* + r1* beta*) tau`.
pub fn fdr_bound_consistent(net: &NetworkModel, alpha: f64) -> Result<Bound<f64>> {
    check_not_all_null(net)?;
    let (r0s, r1s) = (net.r0_star(), net.r1_star());
    let beta = beta_slope(alpha, r0s)?;
    let tau: f64 = net.nodes().iter().map(|n| n.q * sup_crossing(|t| n.alt.cdf(t), beta)).sum();
    let v = r0s * tau;
    let r = (r0s + r1s * beta) * tau;
    let delta = heterogeneity_delta(net);
    if delta >= r {
        return Ok(Bound::Inapplicable(format!("Delta = {delta} is not below R = {r}")));
    }
    Ok(Bound::Value(r0s * alpha + excess(v, r, delta)))
}

/// Per-node sup-distances `delta_i` between `F_i` and the centralized
/// alternative CDF, and a Lipschitz constant `C` of the latter, over the
/// interval bracketing the crossings.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessInputs {
    pub deltas: Vec<f64>,
    pub lipschitz: f64,
}

/// Crossings at the common slope `beta* = beta(alpha; r0*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossings {
    pub beta_star: f64,
    /// `sup{t : F_i(t) = beta* t}` per node.
    pub tau_nodes: Vec<f64>,
    /// `sup{t : F~(t) = beta* t}` for the centralized alternative.
    pub tau_star: f64,
}

pub fn crossings(net: &NetworkModel, alpha: f64) -> Result<Crossings> {
    let beta = beta_slope(alpha, net.r0_star())?;
    let tau_nodes = net.nodes().iter().map(|n| sup_crossing(|t| n.alt.cdf(t), beta)).collect();
    let tau_star = sup_crossing(|t| net.pooled_alt_cdf(t), beta);
    Ok(Crossings { beta_star: beta, tau_nodes, tau_star })
}

/// Measures `delta_i` and `C` on `points` evenly spaced points spanning
/// `[min(tau_i, tau*), max(tau_i, tau*)]`. `C` is the largest centralized
/// alternative density seen there.
pub fn measure_robustness_inputs(net: &NetworkModel, alpha: f64, points: usize) -> Result<RobustnessInputs> {
    let c = crossings(net, alpha)?;
    let lo = c.tau_nodes.iter().copied().fold(c.tau_star, f64::min);
    let hi = c.tau_nodes.iter().copied().fold(c.tau_star, f64::max);
    let n = points.max(2);
    let ts: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    let deltas = net
        .nodes()
        .iter()
        .map(|node| ts.iter().map(|&t| (node.alt.cdf(t) - net.pooled_alt_cdf(t)).abs()).fold(0.0, f64::max))
        .collect();
    let lipschitz = ts.iter().map(|&t| net.pooled_alt_density(t)).fold(0.0, f64::max);
    Ok(RobustnessInputs { deltas, lipschitz })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessBounds {
    /// Upper bound on the limiting FDR.
    pub fdr: f64,
    /// Lower bound on the limiting power.
    pub power: f64,
    pub delta_prime: f64,
    pub tau_star: f64,
    /// Limiting power of pooled BH, `F~(tau*)`.
    pub p_star: f64,
    pub beta_star: f64,
}

/// FDR bound `r0* alpha + (V + R) D' / (R - D')^2` with `R = (r0* + r1* beta*) tau*`,
/// `V = r0* tau*`, `D' = sum q (r0 + beta* r1) delta / (beta* - C)`, and power
/// bound `P* - min{max delta / (1 - C / beta*), D' / r1*}`.
pub fn fdr_bound_thm3_power_thm4(net: &NetworkModel, alpha: f64, inputs: &RobustnessInputs) -> Result<Bound<RobustnessBounds>> {
    if inputs.deltas.len() != net.len() {
        return Err(Error::ShapeMismatch(format!("{} deltas for {} nodes", inputs.deltas.len(), net.len())));
    }
    let c = crossings(net, alpha)?;
    let beta = c.beta_star;
    let cl = inputs.lipschitz;
    if cl >= beta {
        return Ok(Bound::Inapplicable(format!("C = {cl} is not below beta* = {beta}")));
    }
    let (r0s, r1s) = (net.r0_star(), net.r1_star());
    let delta_prime = net
        .nodes()
        .iter()
        .zip(&inputs.deltas)
        .map(|(n, &d)| n.q * (n.r0 + beta * n.r1()) * d)
        .sum::<f64>()
        / (beta - cl);
    let r = (r0s + r1s * beta) * c.tau_star;
    let v = r0s * c.tau_star;
    if delta_prime >= r {
        return Ok(Bound::Inapplicable(format!("Delta' = {delta_prime} is not below R = {r}")));
    }
    let p_star = net.pooled_alt_cdf(c.tau_star);
    let max_delta = inputs.deltas.iter().copied().fold(0.0, f64::max);
    let loss = (max_delta / (1.0 - cl / beta)).min(delta_prime / r1s);
    Ok(Bound::Value(RobustnessBounds {
        fdr: r0s * alpha + excess(v, r, delta_prime),
        power: p_star - loss,
        delta_prime,
        tau_star: c.tau_star,
        p_star,
        beta_star: beta,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distmodel::AlternativeModel;
    use proptest::prelude::*;

    fn two_node(q: [usize; 2], r0: [f64; 2], mu: [f64; 2]) -> NetworkModel {
        NetworkModel::from_counts(&q, &r0, &[AlternativeModel::gaussian(mu[0]), AlternativeModel::gaussian(mu[1])]).unwrap()
    }

    #[test]
    fn delta_examples() {
        assert_eq!(heterogeneity_delta(&two_node([1, 1], [0.6, 0.6], [2.0, 2.0])), 0.0);
        assert!((heterogeneity_delta(&two_node([1, 1], [0.4, 0.6], [2.0, 2.0])) - 0.1).abs() < 1e-15);
        let net = two_node([9, 1], [0.5, 0.9], [2.0, 2.0]);
        assert!((net.r0_star() - 0.54).abs() < 1e-15);
        assert!((heterogeneity_delta(&net) - 0.072).abs() < 1e-15);
    }

    #[test]
    fn homogeneous_limits_are_exact() {
        let net = two_node([1, 3], [0.7, 0.7], [2.0, 2.0]);
        let alpha = 0.2;
        assert_eq!(fdr_bound_thm2(&net, alpha, &[0.7, 0.7]).unwrap(), Bound::Value(alpha));
        let cons = fdr_bound_consistent(&net, alpha).unwrap();
        assert!((cons.value().unwrap() - 0.7 * alpha).abs() < 1e-15);
        let zero = RobustnessInputs { deltas: vec![0.0, 0.0], lipschitz: 0.0 };
        let Bound::Value(b) = fdr_bound_thm3_power_thm4(&net, alpha, &zero).unwrap() else { panic!() };
        assert!((b.fdr - 0.7 * alpha).abs() < 1e-15);
        assert_eq!(b.power, b.p_star);
    }

    #[test]
    fn measured_inputs_vanish_for_identical_alternatives() {
        let net = two_node([1, 1], [0.5, 0.8], [2.0, 2.0]);
        let inp = measure_robustness_inputs(&net, 0.2, 10_000).unwrap();
        assert!(inp.deltas.iter().all(|&d| d < 1e-12));
        let c = crossings(&net, 0.2).unwrap();
        assert!((c.tau_nodes[0] - c.tau_star).abs() < 1e-9);
    }

    #[test]
    fn heterogeneous_bounds_are_finite() {
        let net = two_node([1, 1], [0.55, 0.65], [1.8, 2.2]);
        let inp = measure_robustness_inputs(&net, 0.2, 10_000).unwrap();
        assert!(inp.deltas.iter().all(|&d| d > 0.0));
        let Bound::Value(b) = fdr_bound_thm3_power_thm4(&net, 0.2, &inp).unwrap() else { panic!("inapplicable") };
        assert!(b.fdr > net.r0_star() * 0.2 && b.fdr < 1.0);
        assert!(b.power < b.p_star);
        assert!(fdr_bound_thm2(&net, 0.2, &[0.55, 0.65]).unwrap().is_applicable());
    }

    #[test]
    fn limiting_estimate_condition() {
        // limits far above the truth at a sparse node break r0* <= (1 - r0bar) / (1 - r0)
        let net = two_node([1, 1], [0.3, 0.6], [2.0, 2.0]);
        assert!(!fdr_bound_thm2(&net, 0.2, &[0.99, 0.6]).unwrap().is_applicable());
    }

    proptest! {
        #[test]
        fn delta_prime_at_most_max_delta_over_alpha(
            r0 in prop::collection::vec(0.05f64..0.95, 1..6),
            deltas in prop::collection::vec(0.0f64..0.3, 6),
            alpha in 0.01f64..0.9,
            c_frac in 0.0f64..0.99,
        ) {
            let n = r0.len();
            let net = NetworkModel::from_counts(&vec![1; n], &r0, &vec![AlternativeModel::gaussian(2.0); n]).unwrap();
            let beta = beta_slope(alpha, net.r0_star()).unwrap();
            let c = c_frac * beta;
            let d = &deltas[..n];
            let dp: f64 = net.nodes().iter().zip(d).map(|(nd, &x)| nd.q * (nd.r0 + beta * nd.r1()) * x).sum::<f64>() / (beta - c);
            let max_d = d.iter().copied().fold(0.0, f64::max);
            prop_assert!(dp <= max_d / (alpha * (beta - c)) * (1.0 + 1e-12) + 1e-300);
        }
    }
}
