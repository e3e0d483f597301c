//! Message-level simulation of the star-network protocols with exact bit
//! accounting.
//!
//! Encodings are conventions: an uplink `(m_i, m0_i)` pair costs
//! `2 ceil(log2 m_i)` bits and its broadcast reply `2 ceil(log2 m)`; a cell
//! count costs `ceil(log2(m + 1))` bits; a control signal costs 2 bits;
//! pooled BH is charged 64 bits per shipped p-value. Every message costs at
//! least one bit.

pub mod message;

pub use message::{ceil_log2, Direction, Message, Party, Payload, Termination, Transcript};

use crate::distmodel::{LabeledSample, NodeSample};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorChoice, NullProportionEstimate};
use crate::greedy::{empirical_h, node_cell_counts, CellId, IntervalGrid, IntervalSelection};
use crate::procedures::{
    adaptive_bh, adapted_level, bh_procedure, calibration_from_r0_star, confusion_metrics, rounded_null_count,
    NetworkMetrics, RejectionOutcome,
};

/// Bits charged per p-value shipped to the center by pooled BH.
pub const POOLED_BITS_PER_PVALUE: u64 = 64;
/// Size of a 1/0 control signal.
pub const CONTROL_BITS: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolResult {
    pub outcomes: Vec<RejectionOutcome>,
    pub metrics: NetworkMetrics,
    pub transcript: Transcript,
    /// Cells rejected by greedy aggregation, in selection order.
    pub selected_cells: Vec<CellId>,
}

/// Target level used by proportion matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PmTarget {
    /// Calibrate to `alpha` itself.
    #[default]
    Nominal,
    /// Calibrate to `min(alpha / r0*, 1)`, with `r0*` the broadcast estimate.
    Adapted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    NoComm,
    PooledBh,
    ProportionMatching(PmTarget),
    Greedy { epsilon: f64 },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::NoComm => "no_comm",
            Method::PooledBh => "pooled_bh",
            Method::ProportionMatching(_) => "prop_matching",
            Method::Greedy { .. } => "greedy",
        }
    }
}

/// Runs `method` on `sample`.
pub fn run(method: Method, sample: &LabeledSample, alpha: f64, est: EstimatorChoice) -> Result<ProtocolResult> {
    match method {
        Method::NoComm => run_no_comm(sample, alpha, est),
        Method::PooledBh => run_pooled_bh(sample, alpha, est),
        Method::ProportionMatching(target) => run_proportion_matching(sample, alpha, est, target),
        Method::Greedy { epsilon } => run_greedy_aggregation(sample, alpha, epsilon, est),
    }
}

/// Drives the node side of `method` with the center's messages from
/// `transcript`, checks every regenerated node message against the recorded
/// one, and returns the resulting rejections.
pub fn replay(
    method: Method,
    transcript: &Transcript,
    sample: &LabeledSample,
    alpha: f64,
    est: EstimatorChoice,
) -> Result<ProtocolResult> {
    check_sample(sample)?;
    match method {
        Method::NoComm | Method::PooledBh => {
            let fresh = run(method, sample, alpha, est)?;
            if fresh.transcript != *transcript {
                return Err(Error::Transcript { line: 0, msg: "transcript differs from a fresh run".into() });
            }
            Ok(fresh)
        }
        Method::ProportionMatching(target) => replay_proportion_matching(transcript, sample, alpha, est, target),
        Method::Greedy { epsilon } => replay_greedy(transcript, sample, alpha, epsilon, est),
    }
}

fn check_sample(sample: &LabeledSample) -> Result<()> {
    if sample.nodes.is_empty() || sample.total() == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

fn finish(
    outcomes: Vec<RejectionOutcome>,
    sample: &LabeledSample,
    transcript: Transcript,
    selected_cells: Vec<CellId>,
) -> Result<ProtocolResult> {
    let metrics = confusion_metrics(&outcomes, sample)?;
    Ok(ProtocolResult { outcomes, metrics, transcript, selected_cells })
}

fn node_estimate(s: &NodeSample, est: EstimatorChoice) -> Result<NullProportionEstimate> {
    est.estimate(&s.pvalues, s.true_r0)
}

/// Local adaptive BH at every node, no messages.
pub fn run_no_comm(sample: &LabeledSample, alpha: f64, est: EstimatorChoice) -> Result<ProtocolResult> {
    check_sample(sample)?;
    let mut notes = Vec::new();
    let outcomes = sample
        .nodes
        .iter()
        .enumerate()
        .map(|(i, s)| match node_estimate(s, est).and_then(|e| adaptive_bh(&s.pvalues, alpha, &e)) {
            Ok(o) => o,
            Err(e) => {
                notes.push(format!("node {}: {e}; no rejections", i + 1));
                RejectionOutcome::none()
            }
        })
        .collect();
    let transcript = Transcript { notes, ..Transcript::default() };
    finish(outcomes, sample, transcript, Vec::new())
}

/// Every node ships its p-values; the center runs BH at `min(alpha / r0*, 1)`
/// on the pooled vector.
pub fn run_pooled_bh(sample: &LabeledSample, alpha: f64, est: EstimatorChoice) -> Result<ProtocolResult> {
    check_sample(sample)?;
    let messages = sample
        .nodes
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let n = s.len() as u64;
            Message::up(1, i, Payload::PValues(n), (POOLED_BITS_PER_PVALUE * n).max(1))
        })
        .collect();
    let pooled = sample.pooled();
    let m = pooled.len();
    let estimate = match est {
        EstimatorChoice::OracleTruth => {
            Ok(NullProportionEstimate::oracle(sample.nodes.iter().map(|s| s.true_r0 * s.len() as f64).sum::<f64>() / m as f64))
        }
        _ => est.estimate(&pooled, f64::NAN),
    };
    let mut notes = Vec::new();
    let global = match estimate.and_then(|e| adaptive_bh(&pooled, alpha, &e)) {
        Ok(o) => o,
        Err(e) => {
            notes.push(format!("center: {e}; no rejections"));
            RejectionOutcome::none()
        }
    };
    let mut outcomes = Vec::with_capacity(sample.nodes.len());
    let mut offset = 0;
    let mut it = global.rejected.iter().peekable();
    for s in &sample.nodes {
        let end = offset + s.len();
        let mut rejected = Vec::new();
        while let Some(&&k) = it.peek() {
            if k >= end {
                break;
            }
            rejected.push(k - offset);
            it.next();
        }
        outcomes.push(RejectionOutcome { rejected, tau: global.tau });
        offset = end;
    }
    let transcript = Transcript { messages, rounds: 1, termination: Termination::Completed, notes };
    finish(outcomes, sample, transcript, Vec::new())
}

fn pair_bits(m: u64) -> u64 {
    (2 * ceil_log2(m)).max(1)
}

fn count_bits(m: u64) -> u64 {
    ceil_log2(m + 1).max(1)
}

/// Node side of proportion matching: the uplink pair, or the conservative
/// `(m_i, m_i)` when the estimator fails.
fn pm_uplink(s: &NodeSample, est: EstimatorChoice) -> (Option<f64>, u64, Option<String>) {
    let m = s.len();
    match node_estimate(s, est) {
        Ok(e) => (Some(e.value), rounded_null_count(e.value, m), None),
        Err(e) => (None, m as u64, Some(format!("{e}; sending m0 = m and making no rejections"))),
    }
}

fn pm_local(s: &NodeSample, r0_hat: Option<f64>, m: u64, m0: u64, alpha: f64, target: PmTarget) -> RejectionOutcome {
    let Some(r0_hat) = r0_hat else {
        return RejectionOutcome::none();
    };
    if m0 >= m {
        return RejectionOutcome::none();
    }
    let r0_star = m0 as f64 / m as f64;
    let a = match target {
        PmTarget::Nominal => alpha,
        PmTarget::Adapted => adapted_level(alpha, r0_star),
    };
    let cal = calibration_from_r0_star(r0_star, &[r0_hat], a);
    bh_procedure(&s.pvalues, cal.alpha_locals[0].min(1.0))
}

/// One-shot proportion matching: nodes send `(m_i, m0_i)`, the center
/// broadcasts the totals, every node runs BH at its calibrated level.
pub fn run_proportion_matching(
    sample: &LabeledSample,
    alpha: f64,
    est: EstimatorChoice,
    target: PmTarget,
) -> Result<ProtocolResult> {
    check_sample(sample)?;
    let mut messages = Vec::new();
    let mut notes = Vec::new();
    let mut r0_hats = Vec::with_capacity(sample.nodes.len());
    let (mut m, mut m0) = (0u64, 0u64);
    for (i, s) in sample.nodes.iter().enumerate() {
        let (r, n0, note) = pm_uplink(s, est);
        if let Some(n) = note {
            notes.push(format!("node {}: {n}", i + 1));
        }
        let mi = s.len() as u64;
        messages.push(Message::up(1, i, Payload::CountPair { m: mi, m0: n0 }, pair_bits(mi)));
        r0_hats.push(r);
        m += mi;
        m0 += n0;
    }
    messages.push(Message::broadcast(1, Payload::CountPair { m, m0 }, pair_bits(m)));
    let mut termination = Termination::Completed;
    if m0 >= m {
        notes.push(format!("center: {}", Error::NoSignal));
        termination = Termination::NoRejections;
    }
    let outcomes = sample.nodes.iter().zip(&r0_hats).map(|(s, &r)| pm_local(s, r, m, m0, alpha, target)).collect();
    let transcript = Transcript { messages, rounds: 1, termination, notes };
    finish(outcomes, sample, transcript, Vec::new())
}

fn mismatch(k: usize, what: String) -> Error {
    Error::Transcript { line: k + 1, msg: what }
}

fn node_of(msg: &Message, n: usize, k: usize) -> Result<usize> {
    match (msg.sender, msg.receiver) {
        (Party::Node(i), _) | (_, Party::Node(i)) if i < n => Ok(i),
        _ => Err(mismatch(k, format!("message does not name a node below {n}"))),
    }
}

fn replay_proportion_matching(
    transcript: &Transcript,
    sample: &LabeledSample,
    alpha: f64,
    est: EstimatorChoice,
    target: PmTarget,
) -> Result<ProtocolResult> {
    let n = sample.nodes.len();
    let uplinks: Vec<_> = sample.nodes.iter().map(|s| pm_uplink(s, est)).collect();
    let mut outcomes = None;
    for (k, msg) in transcript.messages.iter().enumerate() {
        match (msg.direction, msg.payload) {
            (Direction::Up, Payload::CountPair { .. }) => {
                let i = node_of(msg, n, k)?;
                let mi = sample.nodes[i].len() as u64;
                let expect = Message::up(1, i, Payload::CountPair { m: mi, m0: uplinks[i].1 }, pair_bits(mi));
                if *msg != expect {
                    return Err(mismatch(k, format!("node {} would send {:?}", i + 1, expect.payload)));
                }
            }
            (Direction::Broadcast, Payload::CountPair { m, m0 }) => {
                outcomes = Some(
                    sample
                        .nodes
                        .iter()
                        .zip(&uplinks)
                        .map(|(s, u)| pm_local(s, u.0, m, m0, alpha, target))
                        .collect::<Vec<_>>(),
                );
            }
            _ => return Err(mismatch(k, "unexpected message for proportion matching".into())),
        }
    }
    let outcomes = outcomes.ok_or_else(|| mismatch(transcript.messages.len(), "no broadcast".into()))?;
    finish(outcomes, sample, transcript.clone(), Vec::new())
}

/// Grid each node derives after learning the total `m`: `q_i = m_i / m` and
/// its own `r0` estimate. Nodes whose estimate fails or is zero get no cells.
pub fn greedy_grid(sample: &LabeledSample, epsilon: f64, est: EstimatorChoice, m: usize) -> Result<(IntervalGrid, Vec<String>)> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::BadEpsilon(epsilon));
    }
    let mut notes = Vec::new();
    let mut cell_len = Vec::with_capacity(sample.nodes.len());
    let mut cells = Vec::with_capacity(sample.nodes.len());
    for (i, s) in sample.nodes.iter().enumerate() {
        let q = s.len() as f64 / m as f64;
        let geometry = node_estimate(s, est).and_then(|e| {
            crate::greedy::build_grid(epsilon, &[q], &[e.value]).map(|g| (g.cell_len[0], g.cells[0]))
        });
        match geometry {
            Ok((l, k)) => {
                cell_len.push(l);
                cells.push(k);
            }
            Err(e) => {
                notes.push(format!("node {}: {e}; no candidate cells", i + 1));
                cell_len.push(f64::INFINITY);
                cells.push(0);
            }
        }
    }
    Ok((IntervalGrid { epsilon, cell_len, cells }, notes))
}

/// A node's cells ordered by count descending, then cell index ascending.
struct GreedyNode {
    queue: Vec<(usize, usize)>,
    pos: usize,
}

impl GreedyNode {
    fn new(grid: &IntervalGrid, node: usize, pvalues: &[f64]) -> Self {
        let mut queue: Vec<(usize, usize)> =
            node_cell_counts(grid, node, pvalues).into_iter().enumerate().map(|(j, c)| (c, j + 1)).collect();
        queue.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        GreedyNode { queue, pos: 0 }
    }

    /// Largest unrejected count, or -1 when every cell is taken.
    fn offer(&self) -> i64 {
        self.queue.get(self.pos).map_or(-1, |&(c, _)| c as i64)
    }

    fn take(&mut self) -> usize {
        let cell = self.queue[self.pos].1;
        self.pos += 1;
        cell
    }
}

fn greedy_nodes(grid: &IntervalGrid, sample: &LabeledSample) -> Vec<GreedyNode> {
    sample.nodes.iter().enumerate().map(|(i, s)| GreedyNode::new(grid, i, &s.pvalues)).collect()
}

/// Round-based greedy aggregation.
///
/// Round 0 exchanges the sizes. In round 1 every node offers its best cell
/// count; from then on only the previous winner offers again. The center
/// takes the largest offer (lowest node on ties) while it is positive and the
/// running estimate `k / sum h` stays at or below `alpha`.
pub fn run_greedy_aggregation(
    sample: &LabeledSample,
    alpha: f64,
    epsilon: f64,
    est: EstimatorChoice,
) -> Result<ProtocolResult> {
    check_sample(sample)?;
    let n = sample.nodes.len();
    let m = sample.total();
    let mut messages = Vec::new();
    for (i, s) in sample.nodes.iter().enumerate() {
        messages.push(Message::up(0, i, Payload::Count(s.len() as u64), count_bits(s.len() as u64)));
    }
    messages.push(Message::broadcast(0, Payload::Count(m as u64), count_bits(m as u64)));
    let (grid, notes) = greedy_grid(sample, epsilon, est, m)?;
    let mut nodes = greedy_nodes(&grid, sample);
    let h_bits = count_bits(m as u64);

    let mut offers: Vec<i64> = nodes.iter().map(GreedyNode::offer).collect();
    for (i, &v) in offers.iter().enumerate() {
        messages.push(Message::up(1, i, Payload::Density(v), h_bits));
    }
    let mut round = 1;
    let mut h_sum = 0.0;
    let mut selected = Vec::new();
    let termination = loop {
        let (win, best) = offers
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("at least one node");
        if best < 0 {
            break Termination::AllRejected;
        }
        if best == 0 {
            break Termination::BudgetExhausted;
        }
        let next_sum = h_sum + empirical_h(best as usize, epsilon, m);
        if (round as f64) > alpha * next_sum {
            break Termination::FdrExceeded;
        }
        h_sum = next_sum;
        for i in 0..n {
            messages.push(Message::down(round, i, Payload::Control(i8::from(i == win)), CONTROL_BITS));
        }
        selected.push(CellId { node: win, cell: nodes[win].take() });
        round += 1;
        offers[win] = nodes[win].offer();
        messages.push(Message::up(round, win, Payload::Density(offers[win]), h_bits));
    };
    let termination = if selected.is_empty() { Termination::NoRejections } else { termination };
    let sel = IntervalSelection {
        fdr_hat: if selected.is_empty() { 0.0 } else { selected.len() as f64 / h_sum },
        selected,
        h_sum,
    };
    let outcomes = sel.outcomes(&grid, sample);
    let transcript = Transcript { messages, rounds: round, termination, notes };
    finish(outcomes, sample, transcript, sel.selected)
}

fn replay_greedy(
    transcript: &Transcript,
    sample: &LabeledSample,
    _alpha: f64,
    epsilon: f64,
    est: EstimatorChoice,
) -> Result<ProtocolResult> {
    let n = sample.nodes.len();
    let mut state: Option<(IntervalGrid, Vec<GreedyNode>, u64)> = None;
    let mut selected = Vec::new();
    for (k, msg) in transcript.messages.iter().enumerate() {
        match (msg.direction, msg.payload) {
            (Direction::Up, Payload::Count(mi)) => {
                let i = node_of(msg, n, k)?;
                if mi != sample.nodes[i].len() as u64 || msg.bits != count_bits(mi) {
                    return Err(mismatch(k, format!("node {} holds {} p-values", i + 1, sample.nodes[i].len())));
                }
            }
            (Direction::Broadcast, Payload::Count(m)) => {
                let (grid, _) = greedy_grid(sample, epsilon, est, m as usize)?;
                let nodes = greedy_nodes(&grid, sample);
                state = Some((grid, nodes, count_bits(m)));
            }
            (Direction::Up, Payload::Density(v)) => {
                let i = node_of(msg, n, k)?;
                let (_, nodes, h_bits) = state.as_ref().ok_or_else(|| mismatch(k, "offer before setup".into()))?;
                if v != nodes[i].offer() || msg.bits != *h_bits {
                    return Err(mismatch(k, format!("node {} would offer {}", i + 1, nodes[i].offer())));
                }
            }
            (Direction::Down, Payload::Control(c)) => {
                let i = node_of(msg, n, k)?;
                let (_, nodes, _) = state.as_mut().ok_or_else(|| mismatch(k, "control before setup".into()))?;
                if c == 1 {
                    if nodes[i].offer() < 0 {
                        return Err(mismatch(k, format!("node {} has nothing left to reject", i + 1)));
                    }
                    selected.push(CellId { node: i, cell: nodes[i].take() });
                }
            }
            _ => return Err(mismatch(k, "unexpected message for greedy aggregation".into())),
        }
    }
    let (grid, _, _) = state.ok_or_else(|| mismatch(transcript.messages.len(), "no setup broadcast".into()))?;
    let sel = IntervalSelection { selected, ..IntervalSelection::default() };
    let outcomes = sel.outcomes(&grid, sample);
    finish(outcomes, sample, transcript.clone(), sel.selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distmodel::{sample_trial, AlternativeModel, NetworkModel, SamplingPlan, TrialSeed};
    use crate::greedy::{cell_densities, greedy_select};

    fn sample(counts: &[usize], r0: &[f64], mu: f64, seed: u64) -> LabeledSample {
        let alts = vec![AlternativeModel::gaussian(mu); counts.len()];
        let net = NetworkModel::from_counts(counts, r0, &alts).unwrap();
        sample_trial(&net, &SamplingPlan::fixed(counts.to_vec()), TrialSeed::new(seed, 0)).unwrap()
    }

    fn hand_sample(nodes: Vec<Vec<f64>>) -> LabeledSample {
        LabeledSample {
            nodes: nodes
                .into_iter()
                .map(|p| {
                    let n = p.len();
                    NodeSample { pvalues: p, is_null: vec![false; n], true_r0: 0.5, mu: 1.0 }
                })
                .collect(),
        }
    }

    #[test]
    fn no_comm_single_node_is_adaptive_bh() {
        let s = sample(&[500], &[0.6], 2.5, 3);
        let r = run_no_comm(&s, 0.2, EstimatorChoice::Spacing).unwrap();
        let e = EstimatorChoice::Spacing.estimate(&s.nodes[0].pvalues, 0.6).unwrap();
        assert_eq!(r.outcomes[0], adaptive_bh(&s.nodes[0].pvalues, 0.2, &e).unwrap());
        assert_eq!((r.transcript.bits_up(), r.transcript.rounds), (0, 0));
        assert!(r.metrics.pooling_inequality_holds());
    }

    #[test]
    fn pooled_bits_and_single_node() {
        let s = sample(&[1000; 5], &[0.5, 0.6, 0.7, 0.8, 0.9], 2.0, 1);
        let r = run_pooled_bh(&s, 0.2, EstimatorChoice::Spacing).unwrap();
        assert_eq!(r.transcript.bits_up(), 320_000);
        let one = sample(&[800], &[0.7], 2.0, 2);
        let a = run_pooled_bh(&one, 0.2, EstimatorChoice::Storey { lambda: 0.5 }).unwrap();
        let b = run_no_comm(&one, 0.2, EstimatorChoice::Storey { lambda: 0.5 }).unwrap();
        assert_eq!(a.outcomes, b.outcomes);
    }

    #[test]
    fn pm_bits_and_single_node() {
        let s = sample(&[1000; 5], &[0.5, 0.6, 0.7, 0.8, 0.9], 2.0, 4);
        let r = run_proportion_matching(&s, 0.2, EstimatorChoice::Spacing, PmTarget::Nominal).unwrap();
        assert!(r.transcript.messages[..5].iter().all(|m| m.bits == 20));
        assert_eq!(r.transcript.messages[5].bits, 26);
        assert_eq!(r.transcript.bits_up(), 100);
        assert_eq!(r.transcript.bits_down(), 26);
        assert_eq!(r.transcript.rounds, 1);

        // a lone node with an exact count 600 = 0.6 * 1000 runs plain BH; an
        // estimated r0 goes through the rounded count and shifts alpha_1 by O(1/m)
        let one = sample(&[1000], &[0.6], 2.0, 5);
        let r = run_proportion_matching(&one, 0.2, EstimatorChoice::OracleTruth, PmTarget::Nominal).unwrap();
        assert_eq!(r.outcomes[0].rejected, bh_procedure(&one.nodes[0].pvalues, 0.2).rejected);
    }

    #[test]
    fn pm_homogeneous_equals_no_comm_at_matching_levels() {
        // same r0 estimate everywhere gives alpha_i = alpha
        let s = sample(&[400, 400], &[0.6, 0.6], 2.0, 6);
        let pm = run_proportion_matching(&s, 0.2, EstimatorChoice::OracleTruth, PmTarget::Nominal).unwrap();
        for (o, n) in pm.outcomes.iter().zip(&s.nodes) {
            assert_eq!(o.rejected, bh_procedure(&n.pvalues, 0.2).rejected);
        }
    }

    #[test]
    fn pm_no_signal() {
        let s = sample(&[200, 200], &[1.0, 1.0], 0.0, 7);
        let r = run_proportion_matching(&s, 0.2, EstimatorChoice::OracleTruth, PmTarget::Nominal).unwrap();
        assert_eq!(r.transcript.termination, Termination::NoRejections);
        assert_eq!(r.metrics.global.r, 0);
    }

    #[test]
    fn greedy_all_empty_cells() {
        // L = 0.07 / (0.5 * 0.5) = 0.28, K = 3, so 0.999 lies past every cell
        let s = hand_sample(vec![vec![0.999; 50], vec![0.999; 50]]);
        let r = run_greedy_aggregation(&s, 0.2, 0.07, EstimatorChoice::OracleTruth).unwrap();
        assert_eq!(r.transcript.termination, Termination::NoRejections);
        assert_eq!(r.transcript.rounds, 1);
        assert_eq!(r.metrics.global.r, 0);
    }

    #[test]
    fn greedy_matches_batch_and_replays() {
        for seed in 0..20 {
            let s = sample(&[600, 400, 300], &[0.5, 0.7, 0.8], 2.5, seed);
            let eps = 0.2 / (s.total() as f64).sqrt();
            let r = run_greedy_aggregation(&s, 0.2, eps, EstimatorChoice::Spacing).unwrap();
            let (grid, _) = greedy_grid(&s, eps, EstimatorChoice::Spacing, s.total()).unwrap();
            let batch = greedy_select(&cell_densities(&grid, &s).unwrap(), 0.2);
            assert_eq!(r.selected_cells, batch.selected);
            assert!(r.transcript.rounds <= batch.m() + 1);

            let text = r.transcript.to_text();
            let parsed = Transcript::parse(&text).unwrap();
            let again = replay(Method::Greedy { epsilon: eps }, &parsed, &s, 0.2, EstimatorChoice::Spacing).unwrap();
            assert_eq!(again, r);
            assert_eq!(again.transcript.to_text(), text);
        }
    }

    #[test]
    fn greedy_bits_are_per_message_sums() {
        let s = sample(&[1000, 500], &[0.5, 0.7], 3.0, 9);
        let eps = 0.2 / (s.total() as f64).sqrt();
        let r = run_greedy_aggregation(&s, 0.2, eps, EstimatorChoice::Spacing).unwrap();
        let t = &r.transcript;
        let h_bits = ceil_log2(1501);
        let offers = t.messages.iter().filter(|m| matches!(m.payload, Payload::Density(_))).count() as u64;
        let controls = t.messages.iter().filter(|m| matches!(m.payload, Payload::Control(_))).count() as u64;
        assert_eq!(t.bits_up(), ceil_log2(1001) + ceil_log2(501) + offers * h_bits);
        assert_eq!(t.bits_down(), ceil_log2(1501) + 2 * controls);
        // rounds k have k - 1 rejections before them; controls go to every node
        assert_eq!(controls, 2 * r.selected_cells.len() as u64);
    }

    #[test]
    fn replay_rejects_tampered_transcripts() {
        let s = sample(&[500, 500], &[0.5, 0.6], 3.0, 11);
        let eps = 0.2 / 1000f64.sqrt();
        let r = run_greedy_aggregation(&s, 0.2, eps, EstimatorChoice::Spacing).unwrap();
        let mut bad = r.transcript.clone();
        let k = bad.messages.iter().position(|m| matches!(m.payload, Payload::Density(_))).unwrap();
        if let Payload::Density(v) = bad.messages[k].payload {
            bad.messages[k].payload = Payload::Density(v + 1);
        }
        assert!(replay(Method::Greedy { epsilon: eps }, &bad, &s, 0.2, EstimatorChoice::Spacing).is_err());

        let pm = run_proportion_matching(&s, 0.2, EstimatorChoice::Spacing, PmTarget::Adapted).unwrap();
        let back = replay(Method::ProportionMatching(PmTarget::Adapted), &pm.transcript, &s, 0.2, EstimatorChoice::Spacing).unwrap();
        assert_eq!(back, pm);
    }

    #[test]
    fn estimator_failure_degrades_one_node() {
        // two p-values are too few for the spacing window
        let s = hand_sample(vec![vec![0.001, 0.002], (1..=100).map(|k| k as f64 / 1000.0).collect()]);
        let r = run_no_comm(&s, 0.2, EstimatorChoice::Spacing).unwrap();
        assert_eq!(r.outcomes[0].k_hat(), 0);
        assert_eq!(r.transcript.notes.len(), 1);
        let g = run_greedy_aggregation(&s, 0.2, 0.01, EstimatorChoice::Spacing).unwrap();
        assert!(g.selected_cells.iter().all(|c| c.node == 1));
    }
}
