//! Interval-grid selection: per-node candidate cells, their p-value
//! densities, the oracle top-`M*` selection and its batch empirical form.

use std::cmp::Ordering;

use crate::distmodel::{LabeledSample, NetworkModel};
use crate::error::{Error, Result};
use crate::oracleopt::region::{Interval, RegionSet};
use crate::procedures::RejectionOutcome;

/// Per-node cell length `L = eps / (q r0)` and count `K = floor(1 / L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalGrid {
    pub epsilon: f64,
    pub cell_len: Vec<f64>,
    pub cells: Vec<usize>,
}

impl IntervalGrid {
    pub fn n_nodes(&self) -> usize {
        self.cells.len()
    }

    pub fn total_cells(&self) -> usize {
        self.cells.iter().sum()
    }

    /// The half-open cell `((j - 1) L, j L]`, `j` 1-based.
    pub fn interval(&self, id: CellId) -> Interval {
        let l = self.cell_len[id.node];
        Interval { lo: (id.cell - 1) as f64 * l, hi: (id.cell as f64 * l).min(1.0) }
    }

    /// The cell of node `node` containing `p`, if any. `p` above `K L` falls
    /// in no cell.
    pub fn cell_of(&self, node: usize, p: f64) -> Option<usize> {
        let (l, k) = (self.cell_len[node], self.cells[node]);
        if k == 0 || !(p > 0.0) {
            return None;
        }
        // the division can be off by one at a boundary; settle against j * L
        let mut j = ((p / l).ceil() as usize).max(1);
        while j > 1 && p <= (j - 1) as f64 * l {
            j -= 1;
        }
        while p > j as f64 * l {
            j += 1;
        }
        (j <= k).then_some(j)
    }
}

/// Builds the grid from (possibly estimated) `q` and `r0` per node.
pub fn build_grid(epsilon: f64, q_hat: &[f64], r0_hat: &[f64]) -> Result<IntervalGrid> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::BadEpsilon(epsilon));
    }
    if q_hat.len() != r0_hat.len() {
        return Err(Error::ShapeMismatch(format!("{} weights vs {} null proportions", q_hat.len(), r0_hat.len())));
    }
    let mut cell_len = Vec::with_capacity(q_hat.len());
    let mut cells = Vec::with_capacity(q_hat.len());
    for (&q, &r0) in q_hat.iter().zip(r0_hat) {
        if !(q > 0.0) || !(r0 > 0.0) {
            return Err(Error::InvalidModel(format!("grid needs q > 0 and r0 > 0, got q = {q}, r0 = {r0}")));
        }
        let l = epsilon / (q * r0);
        let mut k = if l > 1.0 { 0 } else { (1.0 / l).floor() as usize };
        while k > 0 && k as f64 * l > 1.0 {
            k -= 1;
        }
        cell_len.push(l);
        cells.push(k);
    }
    Ok(IntervalGrid { epsilon, cell_len, cells })
}

/// Identifies cell `cell` (1-based) of node `node` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId {
    pub node: usize,
    pub cell: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellDensity {
    pub id: CellId,
    /// p-values in the cell (0 for population densities).
    pub count: usize,
    pub h: f64,
}

/// Empirical density `h = count / (eps m)` of every cell, `m` the network
/// total.
pub fn cell_densities(grid: &IntervalGrid, sample: &LabeledSample) -> Result<Vec<CellDensity>> {
    if grid.n_nodes() != sample.nodes.len() {
        return Err(Error::ShapeMismatch(format!("grid has {} nodes, sample {}", grid.n_nodes(), sample.nodes.len())));
    }
    let m = sample.total();
    let mut out = Vec::with_capacity(grid.total_cells());
    for (node, s) in sample.nodes.iter().enumerate() {
        let counts = node_cell_counts(grid, node, &s.pvalues);
        out.extend(counts.into_iter().enumerate().map(|(j, count)| CellDensity {
            id: CellId { node, cell: j + 1 },
            count,
            h: empirical_h(count, grid.epsilon, m),
        }));
    }
    Ok(out)
}

/// `count / (eps m)`, shared by the batch and message-passing forms so both
/// see identical floats.
#[inline]
pub fn empirical_h(count: usize, epsilon: f64, m: usize) -> f64 {
    if count == 0 {
        return 0.0;
    }
    count as f64 / (epsilon * m as f64)
}

/// Cell counts of one node's p-values (index `j - 1` holds cell `j`).
pub fn node_cell_counts(grid: &IntervalGrid, node: usize, pvalues: &[f64]) -> Vec<usize> {
    let mut counts = vec![0usize; grid.cells[node]];
    for &p in pvalues {
        if let Some(j) = grid.cell_of(node, p) {
            counts[j - 1] += 1;
        }
    }
    counts
}

/// `max{0 <= M <= |h| : M <= alpha * (sum of the M largest h)}`.
pub fn select_mstar(h_values: &[f64], alpha: f64) -> usize {
    let mut sorted = h_values.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    mstar_sorted(&sorted, alpha)
}

fn mstar_sorted(desc: &[f64], alpha: f64) -> usize {
    let mut sum = 0.0;
    let mut best = 0;
    for (i, &h) in desc.iter().enumerate() {
        sum += h;
        if (i + 1) as f64 <= alpha * sum {
            best = i + 1;
        }
    }
    best
}

/// Cells chosen by a selector, in the order they were taken.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalSelection {
    pub selected: Vec<CellId>,
    /// `M / (sum of selected h)`, 0 when nothing is selected.
    pub fdr_hat: f64,
    /// Sum of the selected densities.
    pub h_sum: f64,
}

impl IntervalSelection {
    pub fn m(&self) -> usize {
        self.selected.len()
    }

    pub fn regions(&self, grid: &IntervalGrid) -> RegionSet {
        let mut nodes = vec![Vec::new(); grid.n_nodes()];
        for &id in &self.selected {
            nodes[id.node].push(grid.interval(id));
        }
        // cells of one grid never overlap
        RegionSet::new(nodes).expect("grid cells are disjoint")
    }

    /// Rejections implied at each node: every p-value inside a selected cell.
    pub fn outcomes(&self, grid: &IntervalGrid, sample: &LabeledSample) -> Vec<RejectionOutcome> {
        let mut chosen: Vec<Vec<bool>> = grid.cells.iter().map(|&k| vec![false; k]).collect();
        for id in &self.selected {
            chosen[id.node][id.cell - 1] = true;
        }
        sample
            .nodes
            .iter()
            .enumerate()
            .map(|(node, s)| RejectionOutcome {
                rejected: (0..s.len())
                    .filter(|&k| grid.cell_of(node, s.pvalues[k]).is_some_and(|j| chosen[node][j - 1]))
                    .collect(),
                tau: None,
            })
            .collect()
    }
}

/// Orders by `h` descending, then `(node, cell)` ascending.
fn by_density(a: &CellDensity, b: &CellDensity) -> Ordering {
    b.h.total_cmp(&a.h).then(a.id.cmp(&b.id))
}

/// Takes the `M` densest cells with `M` maximal subject to
/// `M <= alpha * sum h`. Cells with zero density are never candidates, so a
/// selection never ends on an empty cell.
pub fn greedy_select(densities: &[CellDensity], alpha: f64) -> IntervalSelection {
    let mut cands: Vec<CellDensity> = densities.iter().copied().filter(|d| d.h > 0.0).collect();
    cands.sort_by(by_density);
    let h: Vec<f64> = cands.iter().map(|d| d.h).collect();
    let m = mstar_sorted(&h, alpha);
    let h_sum: f64 = h[..m].iter().sum();
    IntervalSelection {
        selected: cands[..m].iter().map(|d| d.id).collect(),
        fdr_hat: if m == 0 { 0.0 } else { m as f64 / h_sum },
        h_sum,
    }
}

/// Grid built from the true `q`, `r0` and population densities
/// `h = q (G(jL) - G((j - 1)L)) / eps` for every cell.
pub fn oracle_cell_densities(net: &NetworkModel, epsilon: f64) -> Result<(IntervalGrid, Vec<CellDensity>)> {
    let q: Vec<f64> = net.nodes().iter().map(|n| n.q).collect();
    let r0: Vec<f64> = net.nodes().iter().map(|n| n.r0).collect();
    let grid = build_grid(epsilon, &q, &r0)?;
    let mut out = Vec::with_capacity(grid.total_cells());
    for (node, model) in net.nodes().iter().enumerate() {
        for cell in 1..=grid.cells[node] {
            let id = CellId { node, cell };
            let iv = grid.interval(id);
            let h = model.q * (model.cdf(iv.hi) - model.cdf(iv.lo)) / epsilon;
            out.push(CellDensity { id, count: 0, h });
        }
    }
    Ok((grid, out))
}

/// The oracle selection: top-`M*` cells by true density.
pub fn oracle_interval_set(net: &NetworkModel, epsilon: f64, alpha: f64) -> Result<(IntervalGrid, IntervalSelection)> {
    let (grid, dens) = oracle_cell_densities(net, epsilon)?;
    let sel = greedy_select(&dens, alpha);
    Ok((grid, sel))
}

/// Asymptotic FDR and power of rejecting `regions` at every node:
/// FDR = `sum q r0 |region| / sum q G(region)`, power = `sum q r1 F(region) / r1*`.
pub fn selection_asymptotics(regions: &RegionSet, net: &NetworkModel) -> Result<(f64, f64)> {
    if regions.len() != net.len() {
        return Err(Error::ShapeMismatch(format!("{} region nodes for {} model nodes", regions.len(), net.len())));
    }
    let (mut null_mass, mut total_mass, mut alt_mass) = (0.0, 0.0, 0.0);
    for (i, (ivs, node)) in regions.nodes().iter().zip(net.nodes()).enumerate() {
        if ivs.windows(2).any(|w| w[0].hi > w[1].lo) {
            return Err(Error::OverlappingIntervals { node: i });
        }
        let nu: f64 = ivs.iter().map(Interval::len).sum();
        let f: f64 = ivs.iter().map(|iv| node.alt.cdf(iv.hi) - node.alt.cdf(iv.lo)).sum();
        null_mass += node.q * node.r0 * nu;
        alt_mass += node.q * node.r1() * f;
        total_mass += node.q * (node.r0 * nu + node.r1() * f);
    }
    let fdr = if null_mass > 0.0 { null_mass / total_mass } else { 0.0 };
    let r1 = net.r1_star();
    let power = if r1 > 0.0 { alt_mass / r1 } else { 0.0 };
    Ok((fdr, power))
}
