//! Oracle rejection regions built from the known model densities, and the
//! robustness bounds for proportion matching under heterogeneity.
//!
//! The optimal rule rejects at node `i` where `g_i(x) / r0_i > t + 1`, that
//! is where `r1_i f_i(x) > t r0_i`, with the level `t = c_alpha` chosen as
//! the smallest value whose asymptotic FDR is at most `alpha`.
//!
//! Superlevel sets are located by sign changes on a uniform grid of
//! midpoints and refined by bisection. Features narrower than one grid cell
//! can be missed; the default resolution of 10^4 is ample for the Gaussian
//! and Cauchy location families, whose densities have at most two extrema.
//!
//! A node whose alternative density is flat (a zero location shift) enters
//! or leaves the level set all at once, so the family `Gamma(t)` jumps at
//! that level. When the jump straddles `alpha`, `Gamma(c_alpha)` is the best
//! level set but a region that takes part of the flat node can do better.

pub mod bounds;
pub mod region;

pub use bounds::{
    fdr_bound_consistent, fdr_bound_thm2, fdr_bound_thm3_power_thm4, heterogeneity_delta, measure_robustness_inputs,
    Bound, RobustnessBounds, RobustnessInputs,
};
pub use region::{Interval, RegionSet};

use crate::distmodel::{NetworkModel, NodeModel};
use crate::error::Result;
use crate::greedy::selection_asymptotics;

pub const DEFAULT_RESOLUTION: usize = 10_000;

const BOUNDARY_TOL: f64 = 1e-8;
const LEVEL_TOL: f64 = 1e-6;

/// Alternative density of one node sampled at cell midpoints.
struct DensityGrid {
    xs: Vec<f64>,
    f: Vec<f64>,
}

impl DensityGrid {
    fn new(node: &NodeModel, resolution: usize) -> Self {
        let n = resolution.max(2);
        let xs: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect();
        let f = xs.iter().map(|&x| node.alt.density(x)).collect();
        DensityGrid { xs, f }
    }
}

/// `{x : g(x) / r0 > t + 1}` for one node, as sorted disjoint intervals.
pub fn level_region(node: &NodeModel, t: f64, resolution: usize) -> Vec<Interval> {
    level_region_on(node, &DensityGrid::new(node, resolution), t)
}

fn level_region_on(node: &NodeModel, grid: &DensityGrid, t: f64) -> Vec<Interval> {
    let (r0, r1) = (node.r0, node.r1());
    let level = t * r0;
    let inside_f = |f: f64| r1 * f > level;
    let inside = |x: f64| inside_f(node.alt.density(x));
    let n = grid.xs.len();
    let mut out = Vec::new();
    let mut k = 0;
    // a run that starts below the first midpoint
    if !inside_f(grid.f[0]) {
        let mut x = grid.xs[0];
        for _ in 0..60 {
            let lower = 0.5 * x;
            if inside(lower) {
                let hi = bisect_boundary(&inside, lower, x);
                out.push(Interval { lo: 0.0, hi });
                break;
            }
            x = lower;
        }
    }
    while k < n {
        if !inside_f(grid.f[k]) {
            k += 1;
            continue;
        }
        let lo = if k == 0 { 0.0 } else { bisect_boundary(&inside, grid.xs[k], grid.xs[k - 1]) };
        let mut e = k;
        while e + 1 < n && inside_f(grid.f[e + 1]) {
            e += 1;
        }
        let hi = if e + 1 == n { 1.0 } else { bisect_boundary(&inside, grid.xs[e], grid.xs[e + 1]) };
        out.push(Interval { lo, hi });
        k = e + 1;
    }
    out
}

/// Boundary between `a` (inside) and `b` (outside), to [`BOUNDARY_TOL`].
fn bisect_boundary(inside: &impl Fn(f64) -> bool, mut a: f64, mut b: f64) -> f64 {
    while (a - b).abs() > BOUNDARY_TOL {
        let mid = 0.5 * (a + b);
        if inside(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Precomputed density grids for a whole network; evaluates the level
/// regions and their asymptotic FDR and power.
pub struct LevelSearch<'a> {
    net: &'a NetworkModel,
    grids: Vec<DensityGrid>,
}

impl<'a> LevelSearch<'a> {
    pub fn new(net: &'a NetworkModel, resolution: usize) -> Self {
        let grids = net.nodes().iter().map(|n| DensityGrid::new(n, resolution)).collect();
        LevelSearch { net, grids }
    }

    pub fn regions(&self, t: f64) -> RegionSet {
        let nodes = self.net.nodes().iter().zip(&self.grids).map(|(n, g)| level_region_on(n, g, t)).collect();
        RegionSet::new(nodes).expect("level sets are disjoint by construction")
    }

    /// `(FDR, power)` of the level-`t` regions.
    pub fn evaluate(&self, t: f64) -> (f64, f64) {
        selection_asymptotics(&self.regions(t), self.net).expect("shapes agree")
    }

    /// Smallest `t >= 0` whose regions have asymptotic FDR at most `alpha`.
    pub fn c_alpha(&self, alpha: f64) -> f64 {
        let fdr = |t: f64| self.evaluate(t).0;
        if fdr(0.0) <= alpha {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while fdr(hi) > alpha {
            lo = hi;
            hi *= 2.0;
            if hi > 1e15 {
                return hi;
            }
        }
        while hi - lo > LEVEL_TOL * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if fdr(mid) <= alpha {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

/// The level `c_alpha` of the optimal rule.
pub fn c_alpha_search(net: &NetworkModel, alpha: f64, resolution: usize) -> f64 {
    LevelSearch::new(net, resolution).c_alpha(alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalRegion {
    pub regions: RegionSet,
    pub c_alpha: f64,
    pub fdr: f64,
    pub power: f64,
}

/// The asymptotically optimal regions `Gamma(c_alpha)` and their FDR and power.
pub fn optimal_region(net: &NetworkModel, alpha: f64, resolution: usize) -> Result<OptimalRegion> {
    let search = LevelSearch::new(net, resolution);
    let c = search.c_alpha(alpha);
    let regions = search.regions(c);
    let (fdr, power) = selection_asymptotics(&regions, net)?;
    Ok(OptimalRegion { regions, c_alpha: c, fdr, power })
}
