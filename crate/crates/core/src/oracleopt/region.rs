use std::fmt;

use crate::error::{Error, Result};

/// A subinterval of [0, 1]. Treated as half-open `(lo, hi]` for membership;
/// endpoints carry no probability mass under the continuous models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::InvalidModel(format!("interval ({lo}, {hi}] is not inside [0, 1]")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x <= self.hi
    }
}

/// Per-node finite unions of disjoint intervals, sorted within each node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegionSet {
    nodes: Vec<Vec<Interval>>,
}

impl RegionSet {
    /// Sorts each node's intervals and drops empty ones. Intervals may touch
    /// but not overlap.
    pub fn new(nodes: Vec<Vec<Interval>>) -> Result<Self> {
        let mut out = Vec::with_capacity(nodes.len());
        for (node, mut ivs) in nodes.into_iter().enumerate() {
            ivs.retain(|iv| !iv.is_empty());
            ivs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
            if ivs.windows(2).any(|w| w[0].hi > w[1].lo) {
                return Err(Error::OverlappingIntervals { node });
            }
            out.push(ivs);
        }
        Ok(RegionSet { nodes: out })
    }

    pub fn empty(n_nodes: usize) -> Self {
        RegionSet { nodes: vec![Vec::new(); n_nodes] }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// True when no node has any interval.
    pub fn is_empty(&self) -> bool {
        self.nodes.iter().all(Vec::is_empty)
    }

    pub fn nodes(&self) -> &[Vec<Interval>] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &[Interval] {
        &self.nodes[i]
    }

    /// Lebesgue measure of node `i`'s region.
    pub fn measure(&self, i: usize) -> f64 {
        self.nodes[i].iter().map(Interval::len).sum()
    }

    pub fn contains(&self, node: usize, x: f64) -> bool {
        self.nodes[node].iter().any(|iv| iv.contains(x))
    }

    /// Merges touching intervals within each node.
    pub fn coalesced(&self) -> RegionSet {
        let nodes = self
            .nodes
            .iter()
            .map(|ivs| {
                let mut merged: Vec<Interval> = Vec::with_capacity(ivs.len());
                for iv in ivs {
                    match merged.last_mut() {
                        Some(last) if last.hi >= iv.lo => last.hi = last.hi.max(iv.hi),
                        _ => merged.push(*iv),
                    }
                }
                merged
            })
            .collect();
        RegionSet { nodes }
    }
}

impl fmt::Display for RegionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, ivs) in self.nodes.iter().enumerate() {
            write!(f, "node {}:", i + 1)?;
            if ivs.is_empty() {
                write!(f, " (empty)")?;
            }
            for iv in ivs {
                write!(f, " ({:.6}, {:.6}]", iv.lo, iv.hi)?;
            }
            if i + 1 < self.nodes.len() {
                writeln!(f)?;
            }
        }
        Ok(())
    }
}
