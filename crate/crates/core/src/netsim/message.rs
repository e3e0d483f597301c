use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// An endpoint of the star network. Nodes are 0-based internally and printed
/// 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    Center,
    Node(usize),
    /// Every leaf at once; only used as a receiver.
    All,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Center => write!(f, "center"),
            Party::Node(i) => write!(f, "node{}", i + 1),
            Party::All => write!(f, "all"),
        }
    }
}

impl FromStr for Party {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "center" => Ok(Party::Center),
            "all" => Ok(Party::All),
            _ => s
                .strip_prefix("node")
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n >= 1)
                .map(|n| Party::Node(n - 1))
                .ok_or_else(|| format!("unknown party {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
    Broadcast,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Broadcast => "broadcast",
        })
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "up" => Ok(Direction::Up),
            "down" => Ok(Direction::Down),
            "broadcast" => Ok(Direction::Broadcast),
            _ => Err(format!("unknown direction {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payload {
    /// A p-value count (`m_i` up, `m` down).
    Count(u64),
    /// `(m_i, m0_i)` up or `(m, sum m0_i)` down.
    CountPair { m: u64, m0: u64 },
    /// The cell count behind an `h` value, or -1 when nothing is left.
    Density(i64),
    /// 1 to reject the offered cell, 0 otherwise.
    Control(i8),
    /// Shipping this many raw p-values.
    PValues(u64),
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::Count(m) => write!(f, "count={m}"),
            Payload::CountPair { m, m0 } => write!(f, "m={m},m0={m0}"),
            Payload::Density(h) => write!(f, "h={h}"),
            Payload::Control(c) => write!(f, "ctl={c}"),
            Payload::PValues(n) => write!(f, "pvalues={n}"),
        }
    }
}

impl FromStr for Payload {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("bad payload {s:?}");
        let (key, val) = s.split_once('=').ok_or_else(bad)?;
        match key {
            "count" => val.parse().map(Payload::Count).map_err(|_| bad()),
            "h" => val.parse().map(Payload::Density).map_err(|_| bad()),
            "ctl" => val.parse().map(Payload::Control).map_err(|_| bad()),
            "pvalues" => val.parse().map(Payload::PValues).map_err(|_| bad()),
            "m" => {
                let (m, rest) = val.split_once(",m0=").ok_or_else(bad)?;
                Ok(Payload::CountPair { m: m.parse().map_err(|_| bad())?, m0: rest.parse().map_err(|_| bad())? })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Message {
    pub round: usize,
    pub direction: Direction,
    pub sender: Party,
    pub receiver: Party,
    pub payload: Payload,
    pub bits: u64,
}

impl Message {
    pub fn up(round: usize, node: usize, payload: Payload, bits: u64) -> Self {
        Message { round, direction: Direction::Up, sender: Party::Node(node), receiver: Party::Center, payload, bits }
    }

    pub fn down(round: usize, node: usize, payload: Payload, bits: u64) -> Self {
        Message { round, direction: Direction::Down, sender: Party::Center, receiver: Party::Node(node), payload, bits }
    }

    pub fn broadcast(round: usize, payload: Payload, bits: u64) -> Self {
        Message { round, direction: Direction::Broadcast, sender: Party::Center, receiver: Party::All, payload, bits }
    }
}

/// Why a protocol stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Termination {
    /// One-shot protocols that ran to the end.
    #[default]
    Completed,
    /// The best remaining cell is empty.
    BudgetExhausted,
    /// Taking the best remaining cell would push the estimated FDR over alpha.
    FdrExceeded,
    /// Every node reported -1.
    AllRejected,
    NoRejections,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::BudgetExhausted => "budget_exhausted",
            Termination::FdrExceeded => "fdr_exceeded",
            Termination::AllRejected => "all_rejected",
            Termination::NoRejections => "no_rejections",
        }
    }
}

impl FromStr for Termination {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [
            Termination::Completed,
            Termination::BudgetExhausted,
            Termination::FdrExceeded,
            Termination::AllRejected,
            Termination::NoRejections,
        ]
        .into_iter()
        .find(|t| t.name() == s)
        .ok_or_else(|| format!("unknown termination {s:?}"))
    }
}

/// Everything sent during one protocol run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Transcript {
    pub messages: Vec<Message>,
    pub rounds: usize,
    pub termination: Termination,
    /// Per-node degradations such as estimator failures.
    pub notes: Vec<String>,
}

impl Transcript {
    pub fn bits_up(&self) -> u64 {
        self.messages.iter().filter(|m| m.direction == Direction::Up).map(|m| m.bits).sum()
    }

    /// Center-to-node bits; a broadcast is counted once.
    pub fn bits_down(&self) -> u64 {
        self.messages.iter().filter(|m| m.direction != Direction::Up).map(|m| m.bits).sum()
    }

    /// Line-oriented form: `#`-prefixed header lines, then one message per
    /// line as `round, direction, sender, receiver, payload, bits` separated
    /// by tabs.
    pub fn to_text(&self) -> String {
        let mut out = format!("# rounds\t{}\n# termination\t{}\n", self.rounds, self.termination.name());
        for n in &self.notes {
            out.push_str("# note\t");
            out.push_str(&n.replace(['\n', '\t'], " "));
            out.push('\n');
        }
        for m in &self.messages {
            out.push_str(&format!("{}\t{}\t{}\t{}\t{}\t{}\n", m.round, m.direction, m.sender, m.receiver, m.payload, m.bits));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Transcript> {
        let mut t = Transcript::default();
        for (k, line) in text.lines().enumerate() {
            let err = |msg: String| Error::Transcript { line: k + 1, msg };
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# ") {
                let (key, val) = rest.split_once('\t').ok_or_else(|| err("header needs a tab".into()))?;
                match key {
                    "rounds" => t.rounds = val.parse().map_err(|_| err(format!("bad rounds {val:?}")))?,
                    "termination" => t.termination = val.parse().map_err(err)?,
                    "note" => t.notes.push(val.to_string()),
                    _ => return Err(err(format!("unknown header {key:?}"))),
                }
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 6 {
                return Err(err(format!("expected 6 fields, found {}", f.len())));
            }
            t.messages.push(Message {
                round: f[0].parse().map_err(|_| err(format!("bad round {:?}", f[0])))?,
                direction: f[1].parse().map_err(err)?,
                sender: f[2].parse().map_err(err)?,
                receiver: f[3].parse().map_err(err)?,
                payload: f[4].parse().map_err(err)?,
                bits: f[5].parse().map_err(|_| err(format!("bad bits {:?}", f[5])))?,
            });
        }
        Ok(t)
    }
}

/// `ceil(log2(x))` for `x >= 1`; 0 for `x <= 1`.
pub fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        u64::from(64 - (x - 1).leading_zeros())
    }
}
