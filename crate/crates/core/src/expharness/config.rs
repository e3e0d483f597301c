//! Experiment configurations: the built-in simulation studies and a
//! line-oriented `key = value` file format for custom ones.

use crate::distmodel::{AltKind, AlternativeModel, Dependence, NetworkModel, SamplingPlan};
use crate::error::{Error, Result};
use crate::estimators::EstimatorChoice;
use crate::netsim::PmTarget;

/// A method evaluated by the harness. `Optimal` is the sample-free oracle
/// region, reported once per sweep value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    NoComm,
    PooledBh,
    PropMatching,
    Greedy,
    Optimal,
}

impl MethodKind {
    pub const ALL: [MethodKind; 5] =
        [MethodKind::NoComm, MethodKind::PooledBh, MethodKind::PropMatching, MethodKind::Greedy, MethodKind::Optimal];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::NoComm => "no_comm",
            MethodKind::PooledBh => "pooled_bh",
            MethodKind::PropMatching => "prop_matching",
            MethodKind::Greedy => "greedy",
            MethodKind::Optimal => "optimal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s.trim())
    }

    /// Parses a comma-separated list.
    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        let list: Vec<Self> = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| Self::parse(t).ok_or_else(|| Error::Config { line: 0, msg: format!("unknown method {:?}", t.trim()) }))
            .collect::<Result<_>>()?;
        if list.is_empty() {
            return Err(Error::Config { line: 0, msg: "empty method list".into() });
        }
        Ok(list)
    }
}

/// The parameter varied across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    /// Scales every node's size: `m_i = round(w_i n)`.
    N,
    /// Scales every node's base mean: `mu_i = eta * mu_i`.
    Eta,
    /// Sets every node's base mean.
    Mu,
    /// Within-node AR(1) correlation.
    Rho,
    /// Single point; the grid value is only a label.
    None,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::N => "n",
            SweepVar::Eta => "eta",
            SweepVar::Mu => "mu",
            SweepVar::Rho => "rho",
            SweepVar::None => "none",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [SweepVar::N, SweepVar::Eta, SweepVar::Mu, SweepVar::Rho, SweepVar::None].into_iter().find(|v| v.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSpec {
    /// Size weight: the node holds `round(weight * n)` p-values.
    pub weight: f64,
    pub r0: f64,
    pub kind: AltKind,
    /// Base mean of the alternative statistic.
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: String,
    pub nodes: Vec<NodeSpec>,
    pub n: f64,
    /// Half-width of the per-trial uniform jitter around each base mean.
    pub jitter: f64,
    pub alpha: f64,
    /// `eps = epsilon_mult * alpha / sqrt(m)`.
    pub epsilon_mult: f64,
    /// Multiply `epsilon_mult` by the sweep value (the `eta` study).
    pub epsilon_follows_sweep: bool,
    pub rho: f64,
    pub sweep: SweepVar,
    pub grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<MethodKind>,
    pub estimator: EstimatorChoice,
    pub pm_target: PmTarget,
    /// Grid resolution for the oracle region.
    pub resolution: usize,
}

/// Everything needed to run trials at one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub sizes: Vec<usize>,
    /// Model with base means; trials jitter them.
    pub net: NetworkModel,
    pub plan: SamplingPlan,
    pub epsilon: f64,
}

pub const BUILTIN_IDS: [&str; 5] = ["1", "2a", "2b", "2c", "3"];

/// `r0_i = 0.5 + 0.1 (i - 1)`, `w_i = 1 - 0.2 (i - 1)` for five nodes.
fn five_nodes(kinds: [AltKind; 5], mu: impl Fn(usize) -> f64) -> Vec<NodeSpec> {
    (1..=5)
        .map(|i| NodeSpec {
            weight: 1.0 - 0.2 * (i - 1) as f64,
            r0: 0.5 + 0.1 * (i - 1) as f64,
            kind: kinds[i - 1],
            mu: mu(i),
        })
        .collect()
}

fn steps(from: f64, to: f64, step: f64) -> Vec<f64> {
    let n = ((to - from) / step).round() as usize;
    (0..=n).map(|k| from + k as f64 * step).collect()
}

/// The built-in studies `1`, `2a`, `2b`, `2c` and `3`.
pub fn builtin_config(id: &str) -> Result<ExperimentConfig> {
    use AltKind::{CauchyLocation as C, GaussianLocation as G};
    let base = ExperimentConfig {
        id: id.to_string(),
        nodes: five_nodes([G; 5], |i| 1.25 * i as f64),
        n: 1000.0,
        jitter: 0.5,
        alpha: 0.2,
        epsilon_mult: 1.0,
        epsilon_follows_sweep: false,
        rho: 0.0,
        sweep: SweepVar::None,
        grid: vec![0.0],
        trials: 1000,
        seed: 1,
        methods: MethodKind::ALL.to_vec(),
        estimator: EstimatorChoice::Spacing,
        pm_target: PmTarget::Adapted,
        resolution: crate::oracleopt::DEFAULT_RESOLUTION,
    };
    let cfg = match id {
        "1" => ExperimentConfig {
            sweep: SweepVar::N,
            grid: vec![100.0, 300.0, 1000.0, 3000.0, 10_000.0, 30_000.0, 100_000.0],
            ..base
        },
        "2a" => ExperimentConfig {
            nodes: five_nodes([G; 5], |i| i as f64),
            sweep: SweepVar::Eta,
            grid: steps(0.5, 2.0, 0.25),
            epsilon_follows_sweep: true,
            ..base
        },
        "2b" => ExperimentConfig {
            nodes: five_nodes([C; 5], |_| 1.0),
            sweep: SweepVar::Mu,
            grid: steps(2.0, 10.0, 1.0),
            epsilon_mult: 2.5,
            ..base
        },
        "2c" => ExperimentConfig {
            nodes: five_nodes([C, G, C, G, C], |_| 1.0),
            sweep: SweepVar::Mu,
            grid: steps(2.0, 5.0, 0.5),
            epsilon_mult: 2.5,
            ..base
        },
        "3" => ExperimentConfig { sweep: SweepVar::Rho, grid: steps(0.0, 0.9, 0.1), ..base },
        _ => return Err(Error::UnknownExperiment(id.to_string())),
    };
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config { line: 0, msg });
        if self.nodes.is_empty() {
            return bad("no nodes".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.grid.is_empty() {
            return bad("sweep grid is empty".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha = {} not in (0, 1)", self.alpha));
        }
        if self.methods.is_empty() {
            return bad("no methods".into());
        }
        if !(self.epsilon_mult > 0.0) {
            return bad(format!("epsilon_mult = {} must be positive", self.epsilon_mult));
        }
        Ok(())
    }

    /// Node sizes at scale `n`, rounded to the nearest integer.
    pub fn sizes(&self, n: f64) -> Vec<usize> {
        self.nodes.iter().map(|s| (s.weight * n).round() as usize).collect()
    }

    /// Resolves the sweep value into a concrete model and sampling plan.
    pub fn point(&self, value: f64) -> Result<SweepPoint> {
        let n = if self.sweep == SweepVar::N { value } else { self.n };
        let sizes = self.sizes(n);
        let m: usize = sizes.iter().sum();
        if m == 0 {
            return Err(Error::Config { line: 0, msg: format!("no p-values at {} = {value}", self.sweep.name()) });
        }
        let mu = |s: &NodeSpec| match self.sweep {
            SweepVar::Eta => value * s.mu,
            SweepVar::Mu => value,
            _ => s.mu,
        };
        let r0: Vec<f64> = self.nodes.iter().map(|s| s.r0).collect();
        let alts: Vec<AlternativeModel> =
            self.nodes.iter().map(|s| AlternativeModel { kind: s.kind, mu: mu(s) }).collect();
        // zero-size nodes keep a tiny weight so the model stays valid
        let weights: Vec<usize> = sizes.iter().map(|&c| c.max(1)).collect();
        let net = NetworkModel::from_counts(&weights, &r0, &alts)?;
        let rho = if self.sweep == SweepVar::Rho { value } else { self.rho };
        let dependence = if rho == 0.0 { Dependence::Independent } else { Dependence::TaperingAr { rho } };
        let mut plan = SamplingPlan::fixed(sizes.clone());
        plan.dependence = dependence;
        plan.mean_jitter = (self.jitter > 0.0).then_some(self.jitter);
        let mult = if self.epsilon_follows_sweep { self.epsilon_mult * value } else { self.epsilon_mult };
        let epsilon = mult * self.alpha / (m as f64).sqrt();
        Ok(SweepPoint { value, sizes, net, plan, epsilon })
    }

    /// Parses the `key = value` format. Unknown keys are errors.
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig {
            id: "custom".into(),
            nodes: Vec::new(),
            n: 1.0,
            jitter: 0.0,
            alpha: 0.2,
            epsilon_mult: 1.0,
            epsilon_follows_sweep: false,
            rho: 0.0,
            sweep: SweepVar::None,
            grid: vec![0.0],
            trials: 100,
            seed: 1,
            methods: MethodKind::ALL.to_vec(),
            estimator: EstimatorChoice::Spacing,
            pm_target: PmTarget::Adapted,
            resolution: crate::oracleopt::DEFAULT_RESOLUTION,
        };
        let mut grid_set = false;
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let err = |msg: String| Error::Config { line: line_no, msg };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, val) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let (key, val) = (key.trim(), val.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|_| err(format!("{key}: not a number: {v:?}")));
            match key {
                "id" => cfg.id = val.to_string(),
                "alpha" => cfg.alpha = num(val)?,
                "trials" => cfg.trials = val.parse().map_err(|_| err(format!("trials: bad count {val:?}")))?,
                "seed" => cfg.seed = val.parse().map_err(|_| err(format!("seed: bad value {val:?}")))?,
                "n" => cfg.n = num(val)?,
                "jitter" => cfg.jitter = num(val)?,
                "epsilon_mult" => cfg.epsilon_mult = num(val)?,
                "epsilon_follows_sweep" => {
                    cfg.epsilon_follows_sweep = val.parse().map_err(|_| err(format!("expected true or false, got {val:?}")))?
                }
                "rho" => cfg.rho = num(val)?,
                "resolution" => cfg.resolution = val.parse().map_err(|_| err(format!("resolution: bad value {val:?}")))?,
                "estimator" => {
                    cfg.estimator = EstimatorChoice::parse(val).ok_or_else(|| err(format!("unknown estimator {val:?}")))?
                }
                "pm_target" => {
                    cfg.pm_target = match val {
                        "nominal" => PmTarget::Nominal,
                        "adapted" => PmTarget::Adapted,
                        _ => return Err(err(format!("pm_target must be nominal or adapted, got {val:?}"))),
                    }
                }
                "methods" => {
                    cfg.methods = MethodKind::parse_list(val).map_err(|e| match e {
                        Error::Config { msg, .. } => err(msg),
                        other => other,
                    })?
                }
                "sweep" => cfg.sweep = SweepVar::parse(val).ok_or_else(|| err(format!("unknown sweep {val:?}")))?,
                "grid" => {
                    cfg.grid = val.split(',').map(|v| num(v.trim())).collect::<Result<_>>()?;
                    grid_set = true;
                }
                "node" => cfg.nodes.push(parse_node(val).map_err(err)?),
                _ => return Err(err(format!("unknown key {key:?}"))),
            }
        }
        if cfg.sweep != SweepVar::None && !grid_set {
            return Err(Error::Config { line: 0, msg: format!("sweep = {} needs a grid", cfg.sweep.name()) });
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `m=1000 r0=0.5 alt=gaussian mu=2`.
fn parse_node(text: &str) -> std::result::Result<NodeSpec, String> {
    let (mut m, mut r0, mut kind, mut mu) = (None, None, AltKind::GaussianLocation, 0.0);
    for tok in text.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| format!("node field {tok:?} is not key=value"))?;
        let num = || v.parse::<f64>().map_err(|_| format!("node {k}: not a number: {v:?}"));
        match k {
            "m" => m = Some(num()?),
            "r0" => r0 = Some(num()?),
            "mu" => mu = num()?,
            "alt" => {
                kind = match v {
                    "gaussian" => AltKind::GaussianLocation,
                    "cauchy" => AltKind::CauchyLocation,
                    _ => return Err(format!("unknown alternative {v:?}")),
                }
            }
            _ => return Err(format!("unknown node field {k:?}")),
        }
    }
    let weight = m.ok_or("node needs m=")?;
    let r0 = r0.ok_or("node needs r0=")?;
    if !(weight >= 0.0) {
        return Err(format!("node m = {weight} must be non-negative"));
    }
    if !(r0 > 0.0 && r0 <= 1.0) {
        return Err(format!("node r0 = {r0} not in (0, 1]"));
    }
    Ok(NodeSpec { weight, r0, kind, mu })
}
