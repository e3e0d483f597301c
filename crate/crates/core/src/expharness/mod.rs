//! Monte-Carlo driver for the simulation studies: runs every method on
//! independent trials at each sweep value and reports mean FDP and TDP with
//! standard errors, plus communication cost.

pub mod cli;
pub mod config;

pub use config::{builtin_config, ExperimentConfig, MethodKind, NodeSpec, SweepPoint, SweepVar, BUILTIN_IDS};

use std::fmt::Write as _;
use std::path::Path;

use crate::distmodel::{sample_trial, TrialSeed};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::netsim::{self, Method};
use crate::oracleopt::optimal_region;

pub const CSV_HEADER: &str = "sweep,method,fdr,fdr_se,power,power_se,bits_up,bits_down,rounds,trials";

/// Aggregated results of one method at one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep: f64,
    pub method: String,
    pub fdr: f64,
    pub fdr_se: f64,
    pub power: f64,
    pub power_se: f64,
    pub bits_up: f64,
    pub bits_down: f64,
    pub rounds: f64,
    /// Trials that completed; 0 for the analytic oracle row.
    pub trials: usize,
    /// Trials that returned an error and were left out of the averages.
    pub failed: usize,
}

impl ResultRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.sweep,
            self.method,
            self.fdr,
            self.fdr_se,
            self.power,
            self.power_se,
            self.bits_up,
            self.bits_down,
            self.rounds,
            self.trials
        )
    }
}

pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_line());
    }
    out
}

/// Writes `text` to a sibling temporary file and renames it into place, so
/// readers never see a partial file.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, text).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TrialStat {
    fdp: f64,
    tdp: f64,
    bits_up: f64,
    bits_down: f64,
    rounds: f64,
}

/// Mean and standard error of the mean (sample standard deviation over
/// `sqrt(n)`). Summation runs in trial order, so the result does not depend
/// on the execution strategy.
fn mean_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn protocol(kind: MethodKind, cfg: &ExperimentConfig, point: &SweepPoint) -> Option<Method> {
    match kind {
        MethodKind::NoComm => Some(Method::NoComm),
        MethodKind::PooledBh => Some(Method::PooledBh),
        MethodKind::PropMatching => Some(Method::ProportionMatching(cfg.pm_target)),
        MethodKind::Greedy => Some(Method::Greedy { epsilon: point.epsilon }),
        MethodKind::Optimal => None,
    }
}

/// Stream index of a trial: sweep values get disjoint stream ranges.
pub fn trial_stream(sweep_index: usize, trial: usize) -> u64 {
    ((sweep_index as u64) << 32) | trial as u64
}

/// Runs all trials of every sweep value. Rows come out in sweep order, then
/// in the configured method order.
pub fn run_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for (si, &value) in cfg.grid.iter().enumerate() {
        let point = cfg.point(value)?;
        let methods: Vec<(MethodKind, Method)> =
            cfg.methods.iter().filter_map(|&k| protocol(k, cfg, &point).map(|m| (k, m))).collect();
        let per_trial: Vec<Vec<std::result::Result<TrialStat, String>>> = exec.map_indexed(cfg.trials, |t| {
            let seed = TrialSeed::new(cfg.seed, trial_stream(si, t));
            let sample = match sample_trial(&point.net, &point.plan, seed) {
                Ok(s) => s,
                Err(e) => return vec![Err(format!("sampling: {e}")); methods.len()],
            };
            methods
                .iter()
                .map(|&(_, m)| {
                    netsim::run(m, &sample, cfg.alpha, cfg.estimator)
                        .map(|r| TrialStat {
                            fdp: r.metrics.global.fdp,
                            tdp: r.metrics.global.tdp,
                            bits_up: r.transcript.bits_up() as f64,
                            bits_down: r.transcript.bits_down() as f64,
                            rounds: r.transcript.rounds as f64,
                        })
                        .map_err(|e| e.to_string())
                })
                .collect()
        });
        for &kind in &cfg.methods {
            if kind == MethodKind::Optimal {
                let opt = optimal_region(&point.net, cfg.alpha, cfg.resolution)?;
                rows.push(ResultRow {
                    sweep: value,
                    method: kind.name().into(),
                    fdr: opt.fdr,
                    fdr_se: 0.0,
                    power: opt.power,
                    power_se: 0.0,
                    bits_up: 0.0,
                    bits_down: 0.0,
                    rounds: 0.0,
                    trials: 0,
                    failed: 0,
                });
                continue;
            }
            let j = methods.iter().position(|&(k, _)| k == kind).expect("protocol method");
            let ok: Vec<TrialStat> = per_trial.iter().filter_map(|v| v[j].as_ref().ok().copied()).collect();
            let failed = cfg.trials - ok.len();
            if failed > 0 {
                let first = per_trial.iter().find_map(|v| v[j].as_ref().err()).expect("a failure");
                eprintln!(
                    "warning: {} at {} = {value}: {failed} of {} trials failed (first: {first})",
                    kind.name(),
                    cfg.sweep.name(),
                    cfg.trials
                );
            }
            let (fdr, fdr_se) = mean_se(ok.iter().map(|s| s.fdp));
            let (power, power_se) = mean_se(ok.iter().map(|s| s.tdp));
            rows.push(ResultRow {
                sweep: value,
                method: kind.name().into(),
                fdr,
                fdr_se,
                power,
                power_se,
                bits_up: mean_se(ok.iter().map(|s| s.bits_up)).0,
                bits_down: mean_se(ok.iter().map(|s| s.bits_down)).0,
                rounds: mean_se(ok.iter().map(|s| s.rounds)).0,
                trials: ok.len(),
                failed,
            });
        }
    }
    Ok(rows)
}
