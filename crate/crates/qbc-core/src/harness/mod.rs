//! Batch experiments: grids of protocol configurations, exact security
//! values where they can be computed, and seeded Monte Carlo runs checked
//! against exact acceptance probabilities.

mod emit;
mod exact;
mod verify;

pub use emit::{emit_report, to_csv, to_json, Format, CSV_HEADER};
pub use exact::{accept_oracle, commitment_exact, qbc2a_concealing, CommitmentExact};
pub use verify::{verify_suite, Check};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::adversary::{AdamSuccess, Estimate, Method, SecurityReport};
use crate::error::{Error, Result};
use crate::numfmt::Real17;
use crate::protocol::{run_protocol, AdamStrategy, BabeStrategy, Play, Protocol, ProtocolConfig, Status};

pub const SCHEMA_VERSION: u32 = 1;

/// Runs whose sampled rate sits further than this many standard errors from
/// its exact value fail the experiment.
pub const Z_FAIL: f64 = 4.0;

/// SplitMix64 finalizer applied to `master + (index + 1)·0x9E3779B97F4A7C15`.
///
/// ```text
/// z = master + (index + 1) * 0x9E3779B97F4A7C15   (mod 2^64)
/// z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
/// z = (z ^ (z >> 27)) * 0x94D049BB133111EB
/// return z ^ (z >> 31)
/// ```
///
/// Each step is a bijection on `u64`, so distinct indices never collide for
/// a fixed master seed.
pub fn seed_split(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Values swept over, outermost first in declaration order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axes {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(rename = "mCheck", default, skip_serializing_if = "Option::is_none")]
    pub m_check: Option<Vec<usize>>,
    #[serde(rename = "Nc", default, skip_serializing_if = "Option::is_none")]
    pub nc: Option<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub base: ProtocolConfig,
    #[serde(default)]
    pub axes: Axes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConfigSource {
    Grid(Grid),
    Single(ProtocolConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Strategies {
    #[serde(default = "honest")]
    pub adam: Play,
    #[serde(default = "honest")]
    pub babe: Play,
}

fn honest() -> Play {
    Play::Honest
}

impl Default for Strategies {
    fn default() -> Self {
        Self { adam: Play::Honest, babe: Play::Honest }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Exact,
    #[default]
    MonteCarlo,
}

fn default_trials() -> u64 {
    10_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub config: ConfigSource,
    #[serde(default)]
    pub strategies: Strategies,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Master seed; per-trial seeds are derived with [`seed_split`].
    #[serde(default)]
    pub seed: u64,
    /// Committed bit for every trial; alternates with the trial index when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bit: Option<u8>,
    #[serde(default)]
    pub outputs: Vec<PathBuf>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == Mode::MonteCarlo && self.trials == 0 {
            return Err(Error::Spec("MonteCarlo mode needs trials >= 1".into()));
        }
        if self.bit.is_some_and(|b| b > 1) {
            return Err(Error::Spec("bit must be 0 or 1".into()));
        }
        for c in self.grid()? {
            c.validate()?;
        }
        Ok(())
    }

    /// Every configuration of the grid, outer axes varying slowest.
    pub fn grid(&self) -> Result<Vec<ProtocolConfig>> {
        let (base, axes) = match &self.config {
            ConfigSource::Single(c) => return Ok(vec![c.clone()]),
            ConfigSource::Grid(g) => (&g.base, &g.axes),
        };
        fn sweep<T: Clone>(
            points: Vec<ProtocolConfig>,
            axis: &Option<Vec<T>>,
            name: &str,
            set: impl Fn(&mut ProtocolConfig, T),
        ) -> Result<Vec<ProtocolConfig>> {
            let Some(values) = axis else { return Ok(points) };
            if values.is_empty() {
                return Err(Error::Spec(format!("grid axis {name} is empty")));
            }
            let mut out = Vec::with_capacity(points.len() * values.len());
            for p in points {
                for v in values {
                    let mut q = p.clone();
                    set(&mut q, v.clone());
                    out.push(q);
                }
            }
            Ok(out)
        }
        let mut points = vec![base.clone()];
        points = sweep(points, &axes.n, "n", |c, v| c.n = v)?;
        points = sweep(points, &axes.n0, "n0", |c, v| c.n0 = v)?;
        points = sweep(points, &axes.m, "m", |c, v| c.m = v)?;
        points = sweep(points, &axes.epsilon1, "epsilon1", |c, v| c.epsilon1 = v)?;
        points = sweep(points, &axes.theta, "theta", |c, v| c.theta = v)?;
        points = sweep(points, &axes.m_check, "mCheck", |c, v| c.m_check = v)?;
        points = sweep(points, &axes.nc, "Nc", |c, v| c.nc = v)?;
        Ok(points)
    }
}

/// Design parameters of a row, with reals at 17 significant digits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    pub protocol: Protocol,
    pub n: usize,
    pub n0: usize,
    pub m: usize,
    pub epsilon1: Real17,
    pub theta: Real17,
    #[serde(rename = "mCheck")]
    pub m_check: usize,
    #[serde(rename = "Nc")]
    pub nc: u32,
}

impl From<&ProtocolConfig> for Parameters {
    fn from(c: &ProtocolConfig) -> Self {
        Self {
            protocol: c.protocol,
            n: c.n,
            n0: c.n0,
            m: c.m,
            epsilon1: Real17(c.epsilon1),
            theta: Real17(c.theta),
            m_check: c.m_check,
            nc: c.nc,
        }
    }
}

/// Outcome frequencies over the sampled runs of one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct Simulation {
    pub trials: u64,
    pub accept_rate: Real17,
    pub accept_stderr: Real17,
    pub reject_rate: Real17,
    pub abort_rate: Real17,
    pub mean_detections: Real17,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_accept_rate: Option<Real17>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_score: Option<Real17>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRow {
    pub index: usize,
    pub parameters: Parameters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<SecurityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<Simulation>,
    /// Why the row carries no values, e.g. `"cap"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct SweepResult {
    pub schema_version: u32,
    pub name: String,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn skipped_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.skipped.is_some()).count()
    }
}

/// Does this Adam try to open the bit he did not commit?
fn adam_switches(adam: &Play, bit: u8) -> bool {
    AdamStrategy { bit, play: adam.clone() }.open_bit() != bit
}

fn trial_bit(spec: &ExperimentSpec, t: u64) -> u8 {
    spec.bit.unwrap_or((t & 1) as u8)
}

fn simulate(spec: &ExperimentSpec, config: &ProtocolConfig, point_seed: u64) -> Result<Simulation> {
    let outcomes = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let bit = trial_bit(spec, t);
            let trial = config.clone().with_seeds(seed_split(point_seed, 2 * t), seed_split(point_seed, 2 * t + 1));
            let adam = AdamStrategy { bit, play: spec.strategies.adam.clone() };
            let babe = BabeStrategy { play: spec.strategies.babe.clone() };
            run_protocol(&trial, &adam, &babe).map(|o| (o.status, o.detection_count))
        })
        .collect::<Result<Vec<_>>>()?;
    let count = |s: Status| outcomes.iter().filter(|(st, _)| *st == s).count() as u64;
    let trials = spec.trials;
    let accepted = count(Status::VerifiedAccept);
    let estimate = Estimate::proportion(accepted, trials);
    let detections: u64 = outcomes.iter().map(|(_, d)| *d as u64).sum();

    // the oracle may depend on the bit, so average it over the bits used
    let oracle = match spec.bit {
        Some(b) => accept_oracle(config, &spec.strategies.adam, &spec.strategies.babe, b)?,
        None => {
            let o0 = accept_oracle(config, &spec.strategies.adam, &spec.strategies.babe, 0)?;
            let o1 = accept_oracle(config, &spec.strategies.adam, &spec.strategies.babe, 1)?;
            match (o0, o1) {
                (Some(a), Some(b)) => {
                    let ones = (trials / 2) as f64;
                    Some((a * (trials as f64 - ones) + b * ones) / trials as f64)
                }
                _ => None,
            }
        }
    };
    let z = oracle.map(|p| estimate.z_score(p));
    if let (Some(p), Some(z)) = (oracle, z) {
        if !(z.abs() <= Z_FAIL) {
            return Err(Error::Oracle(format!(
                "acceptance rate {} over {trials} trials is {z:.2} standard errors from the exact {p}",
                estimate.mean
            )));
        }
    }
    Ok(Simulation {
        trials,
        accept_rate: Real17(estimate.mean),
        accept_stderr: Real17(estimate.stderr),
        reject_rate: Real17(count(Status::VerifiedReject) as f64 / trials as f64),
        abort_rate: Real17(count(Status::Aborted) as f64 / trials as f64),
        mean_detections: Real17(detections as f64 / trials as f64),
        oracle_accept_rate: oracle.map(Real17),
        z_score: z.map(Real17),
    })
}

fn run_point(spec: &ExperimentSpec, index: usize, config: &ProtocolConfig) -> Result<SweepRow> {
    let parameters = Parameters::from(config);
    let skipped = |why: &str| SweepRow {
        index,
        parameters: parameters.clone(),
        report: None,
        simulation: None,
        skipped: Some(why.to_string()),
    };
    let exact = match commitment_exact(config) {
        Ok(e) => e,
        Err(Error::CapExceeded { .. }) => return Ok(skipped("cap")),
        Err(e) => return Err(e),
    };
    let simulation = match spec.mode {
        Mode::Exact => None,
        Mode::MonteCarlo => match simulate(spec, config, seed_split(spec.seed, index as u64)) {
            Ok(s) => Some(s),
            Err(Error::CapExceeded { .. }) => return Ok(skipped("cap")),
            Err(e) => return Err(e),
        },
    };
    let switching = match spec.bit {
        Some(b) => adam_switches(&spec.strategies.adam, b),
        None => adam_switches(&spec.strategies.adam, 0) && adam_switches(&spec.strategies.adam, 1),
    };
    let (p_ac, method) = match (&simulation, switching) {
        (Some(s), true) => {
            (AdamSuccess::Value(s.accept_rate), Method::MonteCarlo { trials: s.trials, stderr: s.accept_stderr })
        }
        (None, true) => {
            let bit = spec.bit.unwrap_or(0);
            match accept_oracle(config, &spec.strategies.adam, &spec.strategies.babe, bit)? {
                Some(p) => (AdamSuccess::Value(Real17(p)), Method::Exact),
                None => (exact.bracket(), Method::Exact),
            }
        }
        (Some(s), false) => (exact.bracket(), Method::MonteCarlo { trials: s.trials, stderr: s.accept_stderr }),
        (None, false) => (exact.bracket(), Method::Exact),
    };
    let report = SecurityReport {
        p_bc: Real17(exact.p_bc),
        p_ac,
        fidelity_f: Real17(exact.fidelity),
        fidelity_fprime: exact.fidelity_prime.map(Real17),
        epsilon_budget: exact.budget.map(Real17),
        method,
    };
    report.validate()?;
    Ok(SweepRow { index, parameters, report: Some(report), simulation, skipped: None })
}

/// Runs every grid point. Points run in parallel; rows come back in grid
/// order, and every random draw is keyed by the master seed and indices, so
/// the result does not depend on scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let grid = spec.grid()?;
    let rows = grid.par_iter().enumerate().map(|(i, c)| run_point(spec, i, c)).collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { schema_version: SCHEMA_VERSION, name: spec.name.clone(), rows })
}
