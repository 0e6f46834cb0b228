//! Multi-session statistics: parameter sweeps, emission tomography and the
//! threshold rule.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{AdversaryModel, ChannelTarget};
use crate::lab::Lab;
use crate::protocol::{
    alice_prepare, bob_prepare, random_message, run_session, ProtocolConfig, ProtocolError,
    SessionReport,
};
use crate::qstate::{BlochAccumulator, BlochVector, QStateError};
use crate::rng::{derive_seed, roles, stream};

/// Version tag for emitted JSON documents.
pub const SWEEP_SCHEMA: &str = "mdi-qsdc/sweep/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Abort,
}

/// Aborts iff `rate > threshold`; a tie passes.
pub fn threshold_verdict(rate: f64, threshold: f64) -> Verdict {
    if rate > threshold {
        Verdict::Abort
    } else {
        Verdict::Pass
    }
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("sessions per point must be at least 1")]
    NoSessions,
    #[error("tomography needs at least one sample")]
    NoSamples,
    #[error("grid value {0} is invalid for {1}")]
    BadValue(f64, &'static str),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    State(#[from] QStateError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// The knob a sweep turns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Depolarizing probability on every channel, composed after the base
    /// adversary.
    DepolarizingP,
    /// Number of security-check singles.
    T1,
    SecurityThreshold,
}

impl SweepParameter {
    fn name(self) -> &'static str {
        match self {
            SweepParameter::DepolarizingP => "depolarizing_p",
            SweepParameter::T1 => "t1",
            SweepParameter::SecurityThreshold => "security_threshold",
        }
    }

    fn apply(self, base: &ProtocolConfig, value: f64) -> Result<ProtocolConfig, AnalysisError> {
        let mut cfg = base.clone();
        match self {
            SweepParameter::DepolarizingP => {
                let noise = AdversaryModel::DepolarizingNoise {
                    p: value,
                    target: ChannelTarget::All,
                };
                cfg.adversary = match &base.adversary {
                    AdversaryModel::Honest => noise,
                    other => AdversaryModel::Composite(vec![other.clone(), noise]),
                };
            }
            SweepParameter::T1 => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(AnalysisError::BadValue(value, self.name()));
                }
                cfg.t1 = value as usize;
            }
            SweepParameter::SecurityThreshold => cfg.security_threshold = value,
        }
        cfg.validate().map_err(ProtocolError::from)?;
        Ok(cfg)
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "depolarizing_p" | "p" => Ok(SweepParameter::DepolarizingP),
            "t1" => Ok(SweepParameter::T1),
            "security_threshold" => Ok(SweepParameter::SecurityThreshold),
            other => Err(format!(
                "unknown sweep parameter `{other}` (expected depolarizing_p, t1 or security_threshold)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub grid: Vec<f64>,
    pub sessions: usize,
    pub base: ProtocolConfig,
    /// Session `s` at point `i` uses `derive_seed(base_seed, i, s)`.
    pub base_seed: u64,
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub std_dev: f64,
    pub count: usize,
}

impl Moments {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        let n = v.len();
        if n == 0 {
            return Self::default();
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_dev: var.sqrt(),
            count: n,
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.std_dev / (self.count as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub security_error_rate: Moments,
    /// Over sessions that reached the integrity check.
    pub integrity_error_rate: Moments,
    pub abort_frequency: f64,
    pub leaked_bits: Moments,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub schema: String,
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

/// CSV column order for [`SweepResult::write_csv`].
pub const SWEEP_CSV_COLUMNS: [&str; 12] = [
    "parameter",
    "value",
    "sessions",
    "security_rate_mean",
    "security_rate_std",
    "integrity_rate_mean",
    "integrity_rate_std",
    "integrity_sessions",
    "abort_frequency",
    "leaked_bits_mean",
    "leaked_bits_std",
    "security_rate_stderr",
];

impl SweepResult {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), AnalysisError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(SWEEP_CSV_COLUMNS)?;
        for row in &self.rows {
            out.write_record([
                self.spec.parameter.name().to_string(),
                row.value.to_string(),
                self.spec.sessions.to_string(),
                row.security_error_rate.mean.to_string(),
                row.security_error_rate.std_dev.to_string(),
                row.integrity_error_rate.mean.to_string(),
                row.integrity_error_rate.std_dev.to_string(),
                row.integrity_error_rate.count.to_string(),
                row.abort_frequency.to_string(),
                row.leaked_bits.mean.to_string(),
                row.leaked_bits.std_dev.to_string(),
                row.security_error_rate.std_error().to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, AnalysisError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn summarize(value: f64, reports: &[SessionReport]) -> SweepRow {
    let n = reports.len() as f64;
    SweepRow {
        value,
        security_error_rate: Moments::of(reports.iter().map(|r| r.security_error_rate)),
        integrity_error_rate: Moments::of(reports.iter().filter_map(|r| r.integrity_error_rate)),
        abort_frequency: reports.iter().filter(|r| r.aborted()).count() as f64 / n,
        leaked_bits: Moments::of(reports.iter().map(|r| r.leaked_bits as f64)),
    }
}

/// Runs `spec.sessions` sessions per grid point. Sessions run in parallel;
/// results are gathered in session order, so output is bit-identical for a
/// given spec.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, AnalysisError> {
    if spec.grid.is_empty() {
        return Err(AnalysisError::EmptyGrid);
    }
    if spec.sessions == 0 {
        return Err(AnalysisError::NoSessions);
    }
    let mut rows = Vec::with_capacity(spec.grid.len());
    for (point, &value) in spec.grid.iter().enumerate() {
        let cfg = spec.parameter.apply(&spec.base, value)?;
        let reports = (0..spec.sessions)
            .into_par_iter()
            .map(|s| {
                let mut cfg = cfg.clone();
                cfg.seed = derive_seed(spec.base_seed, point as u64, s as u64);
                let message = random_message(cfg.seed, cfg.n_message);
                run_session(&cfg, Some(&message)).map(|(report, _)| report)
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(summarize(value, &reports));
    }
    Ok(SweepResult {
        schema: SWEEP_SCHEMA.to_string(),
        spec: spec.clone(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyReport {
    pub samples: usize,
    pub p_a: BlochVector,
    pub p_a_norm: f64,
    pub p_b: BlochVector,
    pub p_b_norm: f64,
}

/// Mean Bloch vector of emitted `P_A` and `P_B` qubits.
///
/// Prepares fresh blocks with `cfg` (seeded per block from `cfg.seed`) until
/// `samples` qubits of each sequence have been collected. EPR halves enter
/// through their reduced state.
pub fn tomography_report(
    cfg: &ProtocolConfig,
    samples: usize,
) -> Result<TomographyReport, AnalysisError> {
    if samples == 0 {
        return Err(AnalysisError::NoSamples);
    }
    let mut pa = BlochAccumulator::new();
    let mut pb = BlochAccumulator::new();
    let mut block = 0u64;
    while pa.count() < samples {
        let seed = derive_seed(cfg.seed, u64::MAX, block);
        let mut lab = Lab::new();
        let (p_a, _) = alice_prepare(cfg, &mut lab, &mut stream(seed, roles::ALICE));
        let (p_b, _) = bob_prepare(cfg.block_len(), &mut lab, &mut stream(seed, roles::BOB));
        for (qa, qb) in p_a.into_iter().zip(p_b) {
            if pa.count() == samples {
                break;
            }
            pa.add(lab.reduced_bloch(qa)?);
            pb.add(lab.reduced_bloch(qb)?);
        }
        block += 1;
    }
    let p_a = pa.mean()?;
    let p_b = pb.mean()?;
    Ok(TomographyReport {
        samples,
        p_a_norm: p_a.norm(),
        p_b_norm: p_b.norm(),
        p_a,
        p_b,
    })
}

/// Tomography of an explicit sample stream of single-qubit states.
pub fn tomography_of<'a>(
    states: impl IntoIterator<Item = &'a crate::qstate::StateVector>,
) -> Result<BlochVector, AnalysisError> {
    Ok(crate::qstate::bloch_accumulate(states)?)
}
