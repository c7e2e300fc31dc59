//! Monte-Carlo driver: runs every (filter, eta) pair on shared scenarios and
//! measurement noise, scores each step with GOSPA and writes
//! `curves.csv` / `summary.csv`.
//!
//! `curves.csv`: `filter,eta,k,gospa_total,gospa_loc,gospa_missed,gospa_false,card_true,card_est_mean`,
//! one row per step, each value averaged over replicates.
//!
//! `summary.csv`: `filter,eta,mean_detections,mean_runtime_s,mean_total_gospa`,
//! one row per pair. Runtime is filter time per replicate only.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::filter::{AssociationParams, FilterKind, FilterParams, FilterSetup, PointParams, Tracker};
use crate::gospa::{gospa, GospaParams, GospaResult};
use crate::measurement::{threshold_frame, AmplitudeModel};
use crate::model::ThresholdedFrame;
use crate::rng::{stream_id, stream_rng, Purpose};
use crate::scenario::{cell_frame_at, generate, ScenarioConfig};

/// Tolerance of the per-step invariant checks.
pub const INVARIANT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub scenario: ScenarioConfig,
    pub amplitude: AmplitudeModel,
    pub filters: Vec<FilterKind>,
    pub etas: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
    pub threads: usize,
    /// Last step to run; `None` runs the whole scenario.
    pub stop_after: Option<u32>,
    pub params: FilterParams,
    pub point: PointParams,
    pub association: AssociationParams,
    pub gospa: GospaParams,
}

impl Experiment {
    pub fn from_config(config: &Config) -> Result<Self> {
        config.validate()?;
        let h = &config.harness;
        let exp = Self {
            scenario: config.scenario.clone(),
            amplitude: config.amplitude()?,
            filters: h.filters.clone(),
            etas: h.etas.clone(),
            runs: h.runs,
            seed: h.seed,
            threads: h.threads,
            stop_after: (h.stop_after > 0).then_some(h.stop_after),
            params: config.filter.clone(),
            point: config.point_filters.clone(),
            association: config.association.clone(),
            gospa: config.gospa,
        };
        exp.validate()?;
        Ok(exp)
    }

    pub fn last_step(&self) -> u32 {
        self.stop_after.map_or(self.scenario.n_steps, |s| s.min(self.scenario.n_steps))
    }

    fn setup(&self, kind: FilterKind, eta: f64) -> Result<FilterSetup> {
        let setup = FilterSetup {
            kind,
            geometry: self.scenario.geometry()?,
            amplitude: self.amplitude,
            eta,
            dt: self.scenario.dt,
            params: self.params.clone(),
            point: self.point.clone(),
            association: self.association.clone(),
        };
        Ok(setup)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.gospa.validate()?;
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.filters.is_empty() || self.etas.is_empty() {
            return Err(Error::Config("at least one filter and one eta are required".into()));
        }
        for &kind in &self.filters {
            for &eta in &self.etas {
                self.setup(kind, eta)?.validate()?;
            }
        }
        Ok(())
    }
}

/// Everything recorded for one replicate of one (filter, eta) pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplicateTrace {
    pub gospa: Vec<GospaResult>,
    pub card_true: Vec<usize>,
    pub card_est: Vec<usize>,
    pub detections: Vec<usize>,
    pub runtime_s: f64,
    pub max_recycle_error: f64,
    pub max_pmf_error: f64,
    pub min_existence: f64,
    pub max_existence: f64,
}

impl ReplicateTrace {
    /// Mean of `f` over steps `from..=to` (1-based).
    pub fn mean_over(&self, from: u32, to: u32, f: impl Fn(&GospaResult) -> f64) -> f64 {
        let s = &self.gospa[(from - 1) as usize..to as usize];
        s.iter().map(f).sum::<f64>() / s.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub filter: FilterKind,
    pub eta: f64,
    /// Ordered by replicate index.
    pub replicates: Vec<ReplicateTrace>,
}

impl CellReport {
    pub fn mean_detections(&self) -> f64 {
        mean(self.replicates.iter().flat_map(|r| r.detections.iter().map(|&d| d as f64)))
    }

    pub fn mean_runtime_s(&self) -> f64 {
        mean(self.replicates.iter().map(|r| r.runtime_s))
    }

    pub fn mean_total_gospa(&self) -> f64 {
        mean(self.replicates.iter().flat_map(|r| r.gospa.iter().map(|g| g.total)))
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub steps: u32,
    pub cells: Vec<CellReport>,
}

#[derive(Serialize)]
struct CurveRow {
    filter: &'static str,
    eta: f64,
    k: u32,
    gospa_total: f64,
    gospa_loc: f64,
    gospa_missed: f64,
    gospa_false: f64,
    card_true: f64,
    card_est_mean: f64,
}

#[derive(Serialize)]
struct SummaryRow {
    filter: &'static str,
    eta: f64,
    mean_detections: f64,
    mean_runtime_s: f64,
    mean_total_gospa: f64,
}

impl ExperimentReport {
    pub fn cell(&self, filter: FilterKind, eta: f64) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.filter == filter && c.eta == eta)
    }

    pub fn curves_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.cells {
            let n = c.replicates.len() as f64;
            for i in 0..self.steps as usize {
                let sum = |f: &dyn Fn(&ReplicateTrace) -> f64| c.replicates.iter().map(f).sum::<f64>() / n;
                w.serialize(CurveRow {
                    filter: c.filter.name(),
                    eta: c.eta,
                    k: i as u32 + 1,
                    gospa_total: sum(&|r| r.gospa[i].total),
                    gospa_loc: sum(&|r| r.gospa[i].localization),
                    gospa_missed: sum(&|r| r.gospa[i].missed),
                    gospa_false: sum(&|r| r.gospa[i].false_),
                    card_true: sum(&|r| r.card_true[i] as f64),
                    card_est_mean: sum(&|r| r.card_est[i] as f64),
                })?;
            }
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn summary_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.cells {
            w.serialize(SummaryRow {
                filter: c.filter.name(),
                eta: c.eta,
                mean_detections: c.mean_detections(),
                mean_runtime_s: c.mean_runtime_s(),
                mean_total_gospa: c.mean_total_gospa(),
            })?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("curves.csv"), self.curves_csv()?)?;
        std::fs::write(dir.join("summary.csv"), self.summary_csv()?)?;
        Ok(())
    }
}

fn check_invariants(tracker: &Tracker, kind: FilterKind, eta: f64, k: u32) -> Result<()> {
    let at = |what: String| Error::InvariantViolation(format!("{kind} eta={eta} step {k}: {what}"));
    let d = tracker.last_diagnostics();
    let tol = INVARIANT_TOL * d.cardinality_before_recycle.max(1.0);
    if !(d.recycle_error() <= tol) {
        return Err(at(format!("recycling changed the expected cardinality by {}", d.recycle_error())));
    }
    if !(d.max_pmf_error <= INVARIANT_TOL) {
        return Err(at(format!("association pmf off by {}", d.max_pmf_error)));
    }
    tracker.belief().validate().map_err(|e| at(e.to_string()))
}

/// One replicate of every (filter, eta) pair, in `filters x etas` order.
fn run_replicate(exp: &Experiment, rep: u64) -> Result<Vec<ReplicateTrace>> {
    let truth = generate(&exp.scenario, exp.seed, rep)?;
    let last = exp.last_step();
    let raw: Vec<_> = (1..=last)
        .map(|k| cell_frame_at(&truth, k, &exp.amplitude, exp.seed, rep))
        .collect();
    let positions: Vec<Vec<[f64; 2]>> = (1..=last).map(|k| truth.positions(k)).collect();
    let frames: Vec<Vec<ThresholdedFrame>> = exp
        .etas
        .iter()
        .map(|&eta| raw.iter().map(|f| threshold_frame(f, eta)).collect::<Result<_>>())
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(exp.filters.len() * exp.etas.len());
    for &kind in &exp.filters {
        for (ei, &eta) in exp.etas.iter().enumerate() {
            let stream = stream_id(&[kind as u64, eta.to_bits()]);
            let mut tracker = Tracker::new(exp.setup(kind, eta)?, stream_rng(exp.seed, rep, Purpose::Filter, stream))?;
            let mut trace = ReplicateTrace {
                min_existence: 1.0,
                ..Default::default()
            };
            for (i, frame) in frames[ei].iter().enumerate() {
                let k = i as u32 + 1;
                let start = Instant::now();
                let step = tracker.step(frame)?;
                trace.runtime_s += start.elapsed().as_secs_f64();

                check_invariants(&tracker, kind, eta, k)?;
                let d = step.diagnostics;
                trace.max_recycle_error = trace.max_recycle_error.max(d.recycle_error());
                trace.max_pmf_error = trace.max_pmf_error.max(d.max_pmf_error);
                for b in &tracker.belief().bernoullis {
                    trace.min_existence = trace.min_existence.min(b.r);
                    trace.max_existence = trace.max_existence.max(b.r);
                }
                let est: Vec<[f64; 2]> = step.estimates.iter().map(|e| e.state.position()).collect();
                trace.gospa.push(gospa(&positions[i], &est, &exp.gospa)?);
                trace.card_true.push(positions[i].len());
                trace.card_est.push(est.len());
                trace.detections.push(frame.num_detections());
            }
            out.push(trace);
        }
    }
    Ok(out)
}

pub fn run(exp: &Experiment) -> Result<ExperimentReport> {
    exp.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if exp.threads > 0 {
        builder = builder.num_threads(exp.threads);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} worker threads: {e}", exp.threads)))?;
    let per_rep: Vec<Vec<ReplicateTrace>> = pool.install(|| {
        (0..exp.runs as u64)
            .into_par_iter()
            .map(|rep| run_replicate(exp, rep))
            .collect::<Result<_>>()
    })?;

    let mut cells = Vec::new();
    let mut idx = 0;
    for &filter in &exp.filters {
        for &eta in &exp.etas {
            let replicates = per_rep.iter().map(|r| r[idx].clone()).collect();
            cells.push(CellReport { filter, eta, replicates });
            idx += 1;
        }
    }
    Ok(ExperimentReport {
        steps: exp.last_step(),
        cells,
    })
}
