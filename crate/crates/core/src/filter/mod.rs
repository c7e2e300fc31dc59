//! Particle Poisson multi-Bernoulli filters.
//!
//! [`Tracker`] runs one of three update rules on a shared prediction,
//! recycling and estimate-extraction pipeline:
//!
//! * `PmbCm` updates directly on thresholded cell measurements.
//! * `PmbAm` converts detections to points and keeps the amplitude likelihood.
//! * `Pmb` converts detections to points and ignores amplitudes.

pub mod cell;
pub mod point;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::association::{bp_marginals, exact_marginals, AssociationProblem, BpConfig, MarginalTable};
use crate::error::{Error, Result};
use crate::measurement::AmplitudeModel;
use crate::model::{GridGeometry, ObjectState, Particle, ParticleSet, PmbBelief, ThresholdedFrame, TrackLabel};

/// Weights below this are flushed to zero.
pub const WEIGHT_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterKind {
    PmbCm,
    PmbAm,
    Pmb,
}

impl FilterKind {
    pub const ALL: [FilterKind; 3] = [FilterKind::PmbCm, FilterKind::PmbAm, FilterKind::Pmb];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::PmbCm => "pmb-cm",
            FilterKind::PmbAm => "pmb-am",
            FilterKind::Pmb => "pmb",
        }
    }

    pub fn is_point(self) -> bool {
        !matches!(self, FilterKind::PmbCm)
    }
}

impl std::fmt::Display for FilterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FilterKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown filter '{s}' (expected pmb-cm, pmb-am or pmb)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterParams {
    pub p_s: f64,
    /// Total birth PHD mass added per step, spread uniformly over the grid.
    pub birth_mass: f64,
    pub birth_velocity_var: f64,
    pub birth_gamma_max: f64,
    pub recycle_threshold: f64,
    pub existence_threshold: f64,
    pub particles_per_bernoulli: usize,
    pub phd_particle_budget: usize,
    pub birth_particles: usize,
    pub process_noise_var: f64,
    /// Variance of the log-normal multiplicative intensity jitter; 0 keeps gamma fixed.
    pub gamma_jitter_var: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            p_s: 0.999,
            birth_mass: 5.0 / 1024.0,
            birth_velocity_var: 1e-2,
            birth_gamma_max: 30.0,
            recycle_threshold: 0.1,
            existence_threshold: 0.5,
            particles_per_bernoulli: 500,
            phd_particle_budget: 5_000,
            birth_particles: 5_000,
            process_noise_var: 1e-3,
            gamma_jitter_var: 0.0,
        }
    }
}

impl FilterParams {
    /// Particle counts of the reference experiment: 3000 per Bernoulli and
    /// 50000 each for the posterior and birth PHD. The defaults use a tenth
    /// of that.
    pub fn full_scale() -> Self {
        Self {
            particles_per_bernoulli: 3000,
            phd_particle_budget: 50_000,
            birth_particles: 50_000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.p_s > 0.0 && self.p_s <= 1.0) {
            return bad(format!("p_s must be in (0, 1], got {}", self.p_s));
        }
        if !(0.0..1.0).contains(&self.recycle_threshold) {
            return bad(format!("recycle_threshold must be in [0, 1), got {}", self.recycle_threshold));
        }
        if !(0.0..1.0).contains(&self.existence_threshold) {
            return bad(format!("existence_threshold must be in [0, 1), got {}", self.existence_threshold));
        }
        if self.particles_per_bernoulli == 0 || self.phd_particle_budget == 0 || self.birth_particles == 0 {
            return bad("particle counts must be positive".into());
        }
        for (name, v) in [
            ("birth_mass", self.birth_mass),
            ("birth_velocity_var", self.birth_velocity_var),
            ("birth_gamma_max", self.birth_gamma_max),
            ("process_noise_var", self.process_noise_var),
            ("gamma_jitter_var", self.gamma_jitter_var),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositionLikelihood {
    /// Gaussian around the cell center with the configured variance.
    Gaussian,
    /// Uniform over the detected cell.
    UniformCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointParams {
    pub sigma_p_sq: f64,
    pub position_likelihood: PositionLikelihood,
}

impl Default for PointParams {
    fn default() -> Self {
        Self {
            sigma_p_sq: 1.0 / 12.0,
            position_likelihood: PositionLikelihood::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssociationMethod {
    Bp,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssociationParams {
    pub method: AssociationMethod,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for AssociationParams {
    fn default() -> Self {
        let bp = BpConfig::default();
        Self {
            method: AssociationMethod::Bp,
            tol: bp.tol,
            max_iter: bp.max_iter,
            damping: bp.damping,
        }
    }
}

impl AssociationParams {
    pub fn bp_config(&self) -> BpConfig {
        BpConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
        }
    }

    pub fn solve(&self, problem: &AssociationProblem) -> Result<MarginalTable> {
        match self.method {
            AssociationMethod::Bp => bp_marginals(problem, &self.bp_config()),
            AssociationMethod::Exact => exact_marginals(problem),
        }
    }
}

/// Nearly-constant-velocity motion with additive state noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionModel {
    pub dt: f64,
    pub noise_var: f64,
    pub gamma_jitter_var: f64,
}

impl MotionModel {
    #[inline]
    pub fn propagate<R: Rng + ?Sized>(&self, x: &ObjectState, rng: &mut R) -> ObjectState {
        let mut y = *x;
        y.p1 += x.v1 * self.dt;
        y.p2 += x.v2 * self.dt;
        if self.noise_var > 0.0 {
            let s = self.noise_var.sqrt();
            let n: [f64; 4] = [
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
            ];
            y.p1 += s * n[0];
            y.p2 += s * n[1];
            y.v1 += s * n[2];
            y.v2 += s * n[3];
        }
        if self.gamma_jitter_var > 0.0 {
            let n: f64 = StandardNormal.sample(rng);
            y.gamma *= (self.gamma_jitter_var.sqrt() * n).exp();
        }
        y
    }
}

/// Everything that defines one filter instance apart from its belief.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSetup {
    pub kind: FilterKind,
    pub geometry: GridGeometry,
    pub amplitude: AmplitudeModel,
    pub eta: f64,
    pub dt: f64,
    pub params: FilterParams,
    pub point: PointParams,
    pub association: AssociationParams,
}

impl FilterSetup {
    pub fn motion(&self) -> MotionModel {
        MotionModel {
            dt: self.dt,
            noise_var: self.params.process_noise_var,
            gamma_jitter_var: self.params.gamma_jitter_var,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::InvalidParameter(format!("eta must be finite and nonnegative, got {}", self.eta)));
        }
        if self.kind.is_point() && self.eta == 0.0 {
            return Err(Error::Config(format!(
                "{} needs eta > 0: every cell is detected at eta = 0, so point measurements carry no clutter model",
                self.kind
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.point.sigma_p_sq.is_finite() && self.point.sigma_p_sq > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma_p_sq must be positive, got {}",
                self.point.sigma_p_sq
            )));
        }
        if !(self.association.tol > 0.0) || !(0.0..1.0).contains(&self.association.damping) {
            return Err(Error::InvalidParameter(
                "association tol must be positive and damping in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Prediction: survival thinning, motion, and birth into the PHD. Objects
/// do not survive leaving the grid, so particles propagated outside it are
/// dropped and a Bernoulli's existence shrinks by the mass it lost.
pub fn predict<R: Rng + ?Sized>(
    belief: &PmbBelief,
    params: &FilterParams,
    motion: &MotionModel,
    geometry: &GridGeometry,
    rng: &mut R,
) -> PmbBelief {
    let mut out = PmbBelief {
        phd: ParticleSet::with_capacity(belief.phd.len() + params.birth_particles),
        bernoullis: Vec::with_capacity(belief.bernoullis.len()),
    };
    for b in &belief.bernoullis {
        let before = b.pdf.total_weight();
        let mut pdf: ParticleSet = b
            .pdf
            .iter()
            .map(|p| Particle {
                state: motion.propagate(&p.state, rng),
                weight: p.weight,
            })
            .filter(|p| geometry.contains(p.state.p1, p.state.p2))
            .collect();
        let inside = pdf.normalize();
        if !(before > 0.0 && inside > 0.0) {
            continue;
        }
        out.bernoullis.push(crate::model::BernoulliComponent {
            r: params.p_s * b.r * (inside / before).min(1.0),
            pdf,
            label: b.label,
        });
    }
    for p in belief.phd.iter() {
        let state = motion.propagate(&p.state, rng);
        if geometry.contains(state.p1, state.p2) {
            out.phd.push(Particle {
                state,
                weight: params.p_s * p.weight,
            });
        }
    }
    append_birth(&mut out.phd, params, geometry, rng);
    out
}

/// Appends birth particles carrying total mass `birth_mass`.
pub fn append_birth<R: Rng + ?Sized>(phd: &mut ParticleSet, params: &FilterParams, geometry: &GridGeometry, rng: &mut R) {
    let mass = params.birth_mass;
    if mass <= 0.0 {
        return;
    }
    let w = mass / params.birth_particles as f64;
    let (o1, o2) = geometry.origin();
    let sv = params.birth_velocity_var.sqrt();
    for _ in 0..params.birth_particles {
        let p1 = o1 + rng.random::<f64>() * geometry.width();
        let p2 = o2 + rng.random::<f64>() * geometry.height();
        let n1: f64 = StandardNormal.sample(rng);
        let n2: f64 = StandardNormal.sample(rng);
        let (v1, v2) = (sv * n1, sv * n2);
        let gamma = rng.random::<f64>() * params.birth_gamma_max;
        phd.push(Particle {
            state: ObjectState::new(p1, p2, v1, v2, gamma),
            weight: w,
        });
    }
}

/// Moves every Bernoulli with `r < threshold` into the PHD with mass `r`.
pub fn recycle(belief: &mut PmbBelief, threshold: f64) {
    let mut kept = Vec::with_capacity(belief.bernoullis.len());
    for b in std::mem::take(&mut belief.bernoullis) {
        if b.r < threshold {
            let total = b.pdf.total_weight();
            if b.r > 0.0 && total > 0.0 {
                let s = b.r / total;
                for p in b.pdf.iter() {
                    belief.phd.push(Particle {
                        state: p.state,
                        weight: p.weight * s,
                    });
                }
            }
        } else {
            kept.push(b);
        }
    }
    belief.bernoullis = kept;
}

/// Drops massless PHD particles and resamples down to `budget` if needed.
pub fn reduce_phd<R: Rng + ?Sized>(phd: &ParticleSet, budget: usize, rng: &mut R) -> ParticleSet {
    let mut set: ParticleSet = phd.iter().filter(|p| p.weight > 0.0).copied().collect();
    if set.len() > budget {
        set = set.systematic_resample(budget, rng);
    }
    set
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub label: TrackLabel,
    pub r: f64,
    pub state: ObjectState,
}

/// One estimate (the particle mean) per Bernoulli with `r > threshold`.
pub fn extract_estimates(belief: &PmbBelief, threshold: f64) -> Vec<Estimate> {
    belief
        .bernoullis
        .iter()
        .filter(|b| b.r > threshold)
        .filter_map(|b| {
            b.pdf.mean_state().map(|state| Estimate {
                label: b.label,
                r: b.r,
                state,
            })
        })
        .collect()
}

/// Bookkeeping from one update, used for invariant checks.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateDiagnostics {
    /// Expected cardinality right before recycling.
    pub cardinality_before_recycle: f64,
    /// Expected cardinality right after recycling.
    pub cardinality_after_recycle: f64,
    /// Largest deviation from 1 of any association pmf.
    pub max_pmf_error: f64,
}

impl UpdateDiagnostics {
    pub fn recycle_error(&self) -> f64 {
        (self.cardinality_after_recycle - self.cardinality_before_recycle).abs()
    }
}

/// Options shared by the two update rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateOptions {
    pub particles_per_bernoulli: usize,
    /// New components below this existence go straight to the PHD.
    pub recycle_below: f64,
    pub step: u32,
}

pub(crate) fn pmf_error(marginals: &MarginalTable) -> f64 {
    marginals
        .legacy
        .iter()
        .map(|l| (l.total() - 1.0).abs())
        .fold(0.0, f64::max)
}

#[inline]
pub(crate) fn floor_weight(w: f64) -> f64 {
    if w < WEIGHT_FLOOR {
        0.0
    } else {
        w
    }
}

/// A running filter: owns its belief and random stream.
#[derive(Debug, Clone)]
pub struct Tracker {
    setup: FilterSetup,
    belief: PmbBelief,
    rng: ChaCha8Rng,
    step: u32,
    last: UpdateDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub estimates: Vec<Estimate>,
    pub diagnostics: UpdateDiagnostics,
}

impl Tracker {
    pub fn new(setup: FilterSetup, rng: ChaCha8Rng) -> Result<Self> {
        setup.validate()?;
        Ok(Self {
            setup,
            belief: PmbBelief::default(),
            rng,
            step: 0,
            last: UpdateDiagnostics::default(),
        })
    }

    pub fn setup(&self) -> &FilterSetup {
        &self.setup
    }

    pub fn belief(&self) -> &PmbBelief {
        &self.belief
    }

    pub fn step_index(&self) -> u32 {
        self.step
    }

    pub fn last_diagnostics(&self) -> UpdateDiagnostics {
        self.last
    }

    /// Predicts to the next scan, updates with `frame`, recycles, and reduces
    /// the PHD.
    pub fn step(&mut self, frame: &ThresholdedFrame) -> Result<StepOutput> {
        let s = &self.setup;
        if frame.geometry() != &s.geometry {
            return Err(Error::InvalidFrame("frame geometry differs from the filter grid".into()));
        }
        if frame.eta() != s.eta {
            return Err(Error::InvalidFrame(format!(
                "frame threshold {} differs from the filter threshold {}",
                frame.eta(),
                s.eta
            )));
        }
        self.step += 1;
        let predicted = predict(&self.belief, &s.params, &s.motion(), &s.geometry, &mut self.rng);
        let opts = UpdateOptions {
            particles_per_bernoulli: s.params.particles_per_bernoulli,
            recycle_below: s.params.recycle_threshold,
            step: self.step,
        };
        let (mut belief, mut diag) = match s.kind {
            FilterKind::PmbCm => cell::update(&predicted, frame, &s.amplitude, &s.association, &opts, &mut self.rng)?,
            FilterKind::PmbAm | FilterKind::Pmb => point::update(
                &predicted,
                frame,
                &s.amplitude,
                &s.point,
                s.kind == FilterKind::PmbAm,
                &s.association,
                &opts,
                &mut self.rng,
            )?,
        };
        recycle(&mut belief, s.params.recycle_threshold);
        diag.cardinality_after_recycle = belief.expected_cardinality();
        belief.phd = reduce_phd(&belief.phd, s.params.phd_particle_budget, &mut self.rng);
        self.belief = belief;
        self.last = diag;
        Ok(StepOutput {
            estimates: extract_estimates(&self.belief, s.params.existence_threshold),
            diagnostics: diag,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BernoulliComponent;
    use rand::SeedableRng;

    fn component(r: f64, state: ObjectState, step: u32) -> BernoulliComponent {
        BernoulliComponent {
            r,
            pdf: ParticleSet::point_mass(state, 10, 1.0),
            label: TrackLabel { step, cell: 0 },
        }
    }

    #[test]
    fn deterministic_motion_without_noise() {
        let params = FilterParams {
            p_s: 1.0,
            birth_mass: 0.0,
            ..Default::default()
        };
        let motion = MotionModel { dt: 0.5, noise_var: 0.0, gamma_jitter_var: 0.0 };
        let x = ObjectState::new(3.0, 4.0, 1.0, -2.0, 10.0);
        let belief = PmbBelief {
            phd: ParticleSet::default(),
            bernoullis: vec![component(0.5, x, 1)],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = predict(&belief, &params, &motion, &GridGeometry::standard(), &mut rng);
        assert_eq!(out.bernoullis[0].r, 0.5);
        for p in out.bernoullis[0].pdf.iter() {
            assert_eq!(p.state, ObjectState::new(3.5, 3.0, 1.0, -2.0, 10.0));
        }
        assert!(out.phd.is_empty());
    }

    #[test]
    fn leaving_the_grid_ends_existence() {
        let params = FilterParams {
            p_s: 1.0,
            birth_mass: 0.0,
            ..Default::default()
        };
        let motion = MotionModel { dt: 1.0, noise_var: 0.0, gamma_jitter_var: 0.0 };
        let mut half = ParticleSet::point_mass(ObjectState::new(31.9, 5.0, 0.5, 0.0, 10.0), 3, 1.0);
        half.append(&mut ParticleSet::point_mass(ObjectState::new(20.0, 5.0, 0.5, 0.0, 10.0), 3, 1.0));
        half.normalize();
        let belief = PmbBelief {
            phd: ParticleSet::point_mass(ObjectState::new(0.2, 5.0, -1.0, 0.0, 10.0), 4, 1.0),
            bernoullis: vec![
                BernoulliComponent { r: 0.8, pdf: half, label: TrackLabel { step: 1, cell: 0 } },
                component(0.9, ObjectState::new(31.9, 5.0, 0.5, 0.0, 10.0), 2),
            ],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = predict(&belief, &params, &motion, &GridGeometry::standard(), &mut rng);
        assert!(out.phd.is_empty());
        assert_eq!(out.bernoullis.len(), 1);
        assert!((out.bernoullis[0].r - 0.4).abs() < 1e-15);
        assert!((out.bernoullis[0].pdf.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn survival_and_birth_mass() {
        let params = FilterParams {
            birth_particles: 1000,
            ..Default::default()
        };
        let motion = MotionModel { dt: 1.0, noise_var: 1e-3, gamma_jitter_var: 0.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let empty = predict(&PmbBelief::default(), &params, &motion, &GridGeometry::standard(), &mut rng);
        assert!((empty.phd.total_weight() - 5.0 / 1024.0).abs() < 1e-15);
        assert!(empty.phd.iter().all(|p| GridGeometry::standard().contains(p.state.p1, p.state.p2)));
        assert!(empty.phd.iter().all(|p| (0.0..30.0).contains(&p.state.gamma)));

        let belief = PmbBelief {
            phd: ParticleSet::point_mass(ObjectState::new(16.0, 16.0, 0.0, 0.0, 10.0), 4, 2.0),
            bernoullis: vec![component(0.5, ObjectState::new(16.0, 16.0, 0.0, 0.0, 10.0), 1)],
        };
        let out = predict(&belief, &params, &motion, &GridGeometry::standard(), &mut rng);
        assert!((out.bernoullis[0].r - 0.4995).abs() < 1e-15);
        assert!((out.phd.total_weight() - (2.0 * 0.999 + 5.0 / 1024.0)).abs() < 1e-12);
    }

    #[test]
    fn recycling_conserves_cardinality() {
        let mut belief = PmbBelief {
            phd: ParticleSet::point_mass(ObjectState::default(), 3, 1.2),
            bernoullis: vec![
                component(0.05, ObjectState::default(), 1),
                component(0.5, ObjectState::default(), 2),
            ],
        };
        let before = belief.expected_cardinality();
        recycle(&mut belief, 0.1);
        assert_eq!(belief.bernoullis.len(), 1);
        assert!((belief.phd.total_weight() - 1.25).abs() < 1e-12);
        assert!((belief.expected_cardinality() - before).abs() < 1e-9);

        let snapshot = belief.clone();
        recycle(&mut belief, 0.1);
        assert_eq!(belief, snapshot);
    }

    #[test]
    fn estimates_follow_threshold() {
        let x0 = ObjectState::new(5.0, 6.0, 0.1, 0.2, 10.0);
        let belief = PmbBelief {
            phd: ParticleSet::default(),
            bernoullis: vec![
                component(0.4, x0, 1),
                component(0.6, x0, 2),
                component(0.7, ObjectState::new(1.0, 1.0, 0.0, 0.0, 9.0), 3),
            ],
        };
        let est = extract_estimates(&belief, 0.5);
        assert_eq!(est.len(), 2);
        let e = est[0].state;
        assert!((e.p1 - 5.0).abs() < 1e-12 && (e.p2 - 6.0).abs() < 1e-12 && (e.gamma - 10.0).abs() < 1e-12);
        assert!(extract_estimates(&PmbBelief { phd: ParticleSet::default(), bernoullis: vec![component(0.9, x0, 1)] }, 0.5)
            .iter()
            .all(|e| (e.state.p1 - 5.0).abs() < 1e-12));
    }

    #[test]
    fn phd_reduction_keeps_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut phd = ParticleSet::point_mass(ObjectState::default(), 500, 7.0);
        phd.push(Particle { state: ObjectState::default(), weight: 0.0 });
        let small = reduce_phd(&phd, 100, &mut rng);
        assert_eq!(small.len(), 100);
        assert!((small.total_weight() - 7.0).abs() < 1e-12);
        let same = reduce_phd(&phd, 1000, &mut rng);
        assert_eq!(same.len(), 500);
    }

    #[test]
    fn point_filters_reject_zero_threshold() {
        let setup = FilterSetup {
            kind: FilterKind::PmbAm,
            geometry: GridGeometry::standard(),
            amplitude: AmplitudeModel::default(),
            eta: 0.0,
            dt: 1.0,
            params: FilterParams::default(),
            point: PointParams::default(),
            association: AssociationParams::default(),
        };
        let err = Tracker::new(setup.clone(), ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(err.is_validation());
        assert!(Tracker::new(FilterSetup { kind: FilterKind::PmbCm, ..setup }, ChaCha8Rng::seed_from_u64(0)).is_ok());
    }

    #[test]
    fn filter_kind_round_trip() {
        for k in FilterKind::ALL {
            assert_eq!(k.name().parse::<FilterKind>().unwrap(), k);
        }
        assert!("pmbx".parse::<FilterKind>().is_err());
    }
}
