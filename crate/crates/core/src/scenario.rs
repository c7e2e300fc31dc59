//! Ground-truth generation: objects appear early, wander with nearly
//! constant velocity and disappear late or when they leave the grid.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::MotionModel;
use crate::measurement::{synthesize_frame, threshold_frame, AmplitudeModel};
use crate::model::{CellFrame, GridGeometry, ObjectState, ThresholdedFrame};
use crate::rng::{stream_rng, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_rows: usize,
    pub n_cols: usize,
    pub cell_side: f64,
    pub n_objects: usize,
    pub n_steps: u32,
    /// Births are uniform on `1..=birth_last`.
    pub birth_last: u32,
    /// Deaths are uniform on `death_first + 1..=n_steps`.
    pub death_first: u32,
    pub sigma_v_sq: f64,
    pub process_noise_var: f64,
    pub initial_gamma: f64,
    pub dt: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_rows: 32,
            n_cols: 32,
            cell_side: 1.0,
            n_objects: 10,
            n_steps: 200,
            birth_last: 30,
            death_first: 170,
            sigma_v_sq: 1e-2,
            process_noise_var: 1e-3,
            initial_gamma: 10.0,
            dt: 0.25,
        }
    }
}

impl ScenarioConfig {
    pub fn geometry(&self) -> Result<GridGeometry> {
        GridGeometry::new(self.n_rows, self.n_cols, self.cell_side, (0.0, 0.0))
    }

    pub fn motion(&self) -> MotionModel {
        MotionModel {
            dt: self.dt,
            noise_var: self.process_noise_var,
            gamma_jitter_var: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry()?;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.birth_last < 1 || self.birth_last >= self.death_first || self.death_first >= self.n_steps {
            return bad(format!(
                "need 1 <= birth_last < death_first < n_steps, got {} / {} / {}",
                self.birth_last, self.death_first, self.n_steps
            ));
        }
        for (name, v) in [
            ("sigma_v_sq", self.sigma_v_sq),
            ("process_noise_var", self.process_noise_var),
            ("initial_gamma", self.initial_gamma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub birth: u32,
    /// First step at which the object is gone.
    pub death: u32,
    /// `states[i]` is the state at step `birth + i`.
    pub states: Vec<ObjectState>,
}

impl Trajectory {
    pub fn alive_at(&self, k: u32) -> bool {
        self.birth <= k && k < self.death
    }

    pub fn state_at(&self, k: u32) -> Option<&ObjectState> {
        if self.alive_at(k) {
            self.states.get((k - self.birth) as usize)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub geometry: GridGeometry,
    pub n_steps: u32,
    pub objects: Vec<Trajectory>,
}

impl GroundTruth {
    pub fn alive(&self, k: u32) -> Vec<ObjectState> {
        self.objects.iter().filter_map(|o| o.state_at(k).copied()).collect()
    }

    pub fn positions(&self, k: u32) -> Vec<[f64; 2]> {
        self.objects.iter().filter_map(|o| o.state_at(k).map(|s| s.position())).collect()
    }

    pub fn cardinality(&self, k: u32) -> usize {
        self.objects.iter().filter(|o| o.alive_at(k)).count()
    }

    /// `(object_id, step, state)` rows in object order.
    pub fn rows(&self) -> Vec<(usize, u32, ObjectState)> {
        let mut out = Vec::new();
        for (id, o) in self.objects.iter().enumerate() {
            for (i, s) in o.states.iter().enumerate() {
                out.push((id, o.birth + i as u32, *s));
            }
        }
        out
    }
}

/// Draws a ground truth for replicate `replicate` of master seed `seed`.
pub fn generate(config: &ScenarioConfig, seed: u64, replicate: u64) -> Result<GroundTruth> {
    config.validate()?;
    let geometry = config.geometry()?;
    let motion = config.motion();
    let mut rng = stream_rng(seed, replicate, Purpose::Scenario, 0);
    let sv = config.sigma_v_sq.sqrt();
    let mut objects = Vec::with_capacity(config.n_objects);
    for _ in 0..config.n_objects {
        let birth = rng.random_range(1..=config.birth_last);
        let mut death = rng.random_range(config.death_first + 1..=config.n_steps);
        let n1: f64 = StandardNormal.sample(&mut rng);
        let n2: f64 = StandardNormal.sample(&mut rng);
        let mut x = ObjectState::new(
            rng.random::<f64>() * geometry.width(),
            rng.random::<f64>() * geometry.height(),
            sv * n1,
            sv * n2,
            config.initial_gamma,
        );
        let mut states = vec![x];
        for k in birth + 1..death {
            x = motion.propagate(&x, &mut rng);
            if !geometry.contains(x.p1, x.p2) {
                death = k;
                break;
            }
            states.push(x);
        }
        objects.push(Trajectory { birth, death, states });
    }
    Ok(GroundTruth {
        geometry,
        n_steps: config.n_steps,
        objects,
    })
}

/// Unthresholded scan at step `k`. The stream depends only on the seed,
/// replicate and step, so every threshold and filter sees the same noise.
pub fn cell_frame_at(truth: &GroundTruth, k: u32, model: &AmplitudeModel, seed: u64, replicate: u64) -> CellFrame {
    let mut rng = stream_rng(seed, replicate, Purpose::Measurement, k as u64);
    synthesize_frame(&truth.alive(k), &truth.geometry, model, &mut rng)
}

pub fn frame_at(
    truth: &GroundTruth,
    k: u32,
    model: &AmplitudeModel,
    eta: f64,
    seed: u64,
    replicate: u64,
) -> Result<ThresholdedFrame> {
    if k < 1 || k > truth.n_steps {
        return Err(Error::InvalidParameter(format!("step {k} outside 1..={}", truth.n_steps)));
    }
    threshold_frame(&cell_frame_at(truth, k, model, seed, replicate), eta)
}
