//! Baseline update on point measurements: each detection becomes an
//! amplitude plus the center of its cell, and clutter is a Poisson process
//! with rate `p_fa * M` spread uniformly over the region.

use rand::Rng;
use statrs::distribution::{Binomial, Discrete, Poisson};

use super::{floor_weight, pmf_error, AssociationParams, PointParams, PositionLikelihood, UpdateDiagnostics, UpdateOptions};
use crate::association::{AssociationProblem, LegacyWeights, MarginalTable};
use crate::error::{Error, Result};
use crate::measurement::AmplitudeModel;
use crate::model::{BernoulliComponent, GridGeometry, ObjectState, Particle, ParticleSet, PmbBelief, PointMeasurement, ThresholdedFrame, TrackLabel};

pub fn to_point_measurements(frame: &ThresholdedFrame) -> Vec<PointMeasurement> {
    let g = frame.geometry();
    frame
        .detections()
        .iter()
        .map(|d| {
            let (z1, z2) = g.cell_center(d.cell).expect("detections are in range");
            PointMeasurement { z: d.amplitude, z1, z2 }
        })
        .collect()
}

/// Static ingredients of the point-measurement likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointModel {
    pub geometry: GridGeometry,
    pub amplitude: AmplitudeModel,
    pub eta: f64,
    pub sigma_p_sq: f64,
    pub position: PositionLikelihood,
    pub use_amplitude: bool,
}

impl PointModel {
    pub fn new(geometry: GridGeometry, amplitude: AmplitudeModel, eta: f64, params: &PointParams, use_amplitude: bool) -> Self {
        Self {
            geometry,
            amplitude,
            eta,
            sigma_p_sq: params.sigma_p_sq,
            position: params.position_likelihood,
            use_amplitude,
        }
    }

    /// Poisson clutter rate `p_fa * M`.
    pub fn mu_fa(&self) -> f64 {
        self.amplitude.p_fa(self.eta) * self.geometry.num_cells() as f64
    }

    /// Detection probability; zero outside the grid.
    #[inline]
    pub fn p_d(&self, x: &ObjectState) -> f64 {
        if self.geometry.contains(x.p1, x.p2) {
            self.amplitude.p_d(x, self.eta)
        } else {
            0.0
        }
    }

    /// Position density of a measurement at `(z1, z2)` given the object.
    pub fn position_density(&self, y: &PointMeasurement, x: &ObjectState) -> f64 {
        match self.position {
            PositionLikelihood::Gaussian => {
                let d2 = (y.z1 - x.p1).powi(2) + (y.z2 - x.p2).powi(2);
                (-d2 / (2.0 * self.sigma_p_sq)).exp() / (2.0 * std::f64::consts::PI * self.sigma_p_sq)
            }
            PositionLikelihood::UniformCell => {
                let same = self.geometry.locate(x.p1, x.p2).is_some() && self.geometry.locate(y.z1, y.z2) == self.geometry.locate(x.p1, x.p2);
                if same {
                    1.0 / self.geometry.cell_area()
                } else {
                    0.0
                }
            }
        }
    }

    /// Single-object measurement density: position factor times the truncated
    /// amplitude density (the latter only with amplitude information).
    pub fn object_likelihood(&self, y: &PointMeasurement, x: &ObjectState) -> Result<f64> {
        let pos = self.position_density(y, x);
        if self.use_amplitude {
            Ok(pos * self.amplitude.f1_eta(y.z, x, self.eta)?)
        } else {
            if !(y.z > self.eta) {
                return Err(Error::BelowThreshold { z: y.z, eta: self.eta });
            }
            Ok(pos)
        }
    }

    /// Clutter intensity `mu_fa / area * f0_eta(z)` (amplitude factor only with
    /// amplitude information).
    pub fn clutter_intensity(&self, y: &PointMeasurement) -> Result<f64> {
        let spatial = self.mu_fa() / self.geometry.area();
        if self.use_amplitude {
            Ok(spatial * self.amplitude.f0_eta(y.z, self.eta)?)
        } else {
            if !(y.z > self.eta) {
                return Err(Error::BelowThreshold { z: y.z, eta: self.eta });
            }
            Ok(spatial)
        }
    }
}

/// Evaluates `p_d(x) f_1(y|x) / lambda_FA(y)` for every measurement at once.
struct RatioKernel<'a> {
    model: &'a PointModel,
    ys: &'a [PointMeasurement],
    cells: Vec<Option<usize>>,
    z_sq: Vec<f64>,
    gauss_scale: f64,
    inv_two_var: f64,
    ln_p_fa: f64,
}

impl<'a> RatioKernel<'a> {
    fn new(model: &'a PointModel, ys: &'a [PointMeasurement]) -> Self {
        let a_cell = model.geometry.cell_area();
        Self {
            model,
            ys,
            cells: ys.iter().map(|y| model.geometry.locate(y.z1, y.z2)).collect(),
            z_sq: ys.iter().map(|y| y.z * y.z).collect(),
            gauss_scale: a_cell / (2.0 * std::f64::consts::PI * model.sigma_p_sq),
            inv_two_var: 0.5 / model.sigma_p_sq,
            ln_p_fa: -model.eta * model.eta / (2.0 * model.amplitude.sigma_n_sq()),
        }
    }

    /// Writes the ratio for each measurement into `out` and returns `p_d(x)`.
    ///
    /// With amplitudes: `p_d f_p f1_eta / (mu_fa/A f0_eta) = A_cell f_p f1/f0`.
    /// Without: `p_d f_p / (mu_fa/A) = A_cell f_p p_d / p_fa`.
    fn fill(&self, x: &ObjectState, out: &mut [f64]) -> f64 {
        let cell = self.model.geometry.locate(x.p1, x.p2);
        if cell.is_none() {
            out.iter_mut().for_each(|v| *v = 0.0);
            return 0.0;
        }
        let s = self.model.amplitude.object_scale_sq(x.gamma);
        let sn = self.model.amplitude.sigma_n_sq();
        let ln_pd = -self.model.eta * self.model.eta / (2.0 * s);
        // log amplitude term: either a + b z^2, or ln(p_d / p_fa)
        let (a, b) = if self.model.use_amplitude {
            ((sn / s).ln(), 0.5 * (1.0 / sn - 1.0 / s))
        } else {
            (ln_pd - self.ln_p_fa, 0.0)
        };
        match self.model.position {
            PositionLikelihood::Gaussian => {
                for ((o, y), zz) in out.iter_mut().zip(self.ys).zip(&self.z_sq) {
                    let d2 = (y.z1 - x.p1) * (y.z1 - x.p1) + (y.z2 - x.p2) * (y.z2 - x.p2);
                    *o = self.gauss_scale * (a + b * zz - d2 * self.inv_two_var).exp();
                }
            }
            PositionLikelihood::UniformCell => {
                for ((o, c), zz) in out.iter_mut().zip(&self.cells).zip(&self.z_sq) {
                    *o = if *c == cell { (a + b * zz).exp() } else { 0.0 };
                }
            }
        }
        ln_pd.exp()
    }
}

/// Association weights for point measurements: legacy components get
/// `1 - r`, `r (1 - mean p_d)` and `r * sum w p_d f1 / lambda_FA`; each
/// measurement gets `1 + sum_phd w p_d f1 / lambda_FA`.
pub fn build_association_problem(belief: &PmbBelief, ys: &[PointMeasurement], model: &PointModel) -> AssociationProblem {
    let kernel = RatioKernel::new(model, ys);
    let nd = ys.len();
    let mut buf = vec![0.0; nd];
    let legacy = belief
        .bernoullis
        .iter()
        .map(|b| {
            let mut sums = vec![0.0; nd];
            let mut miss = 0.0;
            for p in b.pdf.iter() {
                let pd = kernel.fill(&p.state, &mut buf);
                miss += p.weight * (1.0 - pd);
                for (s, v) in sums.iter_mut().zip(&buf) {
                    *s += p.weight * v;
                }
            }
            LegacyWeights {
                nonexist: 1.0 - b.r,
                miss: b.r * miss,
                detections: sums
                    .into_iter()
                    .enumerate()
                    .filter(|(_, s)| *s > 0.0)
                    .map(|(d, s)| (d, b.r * s))
                    .collect(),
            }
        })
        .collect();
    let mut new_weights = vec![1.0; nd];
    for p in belief.phd.iter() {
        kernel.fill(&p.state, &mut buf);
        for (s, v) in new_weights.iter_mut().zip(&buf) {
            *s += p.weight * v;
        }
    }
    AssociationProblem { legacy, new_weights }
}

/// Multi-Bernoulli approximation after a point-measurement update. New
/// components below `opts.recycle_below` are folded into the PHD weights.
pub fn mb_update<R: Rng + ?Sized>(
    belief: &PmbBelief,
    frame: &ThresholdedFrame,
    model: &PointModel,
    problem: &AssociationProblem,
    marginals: &MarginalTable,
    opts: &UpdateOptions,
    rng: &mut R,
) -> Result<(PmbBelief, UpdateDiagnostics)> {
    marginals.check_against(problem)?;
    let ys = to_point_measurements(frame);
    if problem.legacy.len() != belief.bernoullis.len() || problem.num_detections() != ys.len() {
        return Err(Error::MarginalMismatch("problem does not match belief and frame".into()));
    }
    let kernel = RatioKernel::new(model, &ys);
    let nd = ys.len();
    let mut buf = vec![0.0; nd];
    let mut out = PmbBelief::default();
    let mut card = 0.0;

    for ((b, m), w) in belief.bernoullis.iter().zip(&marginals.legacy).zip(&problem.legacy) {
        // per-hypothesis normalizers are the association weights divided by r
        let r_prior = b.r;
        let miss_coef = if w.miss > 0.0 { m.miss * r_prior / w.miss } else { 0.0 };
        let mut coef = vec![0.0; nd];
        for (&(d, beta), &(_, q)) in w.detections.iter().zip(&m.detections) {
            if beta > 0.0 {
                coef[d] = q * r_prior / beta;
            }
        }
        let mut pdf: ParticleSet = b
            .pdf
            .iter()
            .map(|p| {
                let pd = kernel.fill(&p.state, &mut buf);
                let v = miss_coef * (1.0 - pd) + coef.iter().zip(&buf).map(|(c, x)| c * x).sum::<f64>();
                Particle {
                    state: p.state,
                    weight: floor_weight(p.weight * v),
                }
            })
            .collect();
        let r = if pdf.normalize() > 0.0 { m.existence().clamp(0.0, 1.0) } else { 0.0 };
        card += r;
        if r > 0.0 {
            pdf = pdf.systematic_resample(opts.particles_per_bernoulli, rng);
        }
        out.bernoullis.push(BernoulliComponent { r, pdf, label: b.label });
    }

    let r_new: Vec<f64> = (0..nd)
        .map(|d| {
            let beta = problem.new_weights[d];
            let mass = beta - 1.0;
            if mass > 0.0 {
                (marginals.new_active[d] * mass / beta).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    card += r_new.iter().sum::<f64>();
    let keep: Vec<bool> = r_new.iter().map(|&r| r > 0.0 && r >= opts.recycle_below).collect();
    // recycled new components add r_d * w rho / d to each PHD particle
    let recycle_coef: Vec<f64> = (0..nd)
        .map(|d| {
            if !keep[d] && r_new[d] > 0.0 {
                r_new[d] / (problem.new_weights[d] - 1.0)
            } else {
                0.0
            }
        })
        .collect();
    let kept: Vec<usize> = (0..nd).filter(|&d| keep[d]).collect();
    let mut seeds: Vec<Vec<Particle>> = vec![Vec::new(); kept.len()];
    let mut phd = ParticleSet::with_capacity(belief.phd.len());
    let mut miss_mass = 0.0;
    for p in belief.phd.iter() {
        let pd = kernel.fill(&p.state, &mut buf);
        miss_mass += p.weight * (1.0 - pd);
        let back: f64 = recycle_coef.iter().zip(&buf).map(|(c, x)| c * x).sum();
        let w = floor_weight(p.weight * ((1.0 - pd) + back));
        if w > 0.0 {
            phd.push(Particle { state: p.state, weight: w });
        }
        for (seed, &d) in seeds.iter_mut().zip(&kept) {
            let v = p.weight * buf[d];
            if v > 0.0 {
                seed.push(Particle { state: p.state, weight: v });
            }
        }
    }
    card += miss_mass;
    for (seed, &d) in seeds.into_iter().zip(&kept) {
        let mut pdf = ParticleSet::new(seed);
        pdf.normalize();
        let pdf = pdf.systematic_resample(opts.particles_per_bernoulli, rng);
        out.bernoullis.push(BernoulliComponent {
            r: r_new[d],
            pdf,
            label: TrackLabel {
                step: opts.step,
                cell: frame.detections()[d].cell as u32,
            },
        });
    }
    out.phd = phd;
    let diag = UpdateDiagnostics {
        cardinality_before_recycle: card,
        cardinality_after_recycle: out.expected_cardinality(),
        max_pmf_error: pmf_error(marginals),
    };
    Ok((out, diag))
}

/// Full point-measurement update of a predicted belief.
#[allow(clippy::too_many_arguments)]
pub fn update<R: Rng + ?Sized>(
    predicted: &PmbBelief,
    frame: &ThresholdedFrame,
    amplitude: &AmplitudeModel,
    point: &PointParams,
    use_amplitude: bool,
    association: &AssociationParams,
    opts: &UpdateOptions,
    rng: &mut R,
) -> Result<(PmbBelief, UpdateDiagnostics)> {
    let model = PointModel::new(*frame.geometry(), *amplitude, frame.eta(), point, use_amplitude);
    let ys = to_point_measurements(frame);
    let problem = build_association_problem(predicted, &ys, &model);
    let marginals = super::cell::solve(&problem, association)?;
    mb_update(predicted, frame, &model, &problem, &marginals, opts, rng)
}

/// Poisson clutter-count pmf, the model used by the filter.
pub fn clutter_cardinality_pmf(n: u64, mu_fa: f64) -> f64 {
    if mu_fa == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    Poisson::new(mu_fa).map_or(f64::NAN, |d| d.pmf(n))
}

/// Exact binomial clutter-count pmf over `cells` independent cells.
pub fn binomial_clutter_pmf(n: u64, cells: u64, p_fa: f64) -> f64 {
    Binomial::new(p_fa, cells).map_or(f64::NAN, |d| d.pmf(n))
}

/// Total-variation distance between `Binomial(cells, p)` and `Poisson(cells p)`.
pub fn binomial_poisson_tv(cells: u64, p: f64) -> f64 {
    let mu = cells as f64 * p;
    let mut sum = 0.0;
    let mut pois_mass = 0.0;
    for n in 0..=cells {
        let b = binomial_clutter_pmf(n, cells, p);
        let q = clutter_cardinality_pmf(n, mu);
        pois_mass += q;
        sum += (b - q).abs();
    }
    // Poisson mass beyond the binomial support
    0.5 * (sum + (1.0 - pois_mass).max(0.0))
}

/// Number of ordered ways to draw `detected` measurement slots out of `cells`:
/// the falling factorial `cells! / (cells - detected)!`.
pub fn association_prior_count(cells: u64, detected: u64) -> Result<u128> {
    if detected > cells {
        return Err(Error::InvalidParameter(format!(
            "cannot draw {detected} detections from {cells} cells"
        )));
    }
    let mut acc: u128 = 1;
    for k in (cells - detected + 1)..=cells {
        acc = acc
            .checked_mul(k as u128)
            .ok_or_else(|| Error::InvalidParameter(format!("falling factorial ({cells}, {detected}) overflows")))?;
    }
    Ok(acc)
}
