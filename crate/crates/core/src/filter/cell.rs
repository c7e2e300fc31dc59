//! Update on thresholded cell measurements.
//!
//! All weights are divided by the clutter-only likelihood of the scan, so a
//! missed cell contributes `(1 - p_d) / (1 - p_fa)` and a detected cell
//! contributes `f_1(z|x) / f_0(z)`; both are independent of the other cells.

use rand::Rng;

use super::{floor_weight, pmf_error, AssociationParams, UpdateDiagnostics, UpdateOptions};
use crate::association::{AssociationProblem, LegacyMarginal, LegacyWeights, MarginalTable};
use crate::error::{Error, Result};
use crate::measurement::AmplitudeModel;
use crate::model::{BernoulliComponent, ObjectState, Particle, ParticleSet, PmbBelief, ThresholdedFrame, TrackLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Outside,
    Missed,
    Detected(u32),
}

/// Per-scan lookup of what each position observes.
#[derive(Debug, Clone)]
pub struct CellLikelihood<'a> {
    frame: &'a ThresholdedFrame,
    model: &'a AmplitudeModel,
    lookup: Vec<Option<u32>>,
}

impl<'a> CellLikelihood<'a> {
    pub fn new(frame: &'a ThresholdedFrame, model: &'a AmplitudeModel) -> Self {
        Self {
            frame,
            model,
            lookup: frame.detection_lookup(),
        }
    }

    #[inline]
    pub fn slot(&self, x: &ObjectState) -> Slot {
        match self.frame.geometry().locate(x.p1, x.p2) {
            None => Slot::Outside,
            Some(m) => self.lookup[m].map_or(Slot::Missed, Slot::Detected),
        }
    }

    /// Normalized likelihood of the scan given an object at `x` in `slot`.
    #[inline]
    pub fn factor(&self, slot: Slot, x: &ObjectState) -> f64 {
        match slot {
            Slot::Outside => 1.0,
            Slot::Missed => self.model.miss_ratio(x.gamma, self.frame.eta()),
            Slot::Detected(d) => {
                let z = self.frame.detections()[d as usize].amplitude;
                self.model.ln_detection_ratio(z, x.gamma).exp()
            }
        }
    }
}

/// Undetected-object PHD after the scan: missed cells scale by the miss
/// ratio, detected cells drop to zero, and particles outside the grid keep
/// their weight.
pub fn phd_miss_update(phd: &ParticleSet, frame: &ThresholdedFrame, model: &AmplitudeModel) -> ParticleSet {
    let lik = CellLikelihood::new(frame, model);
    phd.iter()
        .map(|p| {
            let slot = lik.slot(&p.state);
            let w = match slot {
                Slot::Detected(_) => 0.0,
                _ => floor_weight(p.weight * lik.factor(slot, &p.state)),
            };
            Particle { state: p.state, weight: w }
        })
        .collect()
}

/// Sums of particle weight times likelihood factor, split by slot.
struct ComponentSums {
    miss: f64,
    detections: Vec<(usize, f64)>,
}

/// Reusable per-detection accumulator.
struct Accumulator {
    sums: Vec<f64>,
    seen: Vec<bool>,
    touched: Vec<usize>,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Self {
            sums: vec![0.0; n],
            seen: vec![false; n],
            touched: Vec::new(),
        }
    }

    fn component(&mut self, pdf: &ParticleSet, lik: &CellLikelihood<'_>) -> ComponentSums {
        let mut miss = 0.0;
        for p in pdf.iter() {
            let slot = lik.slot(&p.state);
            let v = p.weight * lik.factor(slot, &p.state);
            match slot {
                Slot::Detected(d) => {
                    let d = d as usize;
                    if !self.seen[d] {
                        self.seen[d] = true;
                        self.touched.push(d);
                    }
                    self.sums[d] += v;
                }
                _ => miss += v,
            }
        }
        self.touched.sort_unstable();
        let detections = self
            .touched
            .iter()
            .map(|&d| {
                let v = self.sums[d];
                self.sums[d] = 0.0;
                self.seen[d] = false;
                (d, v)
            })
            .collect();
        self.touched.clear();
        ComponentSums { miss, detections }
    }
}

/// Association weights for the predicted belief. Legacy components get
/// `1 - r`, `r * sum_missed w (1-p_d)/(1-p_fa)` and `r * sum_cell w f1/f0`;
/// each detection gets `1 + d` where `d` is the PHD's normalized detection
/// mass in that cell.
pub fn build_association_problem(belief: &PmbBelief, frame: &ThresholdedFrame, model: &AmplitudeModel) -> AssociationProblem {
    let lik = CellLikelihood::new(frame, model);
    let nd = frame.num_detections();
    let mut acc = Accumulator::new(nd);
    let legacy = belief
        .bernoullis
        .iter()
        .map(|b| {
            let s = acc.component(&b.pdf, &lik);
            LegacyWeights {
                nonexist: 1.0 - b.r,
                miss: b.r * s.miss,
                detections: s.detections.into_iter().map(|(d, v)| (d, b.r * v)).collect(),
            }
        })
        .collect();
    let mut new_weights = vec![1.0; nd];
    for p in belief.phd.iter() {
        if let slot @ Slot::Detected(d) = lik.slot(&p.state) {
            new_weights[d as usize] += p.weight * lik.factor(slot, &p.state);
        }
    }
    AssociationProblem { legacy, new_weights }
}

/// Multi-Bernoulli approximation of the updated PMBM given association
/// marginals. New components with existence below `opts.recycle_below` are
/// folded into the PHD directly.
pub fn mb_update<R: Rng + ?Sized>(
    belief: &PmbBelief,
    frame: &ThresholdedFrame,
    model: &AmplitudeModel,
    problem: &AssociationProblem,
    marginals: &MarginalTable,
    opts: &UpdateOptions,
    rng: &mut R,
) -> Result<(PmbBelief, UpdateDiagnostics)> {
    marginals.check_against(problem)?;
    if problem.legacy.len() != belief.bernoullis.len() || problem.num_detections() != frame.num_detections() {
        return Err(Error::MarginalMismatch("problem does not match belief and frame".into()));
    }
    let lik = CellLikelihood::new(frame, model);
    let nd = frame.num_detections();
    let mut out = PmbBelief::default();
    let mut card = 0.0;

    let mut acc = Accumulator::new(nd);
    let mut coef = vec![0.0; nd];
    for (b, m) in belief.bernoullis.iter().zip(&marginals.legacy) {
        let s = acc.component(&b.pdf, &lik);
        let r_post = m.existence().clamp(0.0, 1.0);
        let miss_coef = if s.miss > 0.0 { m.miss / s.miss } else { 0.0 };
        set_detection_coefficients(&mut coef, m, &s.detections);
        let mut pdf: ParticleSet = b
            .pdf
            .iter()
            .map(|p| {
                let slot = lik.slot(&p.state);
                let c = match slot {
                    Slot::Detected(d) => coef[d as usize],
                    _ => miss_coef,
                };
                Particle {
                    state: p.state,
                    weight: floor_weight(p.weight * lik.factor(slot, &p.state) * c),
                }
            })
            .collect();
        for &(d, _) in &s.detections {
            coef[d] = 0.0;
        }
        let r = if pdf.normalize() > 0.0 { r_post } else { 0.0 };
        card += r;
        if r > 0.0 {
            pdf = pdf.systematic_resample(opts.particles_per_bernoulli, rng);
        }
        out.bernoullis.push(BernoulliComponent { r, pdf, label: b.label });
    }

    // new components: r = p(new = 1) * d / (1 + d)
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

    let mut phd = ParticleSet::with_capacity(belief.phd.len());
    let mut seeds: Vec<Vec<Particle>> = vec![Vec::new(); nd];
    let mut miss_mass = 0.0;
    for p in belief.phd.iter() {
        let slot = lik.slot(&p.state);
        let f = lik.factor(slot, &p.state);
        let w = match slot {
            Slot::Detected(d) => {
                let d = d as usize;
                let v = p.weight * f;
                if keep[d] {
                    if v > 0.0 {
                        seeds[d].push(Particle { state: p.state, weight: v });
                    }
                    0.0
                } else if r_new[d] > 0.0 {
                    // recycled new component: mass r spread as its pdf
                    v * r_new[d] / (problem.new_weights[d] - 1.0)
                } else {
                    0.0
                }
            }
            _ => {
                miss_mass += floor_weight(p.weight * f);
                p.weight * f
            }
        };
        let w = floor_weight(w);
        if w > 0.0 {
            phd.push(Particle { state: p.state, weight: w });
        }
    }
    card += miss_mass;
    for (d, det) in frame.detections().iter().enumerate() {
        if !keep[d] {
            continue;
        }
        let mut pdf = ParticleSet::new(std::mem::take(&mut seeds[d]));
        pdf.normalize();
        let pdf = pdf.systematic_resample(opts.particles_per_bernoulli, rng);
        out.bernoullis.push(BernoulliComponent {
            r: r_new[d],
            pdf,
            label: TrackLabel {
                step: opts.step,
                cell: det.cell as u32,
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

fn set_detection_coefficients(coef: &mut [f64], m: &LegacyMarginal, sums: &[(usize, f64)]) {
    for (&(d, s), &(dm, q)) in sums.iter().zip(&m.detections) {
        debug_assert_eq!(d, dm);
        coef[d] = if s > 0.0 { q / s } else { 0.0 };
    }
}

/// Marginals of a problem without any legacy/detection edges: every
/// component is independent and every detection is new.
pub(crate) fn factorized_marginals(problem: &AssociationProblem) -> Option<MarginalTable> {
    if problem.legacy.iter().any(|l| l.detections.iter().any(|d| d.1 > 0.0)) {
        return None;
    }
    let legacy = problem
        .legacy
        .iter()
        .map(|l| {
            let z = l.nonexist + l.miss;
            LegacyMarginal {
                nonexist: l.nonexist / z,
                miss: l.miss / z,
                detections: l.detections.iter().map(|d| (d.0, 0.0)).collect(),
            }
        })
        .collect();
    Some(MarginalTable {
        legacy,
        new_active: vec![1.0; problem.num_detections()],
    })
}

pub(crate) fn solve(problem: &AssociationProblem, association: &AssociationParams) -> Result<MarginalTable> {
    match factorized_marginals(problem) {
        Some(t) => {
            problem.validate()?;
            Ok(t)
        }
        None => association.solve(problem),
    }
}

/// Full cell-measurement update of a predicted belief.
pub fn update<R: Rng + ?Sized>(
    predicted: &PmbBelief,
    frame: &ThresholdedFrame,
    model: &AmplitudeModel,
    association: &AssociationParams,
    opts: &UpdateOptions,
    rng: &mut R,
) -> Result<(PmbBelief, UpdateDiagnostics)> {
    let problem = build_association_problem(predicted, frame, model);
    let marginals = solve(&problem, association)?;
    mb_update(predicted, frame, model, &problem, &marginals, opts, rng)
}
