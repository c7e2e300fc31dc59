//! Tiny random filter instances and brute-force posteriors that enumerate
//! every object configuration directly.

#![allow(dead_code)]

use cellpmb::model::{
    BernoulliComponent, Detection, GridGeometry, ObjectState, Particle, ParticleSet, PmbBelief, ThresholdedFrame, TrackLabel,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const SIGMA_N_SQ: f64 = 1.0;

pub struct Instance {
    pub belief: PmbBelief,
    pub frame: ThresholdedFrame,
}

fn random_state<R: Rng>(g: &GridGeometry, rng: &mut R) -> ObjectState {
    // a few particles may land in the same cell with different intensities
    ObjectState::new(
        rng.random_range(0.0..g.width()),
        rng.random_range(0.0..g.height()),
        0.0,
        0.0,
        rng.random_range(0.5..20.0),
    )
}

/// At most 3 Bernoullis, 3 detections and 8 cells.
pub fn tiny_instance(rng: &mut ChaCha8Rng) -> Instance {
    let shapes = [(1, 8), (2, 4), (2, 3), (2, 2), (1, 5)];
    let (rows, cols) = shapes[rng.random_range(0..shapes.len())];
    let g = GridGeometry::new(rows, cols, 1.0, (0.0, 0.0)).unwrap();
    let n_b = rng.random_range(1..=3);
    let bernoullis = (0..n_b)
        .map(|j| {
            let n_p = rng.random_range(1..=4);
            let mut pdf = ParticleSet::new(
                (0..n_p)
                    .map(|_| Particle {
                        state: random_state(&g, rng),
                        weight: rng.random_range(0.1..1.0),
                    })
                    .collect(),
            );
            pdf.normalize();
            BernoulliComponent {
                r: rng.random_range(0.05..0.99),
                pdf,
                label: TrackLabel { step: 0, cell: j },
            }
        })
        .collect();
    let n_phd = rng.random_range(0..=6);
    let phd = ParticleSet::new(
        (0..n_phd)
            .map(|_| Particle {
                state: random_state(&g, rng),
                weight: rng.random_range(0.0..0.3),
            })
            .collect(),
    );
    let eta = [1.0, 2.0, 3.0][rng.random_range(0..3)];
    let n_d = rng.random_range(0..=3.min(g.num_cells()));
    let mut cells: Vec<usize> = (0..g.num_cells()).collect();
    for i in 0..n_d {
        let k = rng.random_range(i..cells.len());
        cells.swap(i, k);
    }
    let detections = cells[..n_d]
        .iter()
        .map(|&cell| Detection {
            cell,
            amplitude: eta + rng.random_range(0.05..4.0),
        })
        .collect();
    Instance {
        belief: PmbBelief { phd, bernoullis },
        frame: ThresholdedFrame::new(g, eta, detections).unwrap(),
    }
}

fn rayleigh(z: f64, s: f64) -> f64 {
    z / s * (-z * z / (2.0 * s)).exp()
}

fn tail(eta: f64, s: f64) -> f64 {
    (-eta * eta / (2.0 * s)).exp()
}

fn cell_of(g: &GridGeometry, x: &ObjectState) -> Option<usize> {
    if x.p1 < 0.0 || x.p2 < 0.0 || x.p1 >= g.width() || x.p2 >= g.height() {
        return None;
    }
    Some((x.p2 / g.cell_side()) as usize * g.n_cols() + (x.p1 / g.cell_side()) as usize)
}

/// Posterior existence of every legacy component and of the new component
/// of every detection.
#[derive(Debug, Clone)]
pub struct Posterior {
    pub legacy: Vec<f64>,
    pub new: Vec<f64>,
}

/// Enumerates which particle (or absence) every Bernoulli takes. Each
/// configuration is scored by the scan likelihood over all cells divided by
/// the clutter-only scan likelihood; a detected cell may hold at most one
/// object, and an unclaimed detected cell holds either clutter or one
/// undetected object drawn from the PHD.
pub fn brute_force_cell(inst: &Instance) -> Posterior {
    let f = &inst.frame;
    let g = f.geometry();
    let eta = f.eta();
    let det_of: Vec<Option<usize>> = (0..g.num_cells())
        .map(|c| f.detections().iter().position(|d| d.cell == c))
        .collect();
    let ratio = |x: &ObjectState| -> f64 {
        let s = x.gamma + SIGMA_N_SQ;
        match cell_of(g, x) {
            None => 1.0,
            Some(c) => match det_of[c] {
                None => (1.0 - tail(eta, s)) / (1.0 - tail(eta, SIGMA_N_SQ)),
                Some(d) => {
                    let z = f.detections()[d].amplitude;
                    rayleigh(z, s) / rayleigh(z, SIGMA_N_SQ)
                }
            },
        }
    };
    let nd = f.num_detections();
    let undetected: Vec<f64> = (0..nd)
        .map(|d| {
            inst.belief
                .phd
                .iter()
                .filter(|p| cell_of(g, &p.state) == Some(f.detections()[d].cell))
                .map(|p| p.weight * ratio(&p.state))
                .sum()
        })
        .collect();

    let bs = &inst.belief.bernoullis;
    let mut choice = vec![0usize; bs.len()];
    let mut total = 0.0;
    let mut legacy = vec![0.0; bs.len()];
    let mut unclaimed = vec![0.0; nd];
    loop {
        let mut w = 1.0;
        let mut claimed = vec![false; nd];
        for (j, b) in bs.iter().enumerate() {
            if choice[j] == 0 {
                w *= 1.0 - b.r;
                continue;
            }
            let p = &b.pdf.particles()[choice[j] - 1];
            w *= b.r * p.weight * ratio(&p.state);
            if let Some(d) = cell_of(g, &p.state).and_then(|c| det_of[c]) {
                if claimed[d] {
                    w = 0.0;
                }
                claimed[d] = true;
            }
        }
        for d in 0..nd {
            if !claimed[d] {
                w *= 1.0 + undetected[d];
            }
        }
        total += w;
        for j in 0..bs.len() {
            if choice[j] > 0 {
                legacy[j] += w;
            }
        }
        for d in 0..nd {
            if !claimed[d] {
                unclaimed[d] += w * undetected[d] / (1.0 + undetected[d]);
            }
        }
        // next configuration, odometer style
        let mut j = 0;
        loop {
            if j == bs.len() {
                return Posterior {
                    legacy: legacy.iter().map(|v| v / total).collect(),
                    new: unclaimed.iter().map(|v| v / total).collect(),
                };
            }
            choice[j] += 1;
            if choice[j] <= bs[j].pdf.len() {
                break;
            }
            choice[j] = 0;
            j += 1;
        }
    }
}

/// Point-measurement posterior: every detection becomes its cell center, a
/// Bernoulli that exists either misses or generates exactly one
/// measurement, and unassigned measurements are Poisson clutter or one new
/// object. Weights are divided by the product of clutter intensities.
pub fn brute_force_point(inst: &Instance, sigma_p_sq: f64, use_amplitude: bool) -> Posterior {
    let f = &inst.frame;
    let g = f.geometry();
    let eta = f.eta();
    let p_fa = tail(eta, SIGMA_N_SQ);
    let clutter_rate = p_fa * g.num_cells() as f64 / g.area();
    let ys: Vec<(f64, f64, f64)> = f
        .detections()
        .iter()
        .map(|d| {
            let c = d.cell;
            let (col, row) = (c % g.n_cols(), c / g.n_cols());
            ((col as f64 + 0.5) * g.cell_side(), (row as f64 + 0.5) * g.cell_side(), d.amplitude)
        })
        .collect();
    let p_d = |x: &ObjectState| {
        if cell_of(g, x).is_some() {
            tail(eta, x.gamma + SIGMA_N_SQ)
        } else {
            0.0
        }
    };
    // p_d(x) f(y|x) / lambda_FA(y)
    let lik = |x: &ObjectState, d: usize| -> f64 {
        let pd = p_d(x);
        if pd == 0.0 {
            return 0.0;
        }
        let (z1, z2, z) = ys[d];
        let pos = (-((z1 - x.p1).powi(2) + (z2 - x.p2).powi(2)) / (2.0 * sigma_p_sq)).exp()
            / (2.0 * std::f64::consts::PI * sigma_p_sq);
        let s = x.gamma + SIGMA_N_SQ;
        let (obj, clut) = if use_amplitude {
            (rayleigh(z, s) / pd, clutter_rate * rayleigh(z, SIGMA_N_SQ) / p_fa)
        } else {
            (1.0, clutter_rate)
        };
        pd * pos * obj / clut
    };
    let nd = ys.len();
    let undetected: Vec<f64> = (0..nd)
        .map(|d| inst.belief.phd.iter().map(|p| p.weight * lik(&p.state, d)).sum())
        .collect();

    // per component: 0 = absent, 1 = exists and missed, 2 + d = generated d
    let bs = &inst.belief.bernoullis;
    let mut choice = vec![0usize; bs.len()];
    let mut total = 0.0;
    let mut legacy = vec![0.0; bs.len()];
    let mut unclaimed = vec![0.0; nd];
    loop {
        let mut used = vec![false; nd];
        let mut w = 1.0;
        for (j, b) in bs.iter().enumerate() {
            w *= match choice[j] {
                0 => 1.0 - b.r,
                1 => b.r * b.pdf.iter().map(|p| p.weight * (1.0 - p_d(&p.state))).sum::<f64>(),
                k => {
                    let d = k - 2;
                    if used[d] {
                        0.0
                    } else {
                        used[d] = true;
                        b.r * b.pdf.iter().map(|p| p.weight * lik(&p.state, d)).sum::<f64>()
                    }
                }
            };
        }
        for d in 0..nd {
            if !used[d] {
                w *= 1.0 + undetected[d];
            }
        }
        total += w;
        for j in 0..bs.len() {
            if choice[j] > 0 {
                legacy[j] += w;
            }
        }
        for d in 0..nd {
            if !used[d] {
                unclaimed[d] += w * undetected[d] / (1.0 + undetected[d]);
            }
        }
        let mut j = 0;
        loop {
            if j == bs.len() {
                return Posterior {
                    legacy: legacy.iter().map(|v| v / total).collect(),
                    new: unclaimed.iter().map(|v| v / total).collect(),
                };
            }
            choice[j] += 1;
            if choice[j] < 2 + nd {
                break;
            }
            choice[j] = 0;
            j += 1;
        }
    }
}

/// Posterior existence of `belief` after an update, in the same layout as
/// [`Posterior`]. New components are matched to detections by the cell in
/// their label; missing ones count as zero.
pub fn existence_after(updated: &PmbBelief, frame: &ThresholdedFrame, n_legacy: usize) -> Posterior {
    let legacy = updated.bernoullis[..n_legacy].iter().map(|b| b.r).collect();
    let new = frame
        .detections()
        .iter()
        .map(|d| {
            updated.bernoullis[n_legacy..]
                .iter()
                .find(|b| b.label.cell as usize == d.cell)
                .map_or(0.0, |b| b.r)
        })
        .collect();
    Posterior { legacy, new }
}

pub fn max_abs_diff(a: &Posterior, b: &Posterior) -> f64 {
    a.legacy
        .iter()
        .zip(&b.legacy)
        .chain(a.new.iter().zip(&b.new))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
