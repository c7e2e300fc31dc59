mod common;

use cellpmb::association::exact_marginals;
use cellpmb::filter::{cell, point, AssociationMethod, AssociationParams, FilterKind, FilterParams, FilterSetup, PointParams, Tracker, UpdateOptions};
use cellpmb::measurement::{synthesize_frame, threshold_frame, AmplitudeModel};
use cellpmb::model::{Detection, GridGeometry, ObjectState, ThresholdedFrame};
use cellpmb::rng::{stream_rng, Purpose};
use common::{brute_force_cell, brute_force_point, existence_after, max_abs_diff, tiny_instance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn exact() -> AssociationParams {
    AssociationParams {
        method: AssociationMethod::Exact,
        ..Default::default()
    }
}

fn opts() -> UpdateOptions {
    UpdateOptions {
        particles_per_bernoulli: 16,
        recycle_below: 0.0,
        step: 1,
    }
}

#[test]
fn cell_update_matches_enumeration() {
    let model = AmplitudeModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..200 {
        let inst = tiny_instance(&mut rng);
        let (updated, _) = cell::update(&inst.belief, &inst.frame, &model, &exact(), &opts(), &mut rng).unwrap();
        let got = existence_after(&updated, &inst.frame, inst.belief.bernoullis.len());
        let want = brute_force_cell(&inst);
        let err = max_abs_diff(&got, &want);
        assert!(err < 1e-10, "trial {trial}: {got:?} vs {want:?}");
    }
}

#[test]
fn cell_update_phd_matches_enumeration_per_cell() {
    // cells without a detection keep only undetected mass scaled by the miss ratio
    let model = AmplitudeModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let inst = tiny_instance(&mut rng);
        let (updated, _) = cell::update(&inst.belief, &inst.frame, &model, &exact(), &opts(), &mut rng).unwrap();
        let g = inst.frame.geometry();
        let detected: Vec<usize> = inst.frame.detections().iter().map(|d| d.cell).collect();
        for c in (0..g.num_cells()).filter(|c| !detected.contains(c)) {
            let mass = |set: &cellpmb::model::ParticleSet, f: &dyn Fn(&ObjectState) -> f64| -> f64 {
                set.iter().filter(|p| g.locate(p.state.p1, p.state.p2) == Some(c)).map(|p| p.weight * f(&p.state)).sum()
            };
            let want = mass(&inst.belief.phd, &|x| {
                let s = x.gamma + 1.0;
                let eta = inst.frame.eta();
                (1.0 - (-eta * eta / (2.0 * s)).exp()) / (1.0 - (-eta * eta / 2.0).exp())
            });
            let got = mass(&updated.phd, &|_| 1.0);
            assert!((got - want).abs() < 1e-12 * want.max(1.0), "{got} vs {want}");
        }
        for &c in &detected {
            let new_r = existence_after(&updated, &inst.frame, inst.belief.bernoullis.len());
            let d = inst.frame.detections().iter().position(|x| x.cell == c).unwrap();
            let in_cell: f64 = updated.phd.iter().filter(|p| g.locate(p.state.p1, p.state.p2) == Some(c)).map(|p| p.weight).sum();
            // every new component is kept, so the PHD holds nothing in detected cells
            assert_eq!(in_cell, 0.0, "new r {}", new_r.new[d]);
        }
    }
}

#[test]
fn point_updates_match_enumeration() {
    let model = AmplitudeModel::default();
    let params = PointParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for trial in 0..200 {
        let inst = tiny_instance(&mut rng);
        for use_amplitude in [true, false] {
            let (updated, _) =
                point::update(&inst.belief, &inst.frame, &model, &params, use_amplitude, &exact(), &opts(), &mut rng).unwrap();
            let got = existence_after(&updated, &inst.frame, inst.belief.bernoullis.len());
            let want = brute_force_point(&inst, params.sigma_p_sq, use_amplitude);
            let err = max_abs_diff(&got, &want);
            assert!(err < 1e-10, "trial {trial} amplitude={use_amplitude}: {got:?} vs {want:?}");
        }
    }
}

fn permuted(frame: &ThresholdedFrame, order: &[usize]) -> ThresholdedFrame {
    let d: Vec<Detection> = order.iter().map(|&i| frame.detections()[i]).collect();
    ThresholdedFrame::new(*frame.geometry(), frame.eta(), d).unwrap()
}

#[test]
fn updates_ignore_detection_order() {
    let model = AmplitudeModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    while checked < 50 {
        let inst = tiny_instance(&mut rng);
        let n = inst.frame.num_detections();
        if n < 2 {
            continue;
        }
        checked += 1;
        let order: Vec<usize> = (0..n).rev().collect();
        let other = permuted(&inst.frame, &order);
        for kind in FilterKind::ALL {
            let run = |frame: &ThresholdedFrame| {
                let mut r = ChaCha8Rng::seed_from_u64(1);
                let (b, _) = match kind {
                    FilterKind::PmbCm => cell::update(&inst.belief, frame, &model, &exact(), &opts(), &mut r),
                    _ => point::update(
                        &inst.belief,
                        frame,
                        &model,
                        &PointParams::default(),
                        kind == FilterKind::PmbAm,
                        &exact(),
                        &opts(),
                        &mut r,
                    ),
                }
                .unwrap();
                // label each detection's result by cell so order does not matter
                existence_after(&b, &inst.frame, inst.belief.bernoullis.len())
            };
            let a = run(&inst.frame);
            let b = run(&other);
            assert!(max_abs_diff(&a, &b) < 1e-12, "{kind}: {a:?} vs {b:?}");
        }
    }
}

#[test]
fn lone_bright_object_is_confirmed_quickly() {
    // p_fa < 1e-6 and a stationary object in the middle of the grid
    let eta = 5.5;
    let model = AmplitudeModel::default();
    assert!(model.p_fa(eta) < 1e-6);
    let g = GridGeometry::standard();
    let truth = ObjectState::new(16.4, 15.6, 0.0, 0.0, 28.0);
    let params = FilterParams {
        particles_per_bernoulli: 300,
        phd_particle_budget: 3000,
        birth_particles: 3000,
        ..Default::default()
    };
    let mut successes = 0;
    for seed in 0..50u64 {
        let setup = FilterSetup {
            kind: FilterKind::PmbCm,
            geometry: g,
            amplitude: model,
            eta,
            dt: 0.25,
            params: params.clone(),
            point: PointParams::default(),
            association: AssociationParams::default(),
        };
        let mut tracker = Tracker::new(setup, stream_rng(seed, 0, Purpose::Filter, 0)).unwrap();
        let mut meas = stream_rng(seed, 0, Purpose::Measurement, 0);
        for _ in 0..10 {
            let frame = threshold_frame(&synthesize_frame(&[truth], &g, &model, &mut meas), eta).unwrap();
            tracker.step(&frame).unwrap();
        }
        let best = tracker.belief().bernoullis.iter().map(|b| b.r).fold(0.0, f64::max);
        if best > 0.99 {
            successes += 1;
        }
    }
    assert!(successes >= 45, "{successes} of 50");
}

#[test]
fn exact_marginals_cover_every_tiny_problem() {
    let model = AmplitudeModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let inst = tiny_instance(&mut rng);
        let p = cell::build_association_problem(&inst.belief, &inst.frame, &model);
        let m = exact_marginals(&p).unwrap();
        for l in &m.legacy {
            assert!((l.total() - 1.0).abs() < 1e-12);
        }
        for (d, &a) in m.new_active.iter().enumerate() {
            let claimed: f64 = m.legacy.iter().flat_map(|l| &l.detections).filter(|x| x.0 == d).map(|x| x.1).sum();
            assert!((a + claimed - 1.0).abs() < 1e-12);
        }
    }
}
