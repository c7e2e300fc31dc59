//! Data association between Bernoulli components and detected cells.
//!
//! Each legacy component `j` chooses one of: nonexistence, a miss (all missed
//! cells aggregated), or one detected cell. Each detected cell `m` also hosts
//! a new component, which is active exactly when no legacy component claims
//! the cell. Association vectors are weighted by the product of the chosen
//! weights; new components contribute `beta_new[m]` when active and `1`
//! otherwise.

use crate::error::{Error, Result};

/// Maximum `|J| + |D|` accepted by [`exact_marginals`].
pub const ENUMERATION_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct LegacyWeights {
    pub nonexist: f64,
    pub miss: f64,
    /// Sparse `(detection index, weight)` pairs; absent detections have weight 0.
    pub detections: Vec<(usize, f64)>,
}

impl LegacyWeights {
    pub fn not_detected(nonexist: f64, miss: f64) -> Self {
        Self {
            nonexist,
            miss,
            detections: Vec::new(),
        }
    }

    fn absent_weight(&self) -> f64 {
        self.nonexist + self.miss
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationProblem {
    pub legacy: Vec<LegacyWeights>,
    /// `beta(new_m, 1)` per detection; `beta(new_m, 0)` is 1.
    pub new_weights: Vec<f64>,
}

impl AssociationProblem {
    pub fn num_detections(&self) -> usize {
        self.new_weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_detections();
        let ok = |w: f64| w.is_finite() && w >= 0.0;
        for (m, &w) in self.new_weights.iter().enumerate() {
            if !ok(w) {
                return Err(Error::NonFiniteWeight(format!("new component {m}: {w}")));
            }
        }
        for (j, l) in self.legacy.iter().enumerate() {
            if !ok(l.nonexist) || !ok(l.miss) {
                return Err(Error::NonFiniteWeight(format!(
                    "component {j}: nonexist {} miss {}",
                    l.nonexist, l.miss
                )));
            }
            let mut seen = vec![false; n];
            for &(m, w) in &l.detections {
                if m >= n {
                    return Err(Error::InvalidParameter(format!(
                        "component {j} references detection {m} of {n}"
                    )));
                }
                if seen[m] {
                    return Err(Error::InvalidParameter(format!(
                        "component {j} lists detection {m} twice"
                    )));
                }
                seen[m] = true;
                if !ok(w) {
                    return Err(Error::NonFiniteWeight(format!(
                        "component {j}, detection {m}: {w}"
                    )));
                }
            }
            let total = l.absent_weight() + l.detections.iter().map(|d| d.1).sum::<f64>();
            if !(total > 0.0) {
                return Err(Error::NonFiniteWeight(format!("component {j} has no positive weight")));
            }
        }
        Ok(())
    }

    /// True when the component/detection graph has no cycles.
    pub fn is_tree(&self) -> bool {
        // union-find over legacy nodes 0..J and detection nodes J..J+D
        let nj = self.legacy.len();
        let mut parent: Vec<usize> = (0..nj + self.num_detections()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (j, l) in self.legacy.iter().enumerate() {
            for &(m, w) in &l.detections {
                if w == 0.0 {
                    continue;
                }
                let a = find(&mut parent, j);
                let b = find(&mut parent, nj + m);
                if a == b {
                    return false;
                }
                parent[a] = b;
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegacyMarginal {
    pub nonexist: f64,
    pub miss: f64,
    /// Same sparsity pattern as the matching [`LegacyWeights::detections`].
    pub detections: Vec<(usize, f64)>,
}

impl LegacyMarginal {
    /// Posterior existence probability: everything except nonexistence.
    pub fn existence(&self) -> f64 {
        self.miss + self.detections.iter().map(|d| d.1).sum::<f64>()
    }

    pub fn total(&self) -> f64 {
        self.nonexist + self.existence()
    }

    fn scaled(&mut self, s: f64) {
        self.nonexist *= s;
        self.miss *= s;
        for d in &mut self.detections {
            d.1 *= s;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTable {
    pub legacy: Vec<LegacyMarginal>,
    /// `p(new_m = 1)` per detection.
    pub new_active: Vec<f64>,
}

impl MarginalTable {
    pub fn check_against(&self, problem: &AssociationProblem) -> Result<()> {
        if self.legacy.len() != problem.legacy.len() || self.new_active.len() != problem.num_detections() {
            return Err(Error::MarginalMismatch(format!(
                "table has {} components / {} detections, problem has {} / {}",
                self.legacy.len(),
                self.new_active.len(),
                problem.legacy.len(),
                problem.num_detections()
            )));
        }
        for (j, (lm, lw)) in self.legacy.iter().zip(&problem.legacy).enumerate() {
            let same = lm.detections.len() == lw.detections.len()
                && lm.detections.iter().zip(&lw.detections).all(|(a, b)| a.0 == b.0);
            if !same {
                return Err(Error::MarginalMismatch(format!("component {j} detection pattern differs")));
            }
            if (lm.total() - 1.0).abs() > 1e-9 {
                return Err(Error::MarginalMismatch(format!("component {j} pmf sums to {}", lm.total())));
            }
        }
        if let Some(p) = self.new_active.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::MarginalMismatch(format!("new-component probability {p}")));
        }
        Ok(())
    }

    /// Largest per-component total-variation distance between two tables of
    /// the same shape.
    pub fn max_tv_distance(&self, other: &MarginalTable) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, b) in self.legacy.iter().zip(&other.legacy) {
            let mut tv = (a.nonexist - b.nonexist).abs() + (a.miss - b.miss).abs();
            tv += a
                .detections
                .iter()
                .zip(&b.detections)
                .map(|(x, y)| (x.1 - y.1).abs())
                .sum::<f64>();
            worst = worst.max(0.5 * tv);
        }
        for (a, b) in self.new_active.iter().zip(&other.new_active) {
            worst = worst.max((a - b).abs());
        }
        worst
    }
}

/// Exact marginals by enumerating every valid association vector.
pub fn exact_marginals(problem: &AssociationProblem) -> Result<MarginalTable> {
    problem.validate()?;
    let size = problem.legacy.len() + problem.num_detections();
    if size > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }

    struct Walk<'a> {
        p: &'a AssociationProblem,
        claimed: Vec<bool>,
        // choice per component: None = absent, Some(k) = k-th sparse entry
        choice: Vec<Option<usize>>,
        absent: Vec<f64>,
        det: Vec<Vec<f64>>,
        new_active: Vec<f64>,
        total: f64,
    }

    impl Walk<'_> {
        fn go(&mut self, j: usize, w: f64) {
            if j == self.p.legacy.len() {
                let mut leaf = w;
                for (m, &c) in self.claimed.iter().enumerate() {
                    if !c {
                        leaf *= self.p.new_weights[m];
                    }
                }
                if leaf == 0.0 {
                    return;
                }
                self.total += leaf;
                for (jj, c) in self.choice.iter().enumerate() {
                    match c {
                        None => self.absent[jj] += leaf,
                        Some(k) => self.det[jj][*k] += leaf,
                    }
                }
                for (m, &c) in self.claimed.iter().enumerate() {
                    if !c {
                        self.new_active[m] += leaf;
                    }
                }
                return;
            }
            let l = &self.p.legacy[j];
            let a = l.absent_weight();
            if a > 0.0 {
                self.choice[j] = None;
                self.go(j + 1, w * a);
            }
            for k in 0..l.detections.len() {
                let (m, b) = self.p.legacy[j].detections[k];
                if b > 0.0 && !self.claimed[m] {
                    self.claimed[m] = true;
                    self.choice[j] = Some(k);
                    self.go(j + 1, w * b);
                    self.claimed[m] = false;
                }
            }
            self.choice[j] = None;
        }
    }

    let mut walk = Walk {
        p: problem,
        claimed: vec![false; problem.num_detections()],
        choice: vec![None; problem.legacy.len()],
        absent: vec![0.0; problem.legacy.len()],
        det: problem
            .legacy
            .iter()
            .map(|l| vec![0.0; l.detections.len()])
            .collect(),
        new_active: vec![0.0; problem.num_detections()],
        total: 0.0,
    };
    walk.go(0, 1.0);
    if !(walk.total > 0.0 && walk.total.is_finite()) {
        return Err(Error::NonFiniteWeight(format!(
            "association weights sum to {}",
            walk.total
        )));
    }
    let z = walk.total;
    let legacy = problem
        .legacy
        .iter()
        .enumerate()
        .map(|(j, l)| split_absent(l, walk.absent[j] / z, walk.det[j].iter().map(|v| v / z)))
        .collect();
    let new_active = walk.new_active.iter().map(|v| v / z).collect();
    Ok(MarginalTable { legacy, new_active })
}

fn split_absent(l: &LegacyWeights, absent: f64, det: impl Iterator<Item = f64>) -> LegacyMarginal {
    let a = l.absent_weight();
    let (nonexist, miss) = if a > 0.0 {
        (absent * l.nonexist / a, absent * l.miss / a)
    } else {
        (0.0, 0.0)
    };
    LegacyMarginal {
        nonexist,
        miss,
        detections: l.detections.iter().map(|d| d.0).zip(det).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Weight kept on the previous message, in `[0, 1)`.
    pub damping: f64,
}

impl Default for BpConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 200,
            damping: 0.5,
        }
    }
}

const MESSAGE_CAP: f64 = 1e300;

/// Approximate marginals by loopy belief propagation on the bipartite
/// component/detection graph.
pub fn bp_marginals(problem: &AssociationProblem, cfg: &BpConfig) -> Result<MarginalTable> {
    problem.validate()?;
    if !(cfg.tol > 0.0) || !(0.0..1.0).contains(&cfg.damping) {
        return Err(Error::InvalidParameter(format!(
            "BP needs tol > 0 and damping in [0, 1), got {} / {}",
            cfg.tol, cfg.damping
        )));
    }

    // flatten nonzero edges, grouped by component
    let mut edge_m = Vec::new();
    let mut edge_beta = Vec::new();
    let mut comp_start = Vec::with_capacity(problem.legacy.len() + 1);
    for l in &problem.legacy {
        comp_start.push(edge_m.len());
        for &(m, b) in &l.detections {
            if b > 0.0 {
                edge_m.push(m);
                edge_beta.push(b);
            }
        }
    }
    comp_start.push(edge_m.len());
    let n_edges = edge_m.len();
    let mut det_edges: Vec<Vec<usize>> = vec![Vec::new(); problem.num_detections()];
    for (e, &m) in edge_m.iter().enumerate() {
        det_edges[m].push(e);
    }

    // mu: component -> detection, nu: detection -> component
    let mut mu = vec![0.0; n_edges];
    let mut nu = vec![0.0; n_edges];
    let mut scratch = Vec::new();
    let absent: Vec<f64> = problem.legacy.iter().map(|l| l.absent_weight()).collect();

    let update_nu = |mu: &[f64], nu: &mut [f64], scratch: &mut Vec<f64>| {
        for (m, edges) in det_edges.iter().enumerate() {
            scratch.clear();
            scratch.extend(edges.iter().map(|&e| mu[e]));
            let others = exclusive_sums(scratch);
            for (&e, s) in edges.iter().zip(others) {
                nu[e] = 1.0 / (problem.new_weights[m] + s);
            }
        }
    };

    let compute_mu = |j: usize, nu: &[f64], out: &mut Vec<f64>, scratch: &mut Vec<f64>| {
        let (a, b) = (comp_start[j], comp_start[j + 1]);
        scratch.clear();
        scratch.extend((a..b).map(|e| edge_beta[e] * nu[e]));
        let others = exclusive_sums(scratch);
        out.clear();
        for (e, s) in (a..b).zip(others) {
            let den = absent[j] + s;
            let v = if den > 0.0 { edge_beta[e] / den } else { MESSAGE_CAP };
            out.push(v.min(MESSAGE_CAP));
        }
    };

    let mut fresh = Vec::new();
    let mut scratch2 = Vec::new();
    // start from messages computed as if every new component were inactive
    for v in nu.iter_mut() {
        *v = 0.0;
    }
    for j in 0..problem.legacy.len() {
        compute_mu(j, &nu, &mut fresh, &mut scratch2);
        mu[comp_start[j]..comp_start[j + 1]].copy_from_slice(&fresh);
    }
    for _ in 0..cfg.max_iter {
        update_nu(&mu, &mut nu, &mut scratch);
        let mut delta: f64 = 0.0;
        for j in 0..problem.legacy.len() {
            compute_mu(j, &nu, &mut fresh, &mut scratch2);
            for (e, &v) in (comp_start[j]..comp_start[j + 1]).zip(&fresh) {
                let next = cfg.damping * mu[e] + (1.0 - cfg.damping) * v;
                let scale = next.abs().max(mu[e].abs());
                if scale > 0.0 {
                    delta = delta.max((next - mu[e]).abs() / scale);
                }
                mu[e] = next;
            }
        }
        if delta < cfg.tol {
            break;
        }
    }
    update_nu(&mu, &mut nu, &mut scratch);

    let mut legacy = Vec::with_capacity(problem.legacy.len());
    for (j, l) in problem.legacy.iter().enumerate() {
        let mut e = comp_start[j];
        let mut det = Vec::with_capacity(l.detections.len());
        let mut z = absent[j];
        for &(m, b) in &l.detections {
            let v = if b > 0.0 {
                let v = b * nu[e];
                e += 1;
                v
            } else {
                0.0
            };
            z += v;
            det.push((m, v));
        }
        let mut lm = split_absent(l, absent[j], det.iter().map(|d| d.1));
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::NonFiniteWeight(format!("component {j} normalizer {z}")));
        }
        lm.scaled(1.0 / z);
        legacy.push(lm);
    }
    let new_active = det_edges
        .iter()
        .enumerate()
        .map(|(m, edges)| {
            let b = problem.new_weights[m];
            let s: f64 = edges.iter().map(|&e| mu[e]).sum();
            if b + s > 0.0 {
                b / (b + s)
            } else {
                0.0
            }
        })
        .collect();
    Ok(MarginalTable { legacy, new_active })
}

/// For each position, the sum of every other entry, computed with prefix and
/// suffix sums so no subtraction is involved.
fn exclusive_sums(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for i in 0..n {
        out[i] = acc;
        acc += values[i];
    }
    acc = 0.0;
    for i in (0..n).rev() {
        out[i] += acc;
        acc += values[i];
    }
    out
}

/// A component in a missed-cell-only instance: existence `r` and weights
/// `(cell, w)` of its missed-cell hypotheses (already including `r`).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeComponent {
    pub r: f64,
    pub cells: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    /// Per component pmf over `[nonexist, cells...]` with full exclusion.
    pub exclusive: Vec<Vec<f64>>,
    /// Same pmfs when missed cells may be shared.
    pub relaxed: Vec<Vec<f64>>,
    pub max_tv: f64,
}

/// Compares marginals with and without exclusion over missed cells.
pub fn relaxation_error_probe(components: &[ProbeComponent]) -> Result<ProbeReport> {
    let occupied: std::collections::BTreeSet<usize> = components
        .iter()
        .flat_map(|c| c.cells.iter().map(|x| x.0))
        .collect();
    if components.len() > 3 || occupied.len() > 3 {
        return Err(Error::EnumerationTooLarge {
            size: components.len().max(occupied.len()),
            limit: 3,
        });
    }
    for c in components {
        if !(0.0..=1.0).contains(&c.r) || c.cells.iter().any(|x| !(x.1.is_finite() && x.1 >= 0.0)) {
            return Err(Error::InvalidParameter("probe weights out of range".into()));
        }
    }

    let relaxed: Vec<Vec<f64>> = components
        .iter()
        .map(|c| {
            let mut v: Vec<f64> = std::iter::once(1.0 - c.r).chain(c.cells.iter().map(|x| x.1)).collect();
            let z: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= z);
            v
        })
        .collect();

    let mut exclusive: Vec<Vec<f64>> = relaxed.iter().map(|v| vec![0.0; v.len()]).collect();
    let mut choice = vec![0usize; components.len()];
    let mut total = 0.0;
    loop {
        let mut used = std::collections::BTreeSet::new();
        let mut w = 1.0;
        let mut valid = true;
        for (c, &k) in components.iter().zip(&choice) {
            if k == 0 {
                w *= 1.0 - c.r;
            } else {
                let (cell, b) = c.cells[k - 1];
                valid &= used.insert(cell);
                w *= b;
            }
        }
        if valid && w > 0.0 {
            total += w;
            for (j, &k) in choice.iter().enumerate() {
                exclusive[j][k] += w;
            }
        }
        // odometer increment
        let mut j = 0;
        while j < components.len() {
            choice[j] += 1;
            if choice[j] <= components[j].cells.len() {
                break;
            }
            choice[j] = 0;
            j += 1;
        }
        if j == components.len() {
            break;
        }
    }
    if !(total > 0.0) {
        return Err(Error::NonFiniteWeight("probe has no valid hypothesis".into()));
    }
    for v in &mut exclusive {
        v.iter_mut().for_each(|x| *x /= total);
    }
    let max_tv = exclusive
        .iter()
        .zip(&relaxed)
        .map(|(a, b)| 0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    Ok(ProbeReport {
        exclusive,
        relaxed,
        max_tv,
    })
}
