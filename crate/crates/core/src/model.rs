//! Shared domain types: single-object states, the cell grid, measurement
//! frames, particle sets and the Poisson multi-Bernoulli belief.
//!
//! Grid convention: cells are half-open squares `[low, low + side)` on both
//! axes. Column index runs along axis 1 (`p1`), row index along axis 2
//! (`p2`), and cells are linearized row-major, `m = row * n_cols + col`.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// Kinematic 2D position/velocity plus the scalar object intensity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectState {
    pub p1: f64,
    pub p2: f64,
    pub v1: f64,
    pub v2: f64,
    pub gamma: f64,
}

impl ObjectState {
    pub fn new(p1: f64, p2: f64, v1: f64, v2: f64, gamma: f64) -> Self {
        Self {
            p1,
            p2,
            v1,
            v2,
            gamma,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.p1, self.p2, self.v1, self.v2, self.gamma]
            .iter()
            .all(|v| v.is_finite())
            && self.gamma >= 0.0
    }

    pub fn position(&self) -> [f64; 2] {
        [self.p1, self.p2]
    }
}

/// Square-cell grid covering the region of interest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    n_rows: usize,
    n_cols: usize,
    cell_side: f64,
    origin: (f64, f64),
}

impl GridGeometry {
    pub fn new(n_rows: usize, n_cols: usize, cell_side: f64, origin: (f64, f64)) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidGeometry(format!(
                "grid must have at least one cell, got {n_rows}x{n_cols}"
            )));
        }
        if !(cell_side.is_finite() && cell_side > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "cell side must be positive, got {cell_side}"
            )));
        }
        if !(origin.0.is_finite() && origin.1.is_finite()) {
            return Err(Error::InvalidGeometry("origin must be finite".into()));
        }
        Ok(Self {
            n_rows,
            n_cols,
            cell_side,
            origin,
        })
    }

    /// 32x32 grid of 1 m cells anchored at the origin.
    pub fn standard() -> Self {
        Self::new(32, 32, 1.0, (0.0, 0.0)).expect("valid standard grid")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn cell_side(&self) -> f64 {
        self.cell_side
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn num_cells(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_side * self.cell_side
    }

    pub fn width(&self) -> f64 {
        self.n_cols as f64 * self.cell_side
    }

    pub fn height(&self) -> f64 {
        self.n_rows as f64 * self.cell_side
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn index(&self, row: usize, col: usize) -> Option<usize> {
        (row < self.n_rows && col < self.n_cols).then(|| row * self.n_cols + col)
    }

    pub fn row_col(&self, m: usize) -> Result<(usize, usize)> {
        if m >= self.num_cells() {
            return Err(Error::CellOutOfRange {
                index: m,
                cells: self.num_cells(),
            });
        }
        Ok((m / self.n_cols, m % self.n_cols))
    }

    /// Cell containing the point, or `None` outside the grid.
    #[inline]
    pub fn locate(&self, p1: f64, p2: f64) -> Option<usize> {
        let u = (p1 - self.origin.0) / self.cell_side;
        let v = (p2 - self.origin.1) / self.cell_side;
        // NaN fails both comparisons
        if !(u >= 0.0 && v >= 0.0) {
            return None;
        }
        let col = u.floor();
        let row = v.floor();
        if col >= self.n_cols as f64 || row >= self.n_rows as f64 {
            return None;
        }
        Some(row as usize * self.n_cols + col as usize)
    }

    pub fn contains(&self, p1: f64, p2: f64) -> bool {
        self.locate(p1, p2).is_some()
    }

    /// Geometric center `(p1, p2)` of cell `m`.
    pub fn cell_center(&self, m: usize) -> Result<(f64, f64)> {
        let (row, col) = self.row_col(m)?;
        Ok((
            self.origin.0 + (col as f64 + 0.5) * self.cell_side,
            self.origin.1 + (row as f64 + 0.5) * self.cell_side,
        ))
    }
}

/// Cell influenced by an object in `state`, or `None` if it lies outside the grid.
pub fn cell_of(state: &ObjectState, geometry: &GridGeometry) -> Option<usize> {
    geometry.locate(state.p1, state.p2)
}

pub fn cell_center(m: usize, geometry: &GridGeometry) -> Result<(f64, f64)> {
    geometry.cell_center(m)
}

/// Unthresholded cell intensities of one scan.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFrame {
    geometry: GridGeometry,
    intensities: Vec<f64>,
}

impl CellFrame {
    pub fn new(geometry: GridGeometry, intensities: Vec<f64>) -> Result<Self> {
        if intensities.len() != geometry.num_cells() {
            return Err(Error::InvalidFrame(format!(
                "expected {} intensities, got {}",
                geometry.num_cells(),
                intensities.len()
            )));
        }
        if let Some(bad) = intensities.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::InvalidFrame(format!(
                "cell intensity must be finite and nonnegative, got {bad}"
            )));
        }
        Ok(Self {
            geometry,
            intensities,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }
}

/// A cell whose intensity exceeded the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub cell: usize,
    pub amplitude: f64,
}

/// Sparse thresholded scan. Cells not listed are missed (`z = eta`).
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdedFrame {
    geometry: GridGeometry,
    eta: f64,
    detections: Vec<Detection>,
}

impl ThresholdedFrame {
    pub fn new(geometry: GridGeometry, eta: f64, detections: Vec<Detection>) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::InvalidFrame(format!(
                "threshold must be finite and nonnegative, got {eta}"
            )));
        }
        let mut seen = vec![false; geometry.num_cells()];
        for d in &detections {
            if d.cell >= seen.len() {
                return Err(Error::CellOutOfRange {
                    index: d.cell,
                    cells: seen.len(),
                });
            }
            if seen[d.cell] {
                return Err(Error::InvalidFrame(format!("duplicate detection in cell {}", d.cell)));
            }
            seen[d.cell] = true;
            if !(d.amplitude.is_finite() && d.amplitude > eta) {
                return Err(Error::BelowThreshold {
                    z: d.amplitude,
                    eta,
                });
            }
        }
        Ok(Self {
            geometry,
            eta,
            detections,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }

    pub fn num_detections(&self) -> usize {
        self.detections.len()
    }

    /// Per-cell index into `detections()`, `None` for missed cells.
    pub fn detection_lookup(&self) -> Vec<Option<u32>> {
        let mut lookup = vec![None; self.geometry.num_cells()];
        for (i, d) in self.detections.iter().enumerate() {
            lookup[d.cell] = Some(i as u32);
        }
        lookup
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub state: ObjectState,
    pub weight: f64,
}

/// Weighted particle approximation of a spatial pdf (normalized) or of a
/// PHD (total weight = expected number of objects).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParticleSet {
    particles: Vec<Particle>,
}

impl ParticleSet {
    pub fn new(particles: Vec<Particle>) -> Self {
        Self { particles }
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            particles: Vec::with_capacity(n),
        }
    }

    /// `n` copies of one state sharing `mass` equally.
    pub fn point_mass(state: ObjectState, n: usize, mass: f64) -> Self {
        let w = mass / n as f64;
        Self {
            particles: vec![Particle { state, weight: w }; n],
        }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn particles_mut(&mut self) -> &mut [Particle] {
        &mut self.particles
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Particle> {
        self.particles.iter()
    }

    pub fn push(&mut self, p: Particle) {
        self.particles.push(p);
    }

    pub fn into_vec(self) -> Vec<Particle> {
        self.particles
    }

    pub fn total_weight(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    pub fn weights_valid(&self) -> bool {
        self.particles
            .iter()
            .all(|p| p.weight.is_finite() && p.weight >= 0.0)
    }

    pub fn scale(&mut self, factor: f64) {
        for p in &mut self.particles {
            p.weight *= factor;
        }
    }

    /// Rescales to unit total weight and returns the previous total.
    /// A set with zero total weight is left unchanged.
    pub fn normalize(&mut self) -> f64 {
        let total = self.total_weight();
        if total > 0.0 {
            self.scale(1.0 / total);
        }
        total
    }

    /// Drops zero-weight particles.
    pub fn prune_zero(&mut self) {
        self.particles.retain(|p| p.weight > 0.0);
    }

    pub fn append(&mut self, other: &mut ParticleSet) {
        self.particles.append(&mut other.particles);
    }

    /// Weighted mean state. `None` for an empty or massless set.
    pub fn mean_state(&self) -> Option<ObjectState> {
        let total = self.total_weight();
        if !(total > 0.0) {
            return None;
        }
        let mut m = ObjectState::default();
        for p in &self.particles {
            let w = p.weight / total;
            m.p1 += w * p.state.p1;
            m.p2 += w * p.state.p2;
            m.v1 += w * p.state.v1;
            m.v2 += w * p.state.v2;
            m.gamma += w * p.state.gamma;
        }
        Some(m)
    }

    /// Systematic resampling to `n` equally weighted particles that carry the
    /// same total mass as the input.
    pub fn systematic_resample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> ParticleSet {
        let total = self.total_weight();
        if n == 0 || !(total > 0.0) {
            return ParticleSet::default();
        }
        let step = total / n as f64;
        let w_out = total / n as f64;
        let mut out = Vec::with_capacity(n);
        let mut target = rng.random::<f64>() * step;
        let mut cum = 0.0;
        let mut idx = 0;
        let last = self.particles.len() - 1;
        for _ in 0..n {
            while idx < last && cum + self.particles[idx].weight <= target {
                cum += self.particles[idx].weight;
                idx += 1;
            }
            // skip trailing zero-weight particles at the end of the walk
            let mut pick = idx;
            while self.particles[pick].weight == 0.0 && pick > 0 {
                pick -= 1;
            }
            out.push(Particle {
                state: self.particles[pick].state,
                weight: w_out,
            });
            target += step;
        }
        ParticleSet { particles: out }
    }
}

impl FromIterator<Particle> for ParticleSet {
    fn from_iter<I: IntoIterator<Item = Particle>>(iter: I) -> Self {
        Self {
            particles: iter.into_iter().collect(),
        }
    }
}

/// Stable identifier of a Bernoulli component: the step and detected cell that
/// created it. Used for reporting only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrackLabel {
    pub step: u32,
    pub cell: u32,
}

impl fmt::Display for TrackLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.step, self.cell)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliComponent {
    pub r: f64,
    pub pdf: ParticleSet,
    pub label: TrackLabel,
}

impl BernoulliComponent {
    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.r)
            && self.pdf.weights_valid()
            && (self.r == 0.0 || (self.pdf.total_weight() - 1.0).abs() <= 1e-9)
    }
}

/// Poisson part (undetected objects) plus the multi-Bernoulli part.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PmbBelief {
    pub phd: ParticleSet,
    pub bernoullis: Vec<BernoulliComponent>,
}

impl PmbBelief {
    pub fn expected_cardinality(&self) -> f64 {
        self.phd.total_weight() + self.bernoullis.iter().map(|b| b.r).sum::<f64>()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.phd.weights_valid() {
            return Err(Error::InvariantViolation("PHD has invalid weights".into()));
        }
        let mut labels: Vec<TrackLabel> = self.bernoullis.iter().map(|b| b.label).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvariantViolation("duplicate track labels".into()));
        }
        for b in &self.bernoullis {
            if !b.is_valid() {
                return Err(Error::InvariantViolation(format!(
                    "component {} invalid (r = {}, pdf mass = {})",
                    b.label,
                    b.r,
                    b.pdf.total_weight()
                )));
            }
        }
        Ok(())
    }
}

/// Detection converted to amplitude plus position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMeasurement {
    pub z: f64,
    pub z1: f64,
    pub z2: f64,
}
