//! Rayleigh (Swerling 1) cell intensities, thresholding, and the per-cell
//! detection and false-alarm statistics.
//!
//! A cell without an object has Rayleigh scale `sigma_n`; a cell holding an
//! object of intensity `gamma` has scale `sqrt(gamma + sigma_n^2)`. Above a
//! threshold `eta` both densities are truncated and renormalized by their
//! tail masses `p_d` and `p_fa`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{cell_of, CellFrame, Detection, GridGeometry, ObjectState, ThresholdedFrame};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeModel {
    sigma_n_sq: f64,
}

impl Default for AmplitudeModel {
    fn default() -> Self {
        Self { sigma_n_sq: 1.0 }
    }
}

/// Rayleigh density with squared scale `scale_sq`.
#[inline]
pub fn rayleigh_pdf(x: f64, scale_sq: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    x / scale_sq * (-x * x / (2.0 * scale_sq)).exp()
}

#[inline]
pub fn ln_rayleigh_pdf(x: f64, scale_sq: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    x.ln() - scale_sq.ln() - x * x / (2.0 * scale_sq)
}

impl AmplitudeModel {
    pub fn new(sigma_n_sq: f64) -> Result<Self> {
        if !(sigma_n_sq.is_finite() && sigma_n_sq > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise power must be positive, got {sigma_n_sq}"
            )));
        }
        Ok(Self { sigma_n_sq })
    }

    pub fn sigma_n_sq(&self) -> f64 {
        self.sigma_n_sq
    }

    /// Squared Rayleigh scale of a cell holding total object intensity `gamma`.
    #[inline]
    pub fn object_scale_sq(&self, gamma: f64) -> f64 {
        gamma + self.sigma_n_sq
    }

    /// False-alarm probability `P(c > eta)` of a clutter cell.
    #[inline]
    pub fn p_fa(&self, eta: f64) -> f64 {
        (-eta * eta / (2.0 * self.sigma_n_sq)).exp()
    }

    /// Detection probability of an object with intensity `gamma`.
    #[inline]
    pub fn p_d_gamma(&self, gamma: f64, eta: f64) -> f64 {
        (-eta * eta / (2.0 * self.object_scale_sq(gamma))).exp()
    }

    pub fn p_d(&self, state: &ObjectState, eta: f64) -> f64 {
        self.p_d_gamma(state.gamma, eta)
    }

    /// `1 - p_d`, accurate for small thresholds.
    #[inline]
    pub fn miss_probability(&self, gamma: f64, eta: f64) -> f64 {
        -(-eta * eta / (2.0 * self.object_scale_sq(gamma))).exp_m1()
    }

    /// `(1 - p_d) / (1 - p_fa)`: likelihood ratio of a missed cell holding the
    /// object versus holding only clutter. At `eta = 0` this is the limit
    /// `sigma_n^2 / (gamma + sigma_n^2)`.
    #[inline]
    pub fn miss_ratio(&self, gamma: f64, eta: f64) -> f64 {
        if eta == 0.0 {
            return self.sigma_n_sq / self.object_scale_sq(gamma);
        }
        let num = (-eta * eta / (2.0 * self.object_scale_sq(gamma))).exp_m1();
        let den = (-eta * eta / (2.0 * self.sigma_n_sq)).exp_m1();
        num / den
    }

    /// Untruncated object-cell density `f_1(z | gamma)`, log domain.
    #[inline]
    pub fn ln_f1(&self, z: f64, gamma: f64) -> f64 {
        ln_rayleigh_pdf(z, self.object_scale_sq(gamma))
    }

    /// Untruncated clutter-cell density `f_0(z)`, log domain.
    #[inline]
    pub fn ln_f0(&self, z: f64) -> f64 {
        ln_rayleigh_pdf(z, self.sigma_n_sq)
    }

    /// `ln [p_d f_{1,eta}(z|x) / (p_fa f_{0,eta}(z))] = ln f_1(z|x) - ln f_0(z)`.
    #[inline]
    pub fn ln_detection_ratio(&self, z: f64, gamma: f64) -> f64 {
        let s = self.object_scale_sq(gamma);
        (self.sigma_n_sq / s).ln() + 0.5 * z * z * (1.0 / self.sigma_n_sq - 1.0 / s)
    }

    /// Truncated object density `f_{1,eta}(z|x) = f_1(z|x) / p_d(x)`.
    pub fn f1_eta(&self, z: f64, state: &ObjectState, eta: f64) -> Result<f64> {
        self.ln_f1_eta(z, state.gamma, eta).map(f64::exp)
    }

    /// Truncated clutter density `f_{0,eta}(z) = f_0(z) / p_fa`.
    pub fn f0_eta(&self, z: f64, eta: f64) -> Result<f64> {
        self.ln_f0_eta(z, eta).map(f64::exp)
    }

    pub fn ln_f1_eta(&self, z: f64, gamma: f64, eta: f64) -> Result<f64> {
        check_above(z, eta)?;
        let s = self.object_scale_sq(gamma);
        Ok(z.ln() - s.ln() - (z * z - eta * eta) / (2.0 * s))
    }

    pub fn ln_f0_eta(&self, z: f64, eta: f64) -> Result<f64> {
        check_above(z, eta)?;
        let s = self.sigma_n_sq;
        Ok(z.ln() - s.ln() - (z * z - eta * eta) / (2.0 * s))
    }

    /// Draws one Rayleigh sample with squared scale `scale_sq`.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(scale_sq: f64, rng: &mut R) -> f64 {
        // 1 - U lies in (0, 1]
        let u: f64 = 1.0 - rng.random::<f64>();
        (-2.0 * scale_sq * u.ln()).sqrt()
    }
}

fn check_above(z: f64, eta: f64) -> Result<()> {
    if z > eta {
        Ok(())
    } else {
        Err(Error::BelowThreshold { z, eta })
    }
}

/// Draws one full scan of cell intensities. Objects sharing a cell add their
/// intensities; objects outside the grid contribute nothing.
pub fn synthesize_frame<R: Rng + ?Sized>(
    truth: &[ObjectState],
    geometry: &GridGeometry,
    model: &AmplitudeModel,
    rng: &mut R,
) -> CellFrame {
    let mut scale_sq = vec![model.sigma_n_sq(); geometry.num_cells()];
    for x in truth {
        if let Some(m) = cell_of(x, geometry) {
            scale_sq[m] += x.gamma.max(0.0);
        }
    }
    let intensities = scale_sq
        .iter()
        .map(|&s| AmplitudeModel::sample(s, rng))
        .collect();
    CellFrame::new(*geometry, intensities).expect("Rayleigh draws are finite and nonnegative")
}

/// Keeps every cell whose intensity strictly exceeds `eta`.
pub fn threshold_frame(frame: &CellFrame, eta: f64) -> Result<ThresholdedFrame> {
    let detections = frame
        .intensities()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > eta)
        .map(|(cell, &amplitude)| Detection { cell, amplitude })
        .collect();
    ThresholdedFrame::new(*frame.geometry(), eta, detections)
}
