use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::wavefield::{Axis, Grid};

/// Pointer grid nodes per initial width σ_M.
pub const POINTS_PER_WIDTH: f64 = 12.0;
/// Pointer grid margin beyond the shifted envelopes, in widths.
pub const MARGIN_WIDTHS: f64 = 10.0;
const MAX_POINTER_POINTS: usize = 40_001;

/// Von Neumann pointer coupled through `μ̄(t) p̂_M ⊗ B̂` over `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointerConfig {
    pub center: f64,
    /// Standard deviation σ_M of the initial pointer density.
    pub width: f64,
    /// Integrated strength μ = ∫μ̄ dt.
    pub strength: f64,
    pub window: f64,
    /// `None` is an infinitely massive pointer (no spreading while coupled).
    pub mass: Option<f64>,
    /// Time steps across the window when the pointer has a finite mass.
    pub steps: usize,
    pub hbar: f64,
    /// Required `μ·gap / σ_M` for a strong measurement.
    pub min_separation: f64,
    /// Largest Bhattacharyya overlap between neighbouring envelopes.
    pub max_overlap: f64,
}

impl PointerConfig {
    pub fn new(center: f64, width: f64, strength: f64, window: f64) -> Result<Self> {
        let cfg = PointerConfig { center, width, strength, window, mass: None, steps: 200, hbar: 1.0, min_separation: 5.0, max_overlap: 1e-4 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_mass(mut self, mass: f64, steps: usize) -> Result<Self> {
        self.mass = Some(mass);
        self.steps = steps;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0) {
            return Err(Error::config("pointer width must be positive"));
        }
        if !(self.window > 0.0) {
            return Err(Error::config("coupling window must be positive"));
        }
        if !self.strength.is_finite() || !self.center.is_finite() {
            return Err(Error::config("pointer centre and strength must be finite"));
        }
        if let Some(m) = self.mass {
            if !(m > 0.0) || self.steps == 0 {
                return Err(Error::config("finite pointer mass needs a positive mass and at least one step"));
            }
        }
        if !(self.hbar > 0.0) {
            return Err(Error::config("hbar must be positive"));
        }
        Ok(())
    }

    /// Initial pointer amplitude, normalized on the real line.
    pub fn amplitude(&self, z: f64) -> Complex64 {
        let s = self.width;
        let norm = (2.0 * std::f64::consts::PI * s * s).powf(-0.25);
        Complex64::new(norm * (-(z - self.center).powi(2) / (4.0 * s * s)).exp(), 0.0)
    }

    /// Density width at the end of the window (free spreading of a finite mass).
    pub fn final_width(&self) -> f64 {
        match self.mass {
            None => self.width,
            Some(m) => {
                let tau = self.hbar * self.window / (2.0 * m * self.width * self.width);
                self.width * (1.0 + tau * tau).sqrt()
            }
        }
    }

    /// Envelope centre for eigenvalue `b`.
    pub fn shifted_center(&self, b: f64) -> f64 {
        self.center + self.strength * b
    }

    /// Bhattacharyya coefficient of two pointer envelopes whose eigenvalues
    /// differ by `gap`.
    pub fn overlap(&self, gap: f64) -> f64 {
        let d = self.strength * gap;
        let s = self.final_width();
        (-(d * d) / (8.0 * s * s)).exp()
    }

    /// Grid covering every envelope for eigenvalues in `[b_min, b_max]`.
    pub fn grid_for(&self, b_min: f64, b_max: f64) -> Result<Grid> {
        let s = self.final_width();
        let (a, b) = (self.shifted_center(b_min), self.shifted_center(b_max));
        let lo = a.min(b) - MARGIN_WIDTHS * s;
        let hi = a.max(b) + MARGIN_WIDTHS * s;
        let points = ((hi - lo) / (self.width / POINTS_PER_WIDTH)).ceil() as usize + 1;
        if points > MAX_POINTER_POINTS {
            return Err(Error::Resource(format!(
                "pointer grid would need {points} nodes (limit {MAX_POINTER_POINTS}); reduce the strength or widen the pointer"
            )));
        }
        Ok(Grid::one_d(Axis::new(lo, hi, points.max(crate::wavefield::MIN_POINTS))?))
    }
}
