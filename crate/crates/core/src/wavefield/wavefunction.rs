use num_complex::Complex64;

use super::grid::Grid;
use crate::error::{Error, Result};

/// Tolerance on the trapezoid norm for a state tagged as normalized.
pub const NORM_TOLERANCE: f64 = 1e-8;

/// Complex amplitudes on a [`Grid`] at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    grid: Grid,
    amplitudes: Vec<Complex64>,
    time: f64,
}

impl Wavefunction {
    /// Wraps raw amplitudes. Boundary values are kept as given.
    pub fn from_amplitudes(grid: Grid, amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::config(format!("{} amplitudes for a grid of {} nodes", amplitudes.len(), grid.len())));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::config("non-finite amplitude"));
        }
        Ok(Wavefunction { grid, amplitudes, time })
    }

    /// Samples `f` on a 1D grid; wall nodes are set to zero.
    pub fn from_fn_1d(grid: &Grid, f: impl Fn(f64) -> Complex64) -> Self {
        Self::from_fn(grid, |p| f(p[0]))
    }

    /// Samples `f` on a 2D grid; wall nodes are set to zero.
    pub fn from_fn_2d(grid: &Grid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        Self::from_fn(grid, |p| f(p[0], p[1]))
    }

    fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let amplitudes = (0..grid.len()).map(|k| if grid.is_boundary(k) { Complex64::new(0.0, 0.0) } else { f(grid.point(k)) }).collect();
        Wavefunction { grid: grid.clone(), amplitudes, time: 0.0 }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Trapezoid quadrature of |ψ|².
    pub fn norm_sqr(&self) -> f64 {
        self.grid.weights().iter().zip(&self.amplitudes).map(|(w, a)| w * a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::config("cannot normalize a zero or non-finite state"));
        }
        for a in &mut self.amplitudes {
            *a /= n;
        }
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// Trapezoid inner product ⟨self|other⟩.
    pub fn inner(&self, other: &Wavefunction) -> Complex64 {
        inner(&self.grid.weights(), &self.amplitudes, &other.amplitudes)
    }

    /// Trapezoid quadrature of `f(point) |ψ|²`.
    pub fn expect_fn(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        let w = self.grid.weights();
        (0..self.grid.len()).map(|k| w[k] * self.amplitudes[k].norm_sqr() * f(self.grid.point(k))).sum()
    }

    pub fn mean(&self, axis: usize) -> f64 {
        self.expect_fn(|p| p[axis]) / self.norm_sqr()
    }

    pub fn variance(&self, axis: usize) -> f64 {
        let m = self.mean(axis);
        self.expect_fn(|p| (p[axis] - m).powi(2)) / self.norm_sqr()
    }
}

/// Weighted inner product Σ w conj(a) b.
pub(crate) fn inner(w: &[f64], a: &[Complex64], b: &[Complex64]) -> Complex64 {
    w.iter().zip(a.iter().zip(b)).map(|(w, (a, b))| a.conj() * b * *w).sum()
}
