use rand::Rng as _;
use rayon::prelude::*;

use super::ensemble::{Ensemble, Trajectory};
use crate::error::{Error, Result};
use crate::rng;
use crate::wavefield::{Axis, Wavefunction};

/// Cumulative mass of a piecewise-linear density at the nodes of `axis`.
pub(crate) fn linear_cdf(axis: &Axis, rho: &[f64]) -> Vec<f64> {
    let dx = axis.spacing();
    let mut cdf = Vec::with_capacity(rho.len());
    let mut acc = 0.0;
    cdf.push(0.0);
    for w in rho.windows(2) {
        acc += 0.5 * dx * (w[0] + w[1]);
        cdf.push(acc);
    }
    cdf
}

/// Mass below `x` of the piecewise-linear density.
pub(crate) fn linear_cdf_at(axis: &Axis, rho: &[f64], cdf: &[f64], x: f64) -> f64 {
    if x <= axis.min {
        return 0.0;
    }
    if x >= axis.max {
        return cdf[cdf.len() - 1];
    }
    let (i, s) = axis.locate(x);
    let (a, b) = (rho[i], rho[i + 1]);
    cdf[i] + axis.spacing() * (a * s + 0.5 * (b - a) * s * s)
}

/// Inverse of [`linear_cdf_at`] for `u` in `[0, 1)` times the total mass.
pub(crate) fn linear_inverse(axis: &Axis, rho: &[f64], cdf: &[f64], u: f64) -> f64 {
    let total = cdf[cdf.len() - 1];
    let target = u * total;
    let i = cdf.partition_point(|&c| c <= target).saturating_sub(1).min(rho.len() - 2);
    let (a, b) = (rho[i], rho[i + 1]);
    let m = (target - cdf[i]) / axis.spacing();
    // Root of a s + (b − a) s²/2 = m, written to stay stable as b → a.
    let disc = (a * a + 2.0 * (b - a) * m).max(0.0);
    let denom = a + disc.sqrt();
    let s = if denom > 0.0 { (2.0 * m / denom).clamp(0.0, 1.0) } else { 0.5 };
    axis.coord(i) + s * axis.spacing()
}

/// Draws one position from the linear (1D) or bilinear (2D) interpolant of
/// |ψ|²: marginal along x, then the conditional along y.
#[derive(Debug, Clone)]
pub struct DensitySampler {
    x: Axis,
    y: Option<Axis>,
    marginal: Vec<f64>,
    marginal_cdf: Vec<f64>,
    rho: Vec<f64>,
}

impl DensitySampler {
    pub fn new(psi: &Wavefunction) -> Result<Self> {
        let g = psi.grid();
        let rho = psi.density();
        let x = *g.axis(0);
        if g.dim() == 1 {
            let cdf = linear_cdf(&x, &rho);
            if !(cdf[cdf.len() - 1] > 0.0) {
                return Err(Error::config("cannot sample a vanishing density"));
            }
            return Ok(DensitySampler { x, y: None, marginal: rho.clone(), marginal_cdf: cdf, rho });
        }
        let y = *g.axis(1);
        let wy = y.weights();
        let ny = y.points;
        let marginal: Vec<f64> = (0..x.points).map(|i| (0..ny).map(|j| wy[j] * rho[i * ny + j]).sum()).collect();
        let cdf = linear_cdf(&x, &marginal);
        if !(cdf[cdf.len() - 1] > 0.0) {
            return Err(Error::config("cannot sample a vanishing density"));
        }
        Ok(DensitySampler { x, y: Some(y), marginal, marginal_cdf: cdf, rho })
    }

    pub fn sample(&self, rng: &mut rng::Rng) -> [f64; 2] {
        let x = linear_inverse(&self.x, &self.marginal, &self.marginal_cdf, rng.random::<f64>());
        let Some(y_axis) = self.y else {
            return [x, 0.0];
        };
        let ny = y_axis.points;
        let (i, s) = self.x.locate(x);
        let row: Vec<f64> = (0..ny).map(|j| (1.0 - s) * self.rho[i * ny + j] + s * self.rho[(i + 1) * ny + j]).collect();
        let cdf = linear_cdf(&y_axis, &row);
        let y = if cdf[ny - 1] > 0.0 { linear_inverse(&y_axis, &row, &cdf, rng.random::<f64>()) } else { 0.5 * (y_axis.min + y_axis.max) };
        [x, y]
    }
}

/// Draws `count` i.i.d. positions from |ψ0|². Trajectory `ξ` uses stream `ξ`
/// of `seed`, so results do not depend on thread scheduling.
pub fn sample_initial(psi0: &Wavefunction, count: usize, seed: u64) -> Result<Ensemble> {
    if count == 0 {
        return Err(Error::config("ensemble size must be positive"));
    }
    let sampler = DensitySampler::new(psi0)?;
    let trajectories = (0..count as u64)
        .into_par_iter()
        .map(|xi| {
            let mut r = rng::stream(seed, xi);
            Trajectory::start(xi, seed, psi0.time(), sampler.sample(&mut r))
        })
        .collect();
    Ok(Ensemble::new(psi0.grid().dim(), trajectories, "psi0", seed))
}
