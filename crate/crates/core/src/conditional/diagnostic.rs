use super::correlation::CorrelationPotential;
use crate::error::{Error, Result};

/// Thresholds of the effective-wavefunction test, relative to an energy
/// scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EwfThresholds {
    pub correlation: f64,
    pub dispersion: f64,
    /// Slice support: nodes with |ψ^ξ|² above this fraction of the slice
    /// maximum.
    pub support: f64,
}

impl Default for EwfThresholds {
    fn default() -> Self {
        EwfThresholds { correlation: 1e-3, dispersion: 1e-3, support: 1e-6 }
    }
}

/// Inputs for one conditioning trajectory.
#[derive(Debug, Clone)]
pub struct EwfSample {
    pub correlation: CorrelationPotential,
    /// `U_xy(x, y^ξ)` on the subsystem grid.
    pub coupling: Vec<f64>,
    /// Slice density `|ψ^ξ(x)|²`.
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EwfReport {
    /// Largest x-variation of 𝔚 over slice supports, divided by the energy
    /// scale. An x-independent 𝔚 only changes the global factor of ψ^ξ.
    pub correlation_metric: f64,
    /// Largest cross-trajectory standard deviation of the x-dependent part
    /// of `U_xy(x, y^ξ)`, divided by the energy scale.
    pub dispersion_metric: f64,
    pub energy_scale: f64,
    pub ewf: bool,
}

fn support(density: &[f64], frac: f64) -> Vec<bool> {
    let max = density.iter().copied().fold(0.0, f64::max);
    density.iter().map(|&d| max > 0.0 && d > frac * max).collect()
}

/// x-variation of `values` about their density-weighted mean on the support.
fn variation(values: &[f64], density: &[f64], mask: &[bool]) -> f64 {
    let (mut s, mut w) = (0.0, 0.0);
    for i in 0..values.len() {
        if mask[i] {
            s += density[i] * values[i];
            w += density[i];
        }
    }
    if w == 0.0 {
        return 0.0;
    }
    let mean = s / w;
    (0..values.len()).filter(|&i| mask[i]).map(|i| (values[i] - mean).abs()).fold(0.0, f64::max)
}

/// Decides whether the conditional wavefunctions behave as closed-system
/// wavefunctions: small x-dependent correlation potential and a coupling
/// potential that does not depend on which trajectory conditions it.
pub fn ewf_diagnostic(samples: &[EwfSample], energy_scale: f64, thresholds: EwfThresholds) -> Result<EwfReport> {
    if samples.len() < 2 {
        return Err(Error::config("EWF diagnostic needs at least two trajectories"));
    }
    if !(energy_scale > 0.0) {
        return Err(Error::config("energy scale must be positive"));
    }
    let n = samples[0].density.len();
    if samples.iter().any(|s| s.density.len() != n || s.coupling.len() != n || s.correlation.kinetic.len() != n) {
        return Err(Error::config("EWF samples must share the subsystem grid"));
    }
    let mut corr = 0.0f64;
    let mut union = vec![false; n];
    for s in samples {
        let mask = support(&s.density, thresholds.support);
        let w = s.correlation.values();
        let re: Vec<f64> = w.iter().map(|v| v.re).collect();
        let im: Vec<f64> = w.iter().map(|v| v.im).collect();
        let var = variation(&re, &s.density, &mask).hypot(variation(&im, &s.density, &mask));
        corr = corr.max(var);
        for (u, m) in union.iter_mut().zip(&mask) {
            *u |= *m;
        }
    }
    // Per-trajectory coupling with its own mean over the common support
    // removed; what remains is the x-dependent part.
    let centred: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let k = union.iter().filter(|m| **m).count().max(1) as f64;
            let mean = (0..n).filter(|&i| union[i]).map(|i| s.coupling[i]).sum::<f64>() / k;
            s.coupling.iter().map(|u| u - mean).collect()
        })
        .collect();
    let m = samples.len() as f64;
    let mut disp = 0.0f64;
    for i in (0..n).filter(|&i| union[i]) {
        let mean = centred.iter().map(|c| c[i]).sum::<f64>() / m;
        let var = centred.iter().map(|c| (c[i] - mean).powi(2)).sum::<f64>() / m;
        disp = disp.max(var.sqrt());
    }
    let correlation_metric = corr / energy_scale;
    let dispersion_metric = disp / energy_scale;
    Ok(EwfReport {
        correlation_metric,
        dispersion_metric,
        energy_scale,
        ewf: correlation_metric <= thresholds.correlation && dispersion_metric <= thresholds.dispersion,
    })
}
