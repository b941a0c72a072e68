//! Total (particle + displacement) current through a two-terminal 1D device
//! `[0, L]` with grounded contacts.

use crate::error::{Error, Result};
use crate::trajectories::Ensemble;

/// Device and surface description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Device {
    pub length: f64,
    pub permittivity: f64,
    pub charge: f64,
}

impl Device {
    pub fn new(length: f64, permittivity: f64, charge: f64) -> Result<Self> {
        if !(length > 0.0) || !(permittivity > 0.0) {
            return Err(Error::config("device length and permittivity must be positive"));
        }
        Ok(Device { length, permittivity, charge })
    }

    fn clip(&self, x: f64) -> f64 {
        x.clamp(0.0, self.length)
    }
}

/// Current per step interval, per trajectory and ensemble-averaged.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentSeries {
    /// Interval midpoints.
    pub times: Vec<f64>,
    pub per_trajectory: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
}

impl CurrentSeries {
    fn from_rows(ensemble: &Ensemble, rows: Vec<Vec<f64>>) -> Self {
        let steps = ensemble.steps().saturating_sub(1);
        let times = (0..steps).map(|n| ensemble.time(n) + 0.5 * ensemble.dt).collect();
        let m = rows.len() as f64;
        let mut mean = vec![0.0; steps];
        let mut std_error = vec![0.0; steps];
        for n in 0..steps {
            let mu = rows.iter().map(|r| r[n]).sum::<f64>() / m;
            let var = if rows.len() > 1 { rows.iter().map(|r| (r[n] - mu).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
            mean[n] = mu;
            std_error[n] = (var / m).sqrt();
        }
        CurrentSeries { times, per_trajectory: rows, mean, std_error }
    }

    /// `∫ I dt` of trajectory `k`.
    pub fn transferred_charge(&self, k: usize, dt: f64) -> f64 {
        self.per_trajectory[k].iter().sum::<f64>() * dt
    }
}

fn check_surface(device: &Device, surface: f64, ensemble: &Ensemble) -> Result<()> {
    if !(0.0..=device.length).contains(&surface) {
        return Err(Error::config(format!("surface {surface} lies outside the device [0, {}]", device.length)));
    }
    if ensemble.dim != 1 {
        return Err(Error::config("current reduction requires a 1D ensemble"));
    }
    if !(ensemble.dt > 0.0) || ensemble.steps() < 2 {
        return Err(Error::config("current needs an integrated ensemble"));
    }
    Ok(())
}

/// Ramo–Shockley current `(e/L)·v` while the electron is inside `[0, L]`.
///
/// The velocity over each step is the displacement of the clipped position
/// divided by `dt`, so the time integral of a full crossing is exactly `e`.
/// In 1D the result does not depend on `surface`, which is only validated.
pub fn total_current(ensemble: &Ensemble, surface: f64, device: &Device) -> Result<CurrentSeries> {
    check_surface(device, surface, ensemble)?;
    let dt = ensemble.dt;
    let rows = ensemble
        .trajectories
        .iter()
        .map(|tr| tr.positions.windows(2).map(|w| device.charge / device.length * (device.clip(w[1][0]) - device.clip(w[0][0])) / dt).collect())
        .collect();
    Ok(CurrentSeries::from_rows(ensemble, rows))
}

/// Field at `surface` from point charges at `positions` between grounded
/// contacts, by Gauss's law: `E(x) = E₀ + (1/ε)∫₀ˣ ρ` with `E₀` fixed by
/// `∫₀ᴸ E = 0`.
fn gauss_field(device: &Device, positions: &[f64], surface: f64) -> f64 {
    let (l, eps, q) = (device.length, device.permittivity, device.charge);
    positions
        .iter()
        .map(|&x| {
            let x = device.clip(x);
            let e0 = -q * (l - x) / (eps * l);
            if surface > x {
                e0 + q / eps
            } else {
                e0
            }
        })
        .sum()
}

/// Direct-definition current at `surface`: displacement term `ε ΔE/Δt`
/// plus the signed particle flux through the surface in each step.
pub fn gauss_current(ensemble: &Ensemble, surface: f64, device: &Device) -> Result<CurrentSeries> {
    check_surface(device, surface, ensemble)?;
    let dt = ensemble.dt;
    let rows = ensemble
        .trajectories
        .iter()
        .map(|tr| {
            tr.positions
                .windows(2)
                .map(|w| {
                    let (a, b) = (device.clip(w[0][0]), device.clip(w[1][0]));
                    let displacement = device.permittivity * (gauss_field(device, &[b], surface) - gauss_field(device, &[a], surface)) / dt;
                    let crossing = match (a < surface, b < surface) {
                        (true, false) => 1.0,
                        (false, true) => -1.0,
                        _ => 0.0,
                    };
                    displacement + crossing * device.charge / dt
                })
                .collect()
        })
        .collect();
    Ok(CurrentSeries::from_rows(ensemble, rows))
}
