use super::local::Estimate;
use crate::error::{Error, Result};
use crate::trajectories::{Ensemble, Trajectory};
use crate::wavefield::{Grid, Wavefunction};

/// Box region Γ: one closed interval per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpec {
    pub intervals: Vec<(f64, f64)>,
}

impl RegionSpec {
    pub fn new(intervals: Vec<(f64, f64)>, grid: &Grid) -> Result<Self> {
        if intervals.len() != grid.dim() {
            return Err(Error::config("region needs one interval per grid axis"));
        }
        for ((a, b), ax) in intervals.iter().zip(grid.axes()) {
            if !(a < b) || *b < ax.min || *a > ax.max {
                return Err(Error::config(format!("region interval [{a}, {b}] is empty on the grid")));
            }
        }
        Ok(RegionSpec { intervals })
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.intervals.iter().enumerate().all(|(k, (a, b))| p[k] >= *a && p[k] <= *b)
    }

    /// Probability of Γ under the interpolated density of `psi`.
    pub fn probability(&self, psi: &Wavefunction) -> f64 {
        let g = psi.grid();
        let rho = psi.density();
        if g.dim() == 1 {
            let ax = g.axis(0);
            let cdf = crate::trajectories::linear_cdf(ax, &rho);
            let (a, b) = self.intervals[0];
            return crate::trajectories::linear_cdf_at(ax, &rho, &cdf, b) - crate::trajectories::linear_cdf_at(ax, &rho, &cdf, a);
        }
        let w = g.weights();
        (0..g.len()).filter(|&k| self.contains(g.point(k))).map(|k| w[k] * rho[k]).sum()
    }
}

/// Time spent in Γ: trapezoid rule on the indicator at the stored samples.
pub fn dwell_time(trajectory: &Trajectory, dt: f64, region: &RegionSpec) -> f64 {
    let ind: Vec<f64> = trajectory.positions.iter().map(|p| if region.contains(*p) { 1.0 } else { 0.0 }).collect();
    trapezoid(&ind, dt)
}

fn trapezoid(v: &[f64], dt: f64) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    dt * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]))
}

/// Both estimators of the expected dwell time.
#[derive(Debug, Clone, PartialEq)]
pub struct DwellReport {
    /// Trajectory average of per-trajectory dwell times.
    pub trajectory: Estimate,
    /// `∫dt ∫_Γ |ψ|²` on the same time samples.
    pub density: f64,
    /// `|trajectory − density| / density`.
    pub relative_difference: f64,
    /// Occupancy of Γ at the final time relative to its peak.
    pub final_occupancy: f64,
    pub warnings: Vec<String>,
}

/// `occupancy[n]` is the probability of Γ at stored sample `n`.
pub fn expected_dwell(ensemble: &Ensemble, occupancy: &[f64], region: &RegionSpec) -> Result<DwellReport> {
    if occupancy.len() != ensemble.steps() {
        return Err(Error::config("occupancy series does not match the ensemble samples"));
    }
    let dt = ensemble.dt;
    let mut samples = Vec::with_capacity(ensemble.len());
    let mut flagged = 0;
    for tr in &ensemble.trajectories {
        if tr.failed {
            flagged += 1;
        } else {
            samples.push(dwell_time(tr, dt, region));
        }
    }
    let trajectory = Estimate::from_samples(&samples, flagged)?;
    let density = trapezoid(occupancy, dt);
    let peak = occupancy.iter().copied().fold(0.0, f64::max);
    let final_occupancy = if peak > 0.0 { occupancy[occupancy.len() - 1] / peak } else { 0.0 };
    let mut warnings = Vec::new();
    if final_occupancy > 0.01 {
        let msg = format!("region still holds {:.2}% of its peak occupancy at the horizon", 100.0 * final_occupancy);
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let relative_difference = if density > 0.0 { (trajectory.value - density).abs() / density } else { f64::INFINITY };
    Ok(DwellReport { trajectory, density, relative_difference, final_occupancy, warnings })
}
