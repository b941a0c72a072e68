use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::collision::{kraus_from_collision, CollisionSpec};
use crate::error::{Error, Result};
use crate::linalg::projector;
use crate::measurement::sample_branch;
use crate::rng;

/// Ancilla outcomes `w(t)` of one record.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRecord {
    pub seed: u64,
    pub run: u64,
    pub outcomes: Vec<usize>,
    /// Time of each collision.
    pub times: Vec<f64>,
}

/// Normalized system state of one record at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumTrajectoryState {
    pub state: DVector<Complex64>,
    pub time: f64,
}

/// One unravelled record: the state after every collision (initial state
/// first) and the noise realization that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumTrajectory {
    pub history: Vec<QuantumTrajectoryState>,
    pub noise: NoiseRecord,
}

/// Density-matrix time series.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySeries {
    pub times: Vec<f64>,
    pub states: Vec<DMatrix<Complex64>>,
}

/// Largest deviation of a normalized state from unit norm tolerated in a record.
pub const STATE_NORM_TOLERANCE: f64 = 1e-10;

/// `n_records` quantum trajectories over `horizon`: drift for one interval,
/// then a collision read out as a generalized measurement, repeated.
/// Record `r` draws from stream `r` of `seed`.
pub fn unravel(spec: &CollisionSpec, psi0: &DVector<Complex64>, horizon: f64, n_records: usize, seed: u64) -> Result<Vec<QuantumTrajectory>> {
    let steps = spec.steps_for(horizon)?;
    if psi0.len() != spec.system_dim() {
        return Err(Error::config("initial state does not match the system dimension"));
    }
    if n_records == 0 {
        return Err(Error::config("unravelling needs at least one record"));
    }
    let norm = psi0.norm();
    if !(norm > 0.0) {
        return Err(Error::config("initial state is zero"));
    }
    let psi0 = psi0 / Complex64::new(norm, 0.0);
    let kraus = kraus_from_collision(spec)?;
    let drift = spec.drift_propagator();
    (0..n_records as u64)
        .into_par_iter()
        .map(|run| {
            let mut r = rng::stream(seed, run);
            let mut psi = psi0.clone();
            let mut history = Vec::with_capacity(steps + 1);
            history.push(QuantumTrajectoryState { state: psi.clone(), time: 0.0 });
            let mut noise = NoiseRecord { seed, run, outcomes: Vec::with_capacity(steps), times: Vec::with_capacity(steps) };
            for n in 1..=steps {
                let t = n as f64 * spec.interval;
                psi = &drift * psi;
                let (m, post, _) = sample_branch(&psi, &kraus, &mut r);
                let drift_norm = (post.norm() - 1.0).abs();
                if drift_norm > STATE_NORM_TOLERANCE {
                    return Err(Error::eval(format!("record {run} lost normalization ({drift_norm:.2e}) at step {n}")));
                }
                psi = post;
                noise.outcomes.push(m);
                noise.times.push(t);
                history.push(QuantumTrajectoryState { state: psi.clone(), time: t });
            }
            Ok(QuantumTrajectory { history, noise })
        })
        .collect()
}

/// Mean of `|ψ_w(t)⟩⟨ψ_w(t)|` over records at every stored time.
pub fn reduced_density(records: &[QuantumTrajectory]) -> Result<DensitySeries> {
    let first = records.first().ok_or_else(|| Error::config("no records to average"))?;
    let steps = first.history.len();
    if records.iter().any(|r| r.history.len() != steps) {
        return Err(Error::config("records have different lengths"));
    }
    let d = first.history[0].state.len();
    let scale = Complex64::new(1.0 / records.len() as f64, 0.0);
    let states = (0..steps)
        .into_par_iter()
        .map(|n| records.iter().fold(DMatrix::zeros(d, d), |acc, r| acc + projector(&r.history[n].state)) * scale)
        .collect();
    let times = first.history.iter().map(|s| s.time).collect();
    Ok(DensitySeries { times, states })
}
