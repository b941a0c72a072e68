use super::local::{Estimate, LocalExpectationField};
use crate::error::{Error, Result};
use crate::trajectories::{Ensemble, Trajectory};

/// `𝒲 = ℋ^ψ(x^ξ(t2), t2) − ℋ^ψ(x^ξ(t1), t1)` from the Hamiltonian local
/// expectation fields at the two stored samples.
pub fn bohmian_work(trajectory: &Trajectory, h1: &LocalExpectationField, step1: usize, h2: &LocalExpectationField, step2: usize) -> Result<f64> {
    let e1 = h1.at(trajectory.position(step1));
    let e2 = h2.at(trajectory.position(step2));
    match (e1, e2) {
        (Some(a), Some(b)) if !trajectory.failed => Ok(b - a),
        _ => Err(Error::eval(format!("trajectory {} has a flagged work endpoint", trajectory.label))),
    }
}

/// Ensemble average of the trajectory works between two samples.
pub fn ensemble_work(
    ensemble: &Ensemble,
    h1: &LocalExpectationField,
    step1: usize,
    h2: &LocalExpectationField,
    step2: usize,
) -> Result<(Vec<Option<f64>>, Estimate)> {
    let per: Vec<Option<f64>> = ensemble.trajectories.iter().map(|t| bohmian_work(t, h1, step1, h2, step2).ok()).collect();
    let samples: Vec<f64> = per.iter().flatten().copied().collect();
    let flagged = per.len() - samples.len();
    Ok((per, Estimate::from_samples(&samples, flagged)?))
}
