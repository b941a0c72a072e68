use rayon::prelude::*;

use super::ensemble::{Ensemble, Trajectory};
use super::fields::{velocity_field, VelocityField};
use crate::error::{Error, Result};
use crate::wavefield::{evolve_step, Grid, Hamiltonian, Wavefunction};

/// Velocity at time fraction `tau ∈ [0, 1]` between two stored fields.
fn blended(v0: &VelocityField, v1: &VelocityField, tau: f64, p: [f64; 2]) -> Option<[f64; 2]> {
    let a = v0.at(p)?;
    let b = v1.at(p)?;
    Some([(1.0 - tau) * a[0] + tau * b[0], (1.0 - tau) * a[1] + tau * b[1]])
}

/// Folds a position back into the domain by reflection at the walls.
/// Returns the number of reflections applied.
fn reflect_into(grid: &Grid, p: &mut [f64; 2]) -> usize {
    let mut count = 0;
    for (k, ax) in grid.axes().iter().enumerate() {
        let x = &mut p[k];
        if *x < ax.min {
            *x = 2.0 * ax.min - *x;
            count += 1;
        } else if *x > ax.max {
            *x = 2.0 * ax.max - *x;
            count += 1;
        }
        *x = x.clamp(ax.min, ax.max);
    }
    count
}

fn rk4(v0: &VelocityField, v1: &VelocityField, start: [f64; 2], dt: f64, substeps: usize) -> Option<([f64; 2], usize)> {
    let h = dt / substeps as f64;
    let mut p = start;
    let mut reflections = 0;
    let shift = |p: [f64; 2], k: [f64; 2], s: f64| [p[0] + s * k[0], p[1] + s * k[1]];
    for n in 0..substeps {
        let t0 = n as f64 / substeps as f64;
        let dtau = 1.0 / substeps as f64;
        let k1 = blended(v0, v1, t0, p)?;
        let k2 = blended(v0, v1, t0 + 0.5 * dtau, shift(p, k1, 0.5 * h))?;
        let k3 = blended(v0, v1, t0 + 0.5 * dtau, shift(p, k2, 0.5 * h))?;
        let k4 = blended(v0, v1, t0 + dtau, shift(p, k3, h))?;
        for a in 0..2 {
            p[a] += h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
        }
        if !(p[0].is_finite() && p[1].is_finite()) {
            return None;
        }
        reflections += reflect_into(&v0.grid, &mut p);
    }
    Some((p, reflections))
}

/// Advances every trajectory by one field interval `[v0.time, v1.time]`
/// with RK4 and appends the new sample.
pub fn advance(ensemble: &mut Ensemble, v0: &VelocityField, v1: &VelocityField, substeps: usize) -> Result<()> {
    let dt = v1.time - v0.time;
    if !(dt > 0.0) || substeps == 0 {
        return Err(Error::config("field interval must be positive with at least one substep"));
    }
    if v0.grid != v1.grid || v0.grid.dim() != ensemble.dim {
        return Err(Error::config("velocity fields do not match the ensemble"));
    }
    if ensemble.dt == 0.0 {
        ensemble.dt = dt;
    } else if ((ensemble.dt - dt) / dt).abs() > 1e-9 {
        return Err(Error::config("field interval differs from the ensemble time step"));
    }
    ensemble.trajectories.par_iter_mut().for_each(|tr| step_one(tr, v0, v1, dt, substeps));
    Ok(())
}

fn step_one(tr: &mut Trajectory, v0: &VelocityField, v1: &VelocityField, dt: f64, substeps: usize) {
    let last = tr.last();
    if tr.failed {
        tr.positions.push(last);
        return;
    }
    match rk4(v0, v1, last, dt, substeps) {
        Some((p, r)) => {
            tr.reflections += r;
            tr.positions.push(p);
        }
        None => {
            tr.failed = true;
            tr.positions.push(last);
        }
    }
}

/// Integrates over a stored field history (`fields[n]` at `t0 + n dt`).
pub fn integrate(mut ensemble: Ensemble, fields: &[VelocityField], substeps: usize) -> Result<Ensemble> {
    for w in fields.windows(2) {
        advance(&mut ensemble, &w[0], &w[1], substeps)?;
    }
    Ok(ensemble)
}

/// Propagates `psi0` under a static Hamiltonian and integrates the ensemble
/// alongside, streaming velocity fields. `observer` sees every stored
/// wavefunction (step 0 included) before the next step is taken.
pub fn evolve_with_trajectories(
    psi0: &Wavefunction,
    h: &Hamiltonian,
    dt: f64,
    steps: usize,
    mut ensemble: Ensemble,
    substeps: usize,
    mut observer: impl FnMut(usize, &Wavefunction),
) -> Result<(Wavefunction, Ensemble)> {
    let mut psi = psi0.clone();
    let mut v_now = velocity_field(&psi, h.masses(), h.hbar());
    observer(0, &psi);
    for n in 1..=steps {
        psi = evolve_step(&psi, h, dt)?;
        let v_next = velocity_field(&psi, h.masses(), h.hbar());
        advance(&mut ensemble, &v_now, &v_next, substeps)?;
        observer(n, &psi);
        v_now = v_next;
    }
    Ok((psi, ensemble))
}
