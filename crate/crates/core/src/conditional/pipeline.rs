use num_complex::Complex64;
use rayon::prelude::*;

use super::correlation::{correlation_potential, CorrelationPotential};
use super::diagnostic::EwfSample;
use super::slice::{evolve_cwf, quotient_error, slice_cwf, ConditionalWavefunction, SliceDrive};
use crate::error::{Error, Result};
use crate::trajectories::{advance, velocity_field, Ensemble, Trajectory, VelocityField};
use crate::wavefield::{build_hamiltonian_at, evolve_step_between, HamiltonianSpec, Wavefunction};

/// Which driving term the conditional equation receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationMode {
    /// The three-channel 𝔚 alone.
    Channels,
    /// 𝔚 plus the convective term of the moving conditioning position.
    Convective,
}

/// Settings of one conditional-wavefunction run.
#[derive(Debug, Clone, PartialEq)]
pub struct CwfSettings {
    pub dt: f64,
    pub steps: usize,
    pub mode: CorrelationMode,
    /// Keep a `(t, ψ^ξ, 𝔚)` snapshot every this many steps (0: none).
    pub record_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CwfStep {
    pub time: f64,
    pub y: f64,
    /// Quotient error of the evolved against the sliced CWF.
    pub error: f64,
    /// Norm of the evolved CWF.
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CwfSnapshot {
    pub time: f64,
    pub amplitudes: Vec<Complex64>,
    pub correlation: Vec<Complex64>,
}

/// Per-trajectory outcome.
#[derive(Debug, Clone)]
pub struct CwfTrace {
    pub label: u64,
    pub start: [f64; 2],
    pub steps: Vec<CwfStep>,
    pub snapshots: Vec<CwfSnapshot>,
    pub cwf: ConditionalWavefunction,
    pub correlation: CorrelationPotential,
}

impl CwfTrace {
    pub fn max_error(&self) -> f64 {
        self.steps.iter().map(|s| s.error).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct CwfRun {
    pub traces: Vec<CwfTrace>,
    pub final_state: Wavefunction,
    pub ensemble: Ensemble,
}

impl CwfRun {
    /// Largest quotient error over all trajectories and times.
    pub fn max_error(&self) -> f64 {
        self.traces.iter().map(|t| t.max_error()).fold(0.0, f64::max)
    }
}

struct Live {
    cwf: ConditionalWavefunction,
    drive: SliceDrive,
    correlation: CorrelationPotential,
    trace: CwfTrace,
}

fn drive_for(
    spec: &HamiltonianSpec,
    psi: &Wavefunction,
    v: &VelocityField,
    p: [f64; 2],
    mode: CorrelationMode,
) -> Result<(SliceDrive, CorrelationPotential)> {
    let hbar = spec.hbar;
    let w = correlation_potential(psi, p[1], spec.masses[1], hbar)?;
    let correlation = match mode {
        CorrelationMode::Channels => w.values(),
        CorrelationMode::Convective => {
            let y_dot = v.at(p).ok_or_else(|| Error::eval("non-finite velocity on the conditioning trajectory"))?[1];
            w.along(y_dot)
        }
    };
    let t = psi.time();
    let potential = psi.grid().axis(0).coords().iter().map(|&x| spec.potential.value(t, x, p[1])).collect();
    Ok((SliceDrive { potential, correlation, y: p[1] }, w))
}

/// Solves the full 2D problem, integrates the conditioning trajectories
/// started at `starts` in the joint flow, and drives each conditional
/// wavefunction with the sliced correlation potential. Every step compares
/// the evolved CWF with the directly sliced one.
pub fn run_cwf_pipeline(psi0: &Wavefunction, spec: &HamiltonianSpec, starts: &[[f64; 2]], settings: &CwfSettings) -> Result<CwfRun> {
    let grid = psi0.grid().clone();
    if grid.dim() != 2 || spec.masses.len() != 2 {
        return Err(Error::config("the conditional pipeline needs a 2D state and two masses"));
    }
    if starts.is_empty() {
        return Err(Error::config("at least one conditioning trajectory is required"));
    }
    let dt = settings.dt;
    let mut h_now = build_hamiltonian_at(spec, &grid, psi0.time())?;
    let mut psi = psi0.clone();
    let mut v_now = velocity_field(&psi, &spec.masses, spec.hbar);
    let trajectories = starts.iter().enumerate().map(|(k, p)| Trajectory::start(k as u64, 0, psi.time(), *p)).collect();
    let mut ensemble = Ensemble::new(2, trajectories, "cwf", 0);

    let mut live: Vec<Live> = starts
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let cwf = slice_cwf(&psi, p[1], k as u64)?;
            let (drive, w) = drive_for(spec, &psi, &v_now, *p, settings.mode)?;
            let mut snapshots = Vec::new();
            if settings.record_every > 0 {
                snapshots.push(CwfSnapshot { time: psi.time(), amplitudes: cwf.amplitudes.clone(), correlation: drive.correlation.clone() });
            }
            let trace = CwfTrace { label: k as u64, start: *p, steps: Vec::new(), snapshots, cwf: cwf.clone(), correlation: w.clone() };
            Ok(Live { cwf, drive, correlation: w, trace })
        })
        .collect::<Result<_>>()?;

    for n in 1..=settings.steps {
        let t_next = psi.time() + dt;
        let h_next = if spec.potential.is_time_dependent() { build_hamiltonian_at(spec, &grid, t_next)? } else { h_now.clone() };
        let psi_next = evolve_step_between(&psi, &h_now, &h_next, dt)?;
        let v_next = velocity_field(&psi_next, &spec.masses, spec.hbar);
        advance(&mut ensemble, &v_now, &v_next, 1)?;
        let positions: Vec<[f64; 2]> = ensemble.trajectories.iter().map(|t| t.last()).collect();
        live.par_iter_mut().zip(positions.par_iter()).try_for_each(|(l, p)| -> Result<()> {
            let (drive, w) = drive_for(spec, &psi_next, &v_next, *p, settings.mode)?;
            l.cwf = evolve_cwf(&l.cwf, spec.masses[0], spec.hbar, &l.drive, &drive, dt)?;
            let sliced = slice_cwf(&psi_next, p[1], l.cwf.label)?;
            let error = quotient_error(&sliced.amplitudes, &l.cwf.amplitudes, &l.cwf.grid);
            let norm = l.cwf.norm();
            l.trace.steps.push(CwfStep { time: psi_next.time(), y: p[1], error, norm });
            if settings.record_every > 0 && n % settings.record_every == 0 {
                l.trace.snapshots.push(CwfSnapshot {
                    time: psi_next.time(),
                    amplitudes: l.cwf.amplitudes.clone(),
                    correlation: drive.correlation.clone(),
                });
            }
            l.drive = drive;
            l.correlation = w;
            Ok(())
        })?;
        psi = psi_next;
        v_now = v_next;
        h_now = h_next;
    }
    let traces = live.into_iter().map(|l| CwfTrace { cwf: l.cwf, correlation: l.correlation, ..l.trace }).collect();
    Ok(CwfRun { traces, final_state: psi, ensemble })
}

/// Builds diagnostic inputs for the slices of `psi` at each `y`.
pub fn ewf_samples(psi: &Wavefunction, spec: &HamiltonianSpec, ys: &[f64]) -> Result<Vec<EwfSample>> {
    ys.iter()
        .map(|&y| {
            let correlation = correlation_potential(psi, y, spec.masses[1], spec.hbar)?;
            let slice = slice_cwf(psi, y, 0)?;
            let xs = psi.grid().axis(0).coords();
            let coupling = xs.iter().map(|&x| spec.potential.u_xy(x, y)).collect();
            let density = slice.amplitudes.iter().map(|a| a.norm_sqr()).collect();
            Ok(EwfSample { correlation, coupling, density })
        })
        .collect()
}
