use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use pilotwave::observables::OperatorRep;
use pilotwave::trajectories::{advance, velocity_field, Ensemble};
use pilotwave::wavefield::{
    build_hamiltonian, build_hamiltonian_at, eigenstate, evolve_step, evolve_step_between, read_snapshot, Absorber, Axis, Field1, Grid, Hamiltonian,
    HamiltonianSpec, PotentialSpec, Wavefunction,
};
use pilotwave::{Error, Result};

use crate::config::{InitialState, OperatorName, Packet, ScenarioConfig, Shape, TimeConfig};

pub fn grid(cfg: &ScenarioConfig) -> Result<Grid> {
    let g = cfg.grid.as_ref().ok_or_else(|| Error::Configuration("this scenario needs a [grid]".into()))?;
    let axes: Vec<Axis> = g.axes.iter().map(|a| Axis::new(a.min, a.max, a.points)).collect::<Result<_>>()?;
    match axes.as_slice() {
        [x] => Ok(Grid::one_d(*x)),
        [x, y] => Grid::two_d(*x, *y),
        _ => Err(Error::Configuration("grid must have one or two axes".into())),
    }
}

fn shape_fn(shape: Shape, mass: f64) -> Option<Field1> {
    match shape {
        Shape::Free => None,
        Shape::Harmonic { omega, center } => Some(Arc::new(move |q: f64| 0.5 * mass * omega * omega * (q - center).powi(2))),
        Shape::Barrier { height, left, right } => Some(Arc::new(move |q: f64| if (left..=right).contains(&q) { height } else { 0.0 })),
        Shape::Linear { slope } => Some(Arc::new(move |q: f64| slope * q)),
    }
}

/// Largest kinetic energy scale `ħ²(k² + 1/4σ²)/2m` among the packets.
fn kinetic_scale(cfg: &ScenarioConfig) -> Option<f64> {
    let InitialState::Packets(packets) = &cfg.initial else { return None };
    let hbar = cfg.hbar();
    let mut e: f64 = 0.0;
    for p in packets {
        for (k, m) in cfg.masses.iter().enumerate() {
            let q = p.momentum[k].powi(2) + 0.25 / p.width[k].powi(2);
            e = e.max(hbar * hbar * q / (2.0 * m));
        }
    }
    (e > 0.0).then_some(e)
}

pub fn hamiltonian_spec(cfg: &ScenarioConfig) -> HamiltonianSpec {
    let p = &cfg.potential;
    let mut potential = PotentialSpec::free();
    potential.subsystem = shape_fn(p.x, cfg.masses[0]);
    if cfg.dim() == 2 {
        potential.environment = shape_fn(p.y, cfg.masses[1]);
        if p.coupling != 0.0 {
            let k = p.coupling;
            potential = potential.with_coupling(move |x, y| k * x * y);
        }
    }
    if let Some((a, w)) = p.drive {
        potential = potential.with_drive(move |t, x, _| a * x * (w * t).sin());
    }
    let mut spec = HamiltonianSpec::new(cfg.masses.clone(), potential).with_hbar(cfg.hbar());
    if let Some(e) = kinetic_scale(cfg) {
        spec = spec.with_kinetic_scale(e);
    }
    spec
}

fn absorber(cfg: &ScenarioConfig) -> Option<Absorber> {
    cfg.potential.absorber.map(|(width, strength)| Absorber { width, strength })
}

pub fn hamiltonian_at(cfg: &ScenarioConfig, spec: &HamiltonianSpec, grid: &Grid, t: f64) -> Result<Hamiltonian> {
    let h = if t == 0.0 { build_hamiltonian(spec, grid)? } else { build_hamiltonian_at(spec, grid, t)? };
    Ok(match absorber(cfg) {
        Some(a) => h.with_absorber(a),
        None => h,
    })
}

fn packet_value(p: &Packet, x: f64, y: f64, dim: usize) -> Complex64 {
    let q = [x, y];
    let mut re = 0.0;
    let mut im = 0.0;
    for (k, &qk) in q.iter().enumerate().take(dim) {
        let d = qk - p.center[k];
        re -= d * d / (4.0 * p.width[k] * p.width[k]);
        im += p.momentum[k] * qk + p.chirp[k] * d * d;
    }
    if dim == 2 {
        re -= p.cross * (x - p.center[0]) * (y - p.center[1]);
        im += p.cross_phase * x * y;
    }
    p.amplitude * Complex64::new(re, im).exp()
}

/// Normalized initial state from packets, a snapshot file or an eigenstate of `h0`.
pub fn initial_state(cfg: &ScenarioConfig, grid: &Grid, h0: &Hamiltonian, base: &Path) -> Result<Wavefunction> {
    match &cfg.initial {
        InitialState::Packets(packets) => {
            let dim = grid.dim();
            let f = |x: f64, y: f64| packets.iter().map(|p| packet_value(p, x, y, dim)).sum::<Complex64>();
            let psi = if dim == 1 { Wavefunction::from_fn_1d(grid, |x| f(x, 0.0)) } else { Wavefunction::from_fn_2d(grid, f) };
            psi.normalized()
        }
        InitialState::Snapshot(path) => {
            let full = base.join(path);
            let text = std::fs::read_to_string(&full).map_err(|e| Error::Configuration(format!("cannot read snapshot {}: {e}", full.display())))?;
            let (psi, units) = read_snapshot(&text)?;
            if psi.grid() != grid {
                return Err(Error::Configuration(format!("snapshot {} does not match [grid]", full.display())));
            }
            if units != cfg.units {
                return Err(Error::Configuration(format!("snapshot {} was written in {units}, the scenario uses {}", full.display(), cfg.units)));
            }
            psi.normalized()
        }
        InitialState::Eigenstate(n) => Ok(eigenstate(h0, *n)?.0),
        InitialState::Absent => Err(Error::Configuration("this scenario needs an initial state".into())),
    }
}

pub fn operator(name: OperatorName, grid: &Grid, cfg: &ScenarioConfig, h: &Hamiltonian) -> Result<OperatorRep> {
    match name {
        OperatorName::X => OperatorRep::position(grid, 0),
        OperatorName::Y => OperatorRep::position(grid, 1),
        OperatorName::P => OperatorRep::momentum(grid, 0, cfg.hbar()),
        OperatorName::Py => OperatorRep::momentum(grid, 1, cfg.hbar()),
        OperatorName::H => OperatorRep::hamiltonian(h),
        OperatorName::Kinetic => OperatorRep::kinetic(grid, cfg.masses.clone(), cfg.hbar()),
    }
}

/// Everything needed to step one scenario's wavefunction.
pub struct World {
    pub grid: Grid,
    pub spec: HamiltonianSpec,
    pub h0: Hamiltonian,
    pub psi0: Wavefunction,
}

impl World {
    pub fn new(cfg: &ScenarioConfig, base: &Path) -> Result<Self> {
        let grid = grid(cfg)?;
        let spec = hamiltonian_spec(cfg);
        let h0 = hamiltonian_at(cfg, &spec, &grid, 0.0)?;
        let psi0 = initial_state(cfg, &grid, &h0, base)?;
        Ok(World { grid, spec, h0, psi0 })
    }

    /// Steps ψ0 over `time`, advancing `ensemble` alongside when given.
    /// `observer` sees every step, step 0 included.
    pub fn propagate(
        &self,
        cfg: &ScenarioConfig,
        time: &TimeConfig,
        mut ensemble: Option<(&mut Ensemble, usize)>,
        mut observer: impl FnMut(usize, &Wavefunction) -> Result<()>,
    ) -> Result<Wavefunction> {
        let driven = self.spec.potential.is_time_dependent();
        let masses = self.h0.masses().to_vec();
        let hbar = self.h0.hbar();
        let mut psi = self.psi0.clone();
        let mut h_now = self.h0.clone();
        let mut v_now = ensemble.as_ref().map(|_| velocity_field(&psi, &masses, hbar));
        observer(0, &psi)?;
        for n in 1..=time.steps {
            if driven {
                let h_next = hamiltonian_at(cfg, &self.spec, &self.grid, n as f64 * time.dt)?;
                psi = evolve_step_between(&psi, &h_now, &h_next, time.dt)?;
                h_now = h_next;
            } else {
                psi = evolve_step(&psi, &h_now, time.dt)?;
            }
            if let (Some((ens, substeps)), Some(v0)) = (ensemble.as_mut(), v_now.as_ref()) {
                let v1 = velocity_field(&psi, &masses, hbar);
                advance(ens, v0, &v1, *substeps)?;
                v_now = Some(v1);
            }
            observer(n, &psi)?;
        }
        Ok(psi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn packet_matches_the_closed_form() {
        let cfg = parse_config(
            "kind = \"evolve\"\n[grid]\nx = [-8.0, 8.0, 64]\ny = [-8.0, 8.0, 64]\n[[initial]]\ncenter = [1.0, 0.0]\nwidth = [0.7071067811865476, 0.7071067811865476]\nmomentum = [0.0, 0.2]\ncross = 0.4\ncross_phase = 0.3\n[time]\ndt = 0.01\nsteps = 1\n",
        )
        .unwrap();
        let InitialState::Packets(p) = &cfg.initial else { panic!() };
        for (x, y) in [(1.2, 0.3), (-0.5, 2.0), (3.0, -1.0)] {
            let expect = Complex64::new(-(x - 1.0) * (x - 1.0) / 2.0 - y * y / 2.0 - 0.4 * (x - 1.0) * y, 0.3 * x * y + 0.2 * y).exp();
            assert!((packet_value(&p[0], x, y, 2) - expect).norm() < 1e-13 * expect.norm().max(1.0));
        }
    }
}
