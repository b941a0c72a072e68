//! Discrete levels ⊗ continuous pointer.
//!
//! Propagates `iħ ∂Ψ/∂t = (H_S ⊗ I + μ̄(t) B ⊗ p̂ + I ⊗ H_M) Ψ` with the
//! Crank–Nicolson contract, where `p̂ = −iħ ∂_z` is a central difference on
//! the pointer grid and `H_M = p̂²/2M` (omitted for an infinitely massive
//! pointer).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::grid::Grid;
use super::propagate::{bicgstab, SOLVER_MAX_ITERATIONS, SOLVER_TOLERANCE};
use crate::error::{Error, Result};
use crate::linalg::hermiticity_defect;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Amplitudes Ψ(level, z), stored level-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    levels: usize,
    pointer: Grid,
    amplitudes: Vec<Complex64>,
    time: f64,
}

impl HybridState {
    pub fn new(levels: usize, pointer: Grid, amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        if levels < 2 {
            return Err(Error::config("hybrid state needs at least two levels"));
        }
        if pointer.dim() != 1 {
            return Err(Error::config("pointer grid must be one-dimensional"));
        }
        if amplitudes.len() != levels * pointer.len() {
            return Err(Error::config("hybrid amplitude count does not match levels x pointer nodes"));
        }
        Ok(HybridState { levels, pointer, amplitudes, time })
    }

    /// Product state `|system⟩ ⊗ φ(z)`; pointer wall nodes are zeroed.
    pub fn product(system: &DVector<Complex64>, pointer: &Grid, phi: impl Fn(f64) -> Complex64) -> Result<Self> {
        let nz = pointer.len();
        let axis = pointer.axis(0);
        let mut amps = vec![ZERO; system.len() * nz];
        for (l, c) in system.iter().enumerate() {
            for iz in 1..nz - 1 {
                amps[l * nz + iz] = c * phi(axis.coord(iz));
            }
        }
        HybridState::new(system.len(), pointer.clone(), amps, 0.0)
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn pointer(&self) -> &Grid {
        &self.pointer
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Ψ(level, z_i).
    pub fn amplitude(&self, level: usize, iz: usize) -> Complex64 {
        self.amplitudes[level * self.pointer.len() + iz]
    }

    pub fn norm_sqr(&self) -> f64 {
        let w = self.pointer.weights();
        let nz = w.len();
        self.amplitudes.iter().enumerate().map(|(k, a)| w[k % nz] * a.norm_sqr()).sum()
    }

    /// Pointer marginal Σ_l |Ψ(l, z)|² at every pointer node.
    pub fn pointer_marginal(&self) -> Vec<f64> {
        let nz = self.pointer.len();
        (0..nz).map(|iz| (0..self.levels).map(|l| self.amplitude(l, iz).norm_sqr()).sum()).collect()
    }

    /// Amplitudes re-expressed in the basis whose vectors are the columns of
    /// `basis`: Φ(k, z) = Σ_l conj(basis[l, k]) Ψ(l, z).
    pub fn in_basis(&self, basis: &DMatrix<Complex64>) -> Vec<Complex64> {
        let nz = self.pointer.len();
        let mut out = vec![ZERO; self.amplitudes.len()];
        for k in 0..self.levels {
            for l in 0..self.levels {
                let c = basis[(l, k)].conj();
                if c == ZERO {
                    continue;
                }
                for iz in 0..nz {
                    out[k * nz + iz] += c * self.amplitudes[l * nz + iz];
                }
            }
        }
        out
    }

    /// Level vector at pointer position `z` (linear interpolation; raw, not
    /// normalized).
    pub fn slice_at(&self, z: f64) -> Result<DVector<Complex64>> {
        let axis = self.pointer.axis(0);
        if !axis.contains(z) {
            return Err(Error::range(format!("pointer position {z} outside [{}, {}]", axis.min, axis.max)));
        }
        let (i, s) = axis.locate(z);
        Ok(DVector::from_fn(self.levels, |l, _| self.amplitude(l, i) * (1.0 - s) + self.amplitude(l, i + 1) * s))
    }

    /// Reduced density matrix of the levels, tracing out the pointer.
    pub fn reduced_levels(&self) -> DMatrix<Complex64> {
        let w = self.pointer.weights();
        let nz = w.len();
        DMatrix::from_fn(self.levels, self.levels, |a, b| (0..nz).map(|iz| self.amplitude(a, iz) * self.amplitude(b, iz).conj() * w[iz]).sum())
    }
}

/// Operators of the hybrid Hamiltonian.
#[derive(Debug, Clone)]
pub struct HybridHamiltonian {
    pub system: DMatrix<Complex64>,
    pub coupling: DMatrix<Complex64>,
    /// `None` for an infinitely massive (non-spreading) pointer.
    pub pointer_mass: Option<f64>,
    pub hbar: f64,
}

impl HybridHamiltonian {
    pub fn new(system: DMatrix<Complex64>, coupling: DMatrix<Complex64>, pointer_mass: Option<f64>, hbar: f64) -> Result<Self> {
        let l = system.nrows();
        if system.ncols() != l || coupling.nrows() != l || coupling.ncols() != l {
            return Err(Error::config("system and coupling operators must be square and of equal size"));
        }
        if hermiticity_defect(&coupling) > 1e-10 || hermiticity_defect(&system) > 1e-10 {
            return Err(Error::config("system and coupling operators must be Hermitian"));
        }
        if let Some(m) = pointer_mass {
            if !(m > 0.0) {
                return Err(Error::config("pointer mass must be positive"));
            }
        }
        Ok(HybridHamiltonian { system, coupling, pointer_mass, hbar })
    }

    /// `out = H(μ̄) ψ` with pointer walls treated as zero.
    pub fn apply(&self, state: &HybridState, strength: f64, psi: &[Complex64], out: &mut [Complex64]) {
        let levels = state.levels;
        let nz = state.pointer.len();
        let dz = state.pointer.axis(0).spacing();
        let at = |l: usize, iz: usize| if iz == 0 || iz + 1 == nz { ZERO } else { psi[l * nz + iz] };
        let p_coeff = Complex64::new(0.0, -self.hbar / (2.0 * dz));
        let kin = self.pointer_mass.map(|m| self.hbar * self.hbar / (2.0 * m * dz * dz));
        for l in 0..levels {
            for iz in 0..nz {
                let k = l * nz + iz;
                if iz == 0 || iz + 1 == nz {
                    out[k] = ZERO;
                    continue;
                }
                let mut v = ZERO;
                for l2 in 0..levels {
                    let hs = self.system[(l, l2)];
                    if hs != ZERO {
                        v += hs * at(l2, iz);
                    }
                    let b = self.coupling[(l, l2)];
                    if b != ZERO && strength != 0.0 {
                        let dpsi = at(l2, iz + 1) - at(l2, iz - 1);
                        v += b * strength * p_coeff * dpsi;
                    }
                }
                if let Some(c) = kin {
                    v -= c * (at(l, iz - 1) + at(l, iz + 1) - 2.0 * at(l, iz));
                }
                out[k] = v;
            }
        }
    }
}

/// One Crank–Nicolson step of the hybrid system; `strength_now` and
/// `strength_next` are μ̄ at the start and end of the step.
pub fn evolve_hybrid(state: &HybridState, h: &HybridHamiltonian, strength_now: f64, strength_next: f64, dt: f64) -> Result<HybridState> {
    if !(dt > 0.0) {
        return Err(Error::config("time step must be positive"));
    }
    if h.system.nrows() != state.levels {
        return Err(Error::config("Hamiltonian level count does not match the state"));
    }
    let n = state.amplitudes.len();
    let nz = state.pointer.len();
    let half = Complex64::new(0.0, 0.5 * dt / h.hbar);
    let mut hpsi = vec![ZERO; n];
    h.apply(state, strength_now, &state.amplitudes, &mut hpsi);
    let rhs: Vec<Complex64> = (0..n)
        .map(|k| {
            let iz = k % nz;
            if iz == 0 || iz + 1 == nz {
                ZERO
            } else {
                state.amplitudes[k] - half * hpsi[k]
            }
        })
        .collect();
    let kin = h.pointer_mass.map_or(0.0, |m| h.hbar * h.hbar / (m * state.pointer.axis(0).spacing().powi(2)));
    let diag: Vec<Complex64> = (0..n)
        .map(|k| {
            let iz = k % nz;
            if iz == 0 || iz + 1 == nz {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0) + half * (h.system[(k / nz, k / nz)] + kin)
            }
        })
        .collect();
    let apply = |x: &[Complex64], out: &mut [Complex64]| {
        h.apply(state, strength_next, x, out);
        for k in 0..x.len() {
            let iz = k % nz;
            out[k] = if iz == 0 || iz + 1 == nz { x[k] } else { x[k] + half * out[k] };
        }
    };
    let mut x = state.amplitudes.clone();
    bicgstab(apply, &diag, &rhs, &mut x, SOLVER_TOLERANCE, SOLVER_MAX_ITERATIONS)?;
    Ok(HybridState { levels: state.levels, pointer: state.pointer.clone(), amplitudes: x, time: state.time + dt })
}

/// Runs a coupling window `[0, T]` with constant μ̄ = μ/T in `steps` steps.
pub fn couple_impulse(state: &HybridState, h: &HybridHamiltonian, mu: f64, window: f64, steps: usize) -> Result<HybridState> {
    if steps == 0 || !(window > 0.0) {
        return Err(Error::config("coupling window needs positive duration and at least one step"));
    }
    let dt = window / steps as f64;
    let strength = mu / window;
    let mut s = state.clone();
    for _ in 0..steps {
        s = evolve_hybrid(&s, h, strength, strength, dt)?;
    }
    Ok(s)
}
