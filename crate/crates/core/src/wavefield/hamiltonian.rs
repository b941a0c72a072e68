use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::grid::Grid;
use crate::error::{Error, Result};

/// Unit system tag carried into every file output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnitSystem {
    /// ħ = m = 1.
    Natural,
    /// SI values supplied by the caller.
    Si,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Units {
    pub system: UnitSystem,
    pub hbar: f64,
}

impl Default for Units {
    fn default() -> Self {
        Units { system: UnitSystem::Natural, hbar: 1.0 }
    }
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.system {
            UnitSystem::Natural => "natural",
            UnitSystem::Si => "si",
        };
        write!(f, "{name} hbar={:e}", self.hbar)
    }
}

pub type Field1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Field2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type Drive = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Potential energy split as `U = U_x(x) + U_y(y) + U_xy(x, y)`, plus an
/// optional explicit time-dependent term `δU(t, x, y)`.
///
/// On a 1D grid only `subsystem` and `drive` (with `y = 0`) are admissible.
#[derive(Clone, Default)]
pub struct PotentialSpec {
    pub subsystem: Option<Field1>,
    pub environment: Option<Field1>,
    pub coupling: Option<Field2>,
    pub drive: Option<Drive>,
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("subsystem", &self.subsystem.is_some())
            .field("environment", &self.environment.is_some())
            .field("coupling", &self.coupling.is_some())
            .field("drive", &self.drive.is_some())
            .finish()
    }
}

impl PotentialSpec {
    pub fn free() -> Self {
        Self::default()
    }

    pub fn subsystem(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        PotentialSpec { subsystem: Some(Arc::new(f)), ..Self::default() }
    }

    pub fn with_environment(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.environment = Some(Arc::new(f));
        self
    }

    pub fn with_coupling(mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.coupling = Some(Arc::new(f));
        self
    }

    pub fn with_drive(mut self, f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.drive = Some(Arc::new(f));
        self
    }

    pub fn is_time_dependent(&self) -> bool {
        self.drive.is_some()
    }

    pub fn u_x(&self, x: f64) -> f64 {
        self.subsystem.as_ref().map_or(0.0, |f| f(x))
    }

    pub fn u_y(&self, y: f64) -> f64 {
        self.environment.as_ref().map_or(0.0, |f| f(y))
    }

    pub fn u_xy(&self, x: f64, y: f64) -> f64 {
        self.coupling.as_ref().map_or(0.0, |f| f(x, y))
    }

    /// Full potential at a point.
    pub fn value(&self, t: f64, x: f64, y: f64) -> f64 {
        self.u_x(x) + self.u_y(y) + self.u_xy(x, y) + self.drive.as_ref().map_or(0.0, |f| f(t, x, y))
    }

    pub fn sample(&self, grid: &Grid, t: f64) -> Result<Vec<f64>> {
        if grid.dim() == 1 && (self.environment.is_some() || self.coupling.is_some()) {
            return Err(Error::config("environment/coupling potential terms need a 2D grid"));
        }
        Ok((0..grid.len())
            .map(|k| {
                let [x, y] = grid.point(k);
                self.value(t, x, y)
            })
            .collect())
    }
}

#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    /// One mass per grid axis.
    pub masses: Vec<f64>,
    pub potential: PotentialSpec,
    pub hbar: f64,
    /// Expected kinetic energy, used only for the resolution diagnostic.
    pub kinetic_scale: Option<f64>,
}

impl HamiltonianSpec {
    pub fn new(masses: Vec<f64>, potential: PotentialSpec) -> Self {
        HamiltonianSpec { masses, potential, hbar: 1.0, kinetic_scale: None }
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn with_kinetic_scale(mut self, e: f64) -> Self {
        self.kinetic_scale = Some(e);
        self
    }
}

/// Quadratic complex absorbing ramp `-i W(d)` inside `width` of each wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Absorber {
    pub width: f64,
    pub strength: f64,
}

impl Absorber {
    fn value(&self, distance_to_wall: f64) -> f64 {
        if distance_to_wall >= self.width {
            0.0
        } else {
            let u = 1.0 - distance_to_wall / self.width;
            self.strength * u * u
        }
    }
}

/// Discretized Hamiltonian: 3-point second differences per axis plus a
/// diagonal (possibly complex) potential. Wall nodes map to zero.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    grid: Grid,
    masses: Vec<f64>,
    hbar: f64,
    potential: Vec<Complex64>,
    warnings: Vec<String>,
}

/// Builds the discretized Hamiltonian at `t = 0`.
pub fn build_hamiltonian(spec: &HamiltonianSpec, grid: &Grid) -> Result<Hamiltonian> {
    build_hamiltonian_at(spec, grid, 0.0)
}

/// Builds the discretized Hamiltonian with the potential sampled at `t`.
pub fn build_hamiltonian_at(spec: &HamiltonianSpec, grid: &Grid, t: f64) -> Result<Hamiltonian> {
    let values = spec.potential.sample(grid, t)?;
    let mut h = Hamiltonian::from_real_potential(grid.clone(), spec.masses.clone(), spec.hbar, values)?;
    if let Some(e) = spec.kinetic_scale {
        h.warnings.extend(resolution_warnings(grid, &spec.masses, spec.hbar, e));
        for w in &h.warnings {
            log::warn!("{w}");
        }
    }
    Ok(h)
}

/// Points per de Broglie wavelength at kinetic energy `e`, per axis; warns
/// below 8.
pub fn resolution_warnings(grid: &Grid, masses: &[f64], hbar: f64, e: f64) -> Vec<String> {
    let mut out = Vec::new();
    for (k, (axis, &m)) in grid.axes().iter().zip(masses).enumerate() {
        if e <= 0.0 {
            continue;
        }
        let wavelength = 2.0 * std::f64::consts::PI * hbar / (2.0 * m * e).sqrt();
        let ppw = wavelength / axis.spacing();
        if ppw < 8.0 {
            out.push(format!("axis {k}: {ppw:.2} points per wavelength at kinetic energy {e:e} (< 8)"));
        }
    }
    out
}

impl Hamiltonian {
    pub fn from_real_potential(grid: Grid, masses: Vec<f64>, hbar: f64, potential: Vec<f64>) -> Result<Self> {
        Self::from_potential(grid, masses, hbar, potential.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    /// Hamiltonian with an arbitrary complex diagonal potential.
    pub fn from_potential(grid: Grid, masses: Vec<f64>, hbar: f64, potential: Vec<Complex64>) -> Result<Self> {
        if masses.len() != grid.dim() {
            return Err(Error::config(format!("{} masses for a {}D grid", masses.len(), grid.dim())));
        }
        if masses.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::config("masses must be positive"));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::config("hbar must be positive"));
        }
        if potential.len() != grid.len() {
            return Err(Error::config(format!("potential has {} values for a grid of {} nodes", potential.len(), grid.len())));
        }
        Ok(Hamiltonian { grid, masses, hbar, potential, warnings: Vec::new() })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn potential(&self) -> &[Complex64] {
        &self.potential
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn is_real(&self) -> bool {
        self.potential.iter().all(|v| v.im == 0.0)
    }

    /// Same kinetic part with a different potential.
    pub fn with_potential(&self, potential: Vec<Complex64>) -> Result<Self> {
        Self::from_potential(self.grid.clone(), self.masses.clone(), self.hbar, potential)
    }

    /// Adds a complex absorbing ramp along every axis. The result is not
    /// Hermitian; norm loss is the absorbed probability.
    pub fn with_absorber(&self, absorber: Absorber) -> Self {
        let mut h = self.clone();
        for (k, v) in h.potential.iter_mut().enumerate() {
            let p = self.grid.point(k);
            let mut w = 0.0;
            for (a, axis) in self.grid.axes().iter().enumerate() {
                let d = (p[a] - axis.min).min(axis.max - p[a]);
                w += absorber.value(d);
            }
            *v -= Complex64::new(0.0, w);
        }
        h
    }

    /// Stencil coefficient ħ²/(2 m Δ²) per axis.
    pub(crate) fn hopping(&self) -> [f64; 2] {
        let mut c = [0.0; 2];
        for (k, axis) in self.grid.axes().iter().enumerate() {
            let d = axis.spacing();
            c[k] = self.hbar * self.hbar / (2.0 * self.masses[k] * d * d);
        }
        c
    }

    /// Diagonal entry at node `idx`.
    pub(crate) fn diagonal(&self, idx: usize) -> Complex64 {
        let c = self.hopping();
        self.potential[idx] + 2.0 * (c[0] + c[1])
    }

    /// `H ψ`, with ψ taken as zero on wall nodes.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        self.apply_into(psi, &mut out);
        out
    }

    pub fn apply_into(&self, psi: &[Complex64], out: &mut [Complex64]) {
        apply_stencil(&self.grid, self.hopping(), Some(&self.potential), psi, out);
    }

    /// Kinetic part only.
    pub fn apply_kinetic(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        apply_stencil(&self.grid, self.hopping(), None, psi, &mut out);
        out
    }

    /// ⟨ψ|H|ψ⟩ by trapezoid quadrature (real part for Hermitian H).
    pub fn expectation(&self, psi: &[Complex64]) -> Complex64 {
        let hpsi = self.apply(psi);
        super::wavefunction::inner(&self.grid.weights(), psi, &hpsi)
    }
}

/// `out = (-Σ c_k δ²_k + V) ψ` on interior nodes, zero on walls.
pub(crate) fn apply_stencil(grid: &Grid, c: [f64; 2], potential: Option<&[Complex64]>, psi: &[Complex64], out: &mut [Complex64]) {
    let (nx, ny) = grid.shape();
    let zero = Complex64::new(0.0, 0.0);
    if grid.dim() == 1 {
        out[0] = zero;
        out[nx - 1] = zero;
        for i in 1..nx - 1 {
            let left = if i == 1 { zero } else { psi[i - 1] };
            let right = if i + 2 == nx { zero } else { psi[i + 1] };
            let lap = left + right - 2.0 * psi[i];
            let mut v = -c[0] * lap;
            if let Some(p) = potential {
                v += p[i] * psi[i];
            }
            out[i] = v;
        }
        return;
    }
    for i in 0..nx {
        for j in 0..ny {
            let k = i * ny + j;
            if i == 0 || j == 0 || i + 1 == nx || j + 1 == ny {
                out[k] = zero;
                continue;
            }
            let at = |ii: usize, jj: usize| {
                if ii == 0 || jj == 0 || ii + 1 == nx || jj + 1 == ny {
                    zero
                } else {
                    psi[ii * ny + jj]
                }
            };
            let lx = at(i - 1, j) + at(i + 1, j) - 2.0 * psi[k];
            let ly = at(i, j - 1) + at(i, j + 1) - 2.0 * psi[k];
            let mut v = -c[0] * lx - c[1] * ly;
            if let Some(p) = potential {
                v += p[k] * psi[k];
            }
            out[k] = v;
        }
    }
}
