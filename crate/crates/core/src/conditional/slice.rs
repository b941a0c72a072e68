use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::wavefield::{cn_solve, inner, Grid, Hamiltonian, Wavefunction};

/// `ψ^ξ(x, t) = Ψ(x, y^ξ(t), t)`, kept raw unless explicitly normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalWavefunction {
    /// Subsystem (x) grid.
    pub grid: Grid,
    pub amplitudes: Vec<Complex64>,
    /// Label of the conditioning trajectory.
    pub label: u64,
    /// Conditioning environment position.
    pub y: f64,
    pub time: f64,
    pub normalized: bool,
    /// `(t, ‖ψ^ξ‖)` after every propagation step, starting with the initial
    /// value.
    pub norm_history: Vec<(f64, f64)>,
}

impl ConditionalWavefunction {
    pub fn norm(&self) -> f64 {
        inner(&self.grid.weights(), &self.amplitudes, &self.amplitudes).re.sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(Error::eval("conditional wavefunction vanishes"));
        }
        let mut out = self.clone();
        out.amplitudes.iter_mut().for_each(|a| *a /= n);
        out.normalized = true;
        Ok(out)
    }

    pub fn as_wavefunction(&self) -> Result<Wavefunction> {
        Wavefunction::from_amplitudes(self.grid.clone(), self.amplitudes.clone(), self.time)
    }
}

/// Row index and fraction of `y` on the environment axis of `grid`.
pub(crate) fn locate_y(grid: &Grid, y: f64) -> Result<(usize, f64)> {
    if grid.dim() != 2 {
        return Err(Error::config("conditioning requires a two-dimensional wavefunction"));
    }
    let ay = grid.axis(1);
    if !ay.contains(y) {
        return Err(Error::range(format!("conditioning position {y} outside [{}, {}]", ay.min, ay.max)));
    }
    Ok(ay.locate(y))
}

/// Slices a 2D wavefunction at environment position `y` (linear
/// interpolation between the neighbouring rows).
pub fn slice_cwf(psi: &Wavefunction, y: f64, label: u64) -> Result<ConditionalWavefunction> {
    let g = psi.grid();
    let (j, t) = locate_y(g, y)?;
    let (nx, ny) = g.shape();
    let a = psi.amplitudes();
    let amplitudes = (0..nx).map(|i| a[i * ny + j] * (1.0 - t) + a[i * ny + j + 1] * t).collect();
    let cwf = ConditionalWavefunction {
        grid: Grid::one_d(*g.axis(0)),
        amplitudes,
        label,
        y,
        time: psi.time(),
        normalized: false,
        norm_history: Vec::new(),
    };
    let n = cwf.norm();
    Ok(ConditionalWavefunction { norm_history: vec![(cwf.time, n)], ..cwf })
}

/// Effective potential terms on the subsystem grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceDrive {
    /// Real potential felt by the slice: `U_x(x) + U_xy(x, y^ξ)` plus any
    /// x-independent environment terms.
    pub potential: Vec<f64>,
    /// Correlation potential values (complex).
    pub correlation: Vec<Complex64>,
    /// New conditioning position after the step (recorded only).
    pub y: f64,
}

impl SliceDrive {
    fn total(&self) -> Vec<Complex64> {
        self.potential.iter().zip(&self.correlation).map(|(u, w)| Complex64::new(*u, 0.0) + w).collect()
    }
}

/// One Crank–Nicolson step of the conditional equation with the complex
/// effective potential `U + 𝔚` taken at the start (`now`) and end (`next`)
/// of the step. The norm is not conserved when `Im 𝔚 ≠ 0`.
pub fn evolve_cwf(
    cwf: &ConditionalWavefunction,
    mass: f64,
    hbar: f64,
    now: &SliceDrive,
    next: &SliceDrive,
    dt: f64,
) -> Result<ConditionalWavefunction> {
    if !(dt > 0.0) {
        return Err(Error::config("time step must be positive"));
    }
    let n = cwf.grid.len();
    if now.potential.len() != n || next.potential.len() != n || now.correlation.len() != n || next.correlation.len() != n {
        return Err(Error::config("effective potential does not match the subsystem grid"));
    }
    let h_now = Hamiltonian::from_potential(cwf.grid.clone(), vec![mass], hbar, now.total())?;
    let h_next = h_now.with_potential(next.total())?;
    let amplitudes = cn_solve(&cwf.amplitudes, &h_now, &h_next, dt)?;
    let mut out = ConditionalWavefunction { amplitudes, y: next.y, time: cwf.time + dt, normalized: false, ..cwf.clone() };
    let norm = out.norm();
    out.norm_history.push((out.time, norm));
    Ok(out)
}

/// Relative L2 distance between `reference` and `candidate` after removing
/// the best global complex factor: `‖S − cψ‖ / ‖S‖` with
/// `c = ⟨ψ, S⟩ / ⟨ψ, ψ⟩`.
pub fn quotient_error(reference: &[Complex64], candidate: &[Complex64], grid: &Grid) -> f64 {
    let w = grid.weights();
    let pp = inner(&w, candidate, candidate).re;
    let ss = inner(&w, reference, reference).re;
    if pp == 0.0 || ss == 0.0 {
        return if pp == ss { 0.0 } else { 1.0 };
    }
    let c = inner(&w, candidate, reference) / pp;
    let diff: Vec<Complex64> = reference.iter().zip(candidate).map(|(s, p)| s - c * p).collect();
    (inner(&w, &diff, &diff).re / ss).sqrt()
}
