use std::collections::VecDeque;

use crate::wavefield::{Grid, Wavefunction};

/// Nodes with ρ at or below this fraction of max ρ are flagged.
pub const RHO_FLOOR_FRACTION: f64 = 1e-12;

/// Absolute density floor for `psi`.
pub fn rho_floor(psi: &Wavefunction) -> f64 {
    RHO_FLOOR_FRACTION * psi.amplitudes().iter().map(|a| a.norm_sqr()).fold(0.0, f64::max)
}

/// Flags wall nodes and nodes at or below the density floor.
pub fn low_density_flags(psi: &Wavefunction) -> Vec<bool> {
    let floor = rho_floor(psi);
    let g = psi.grid();
    psi.amplitudes().iter().enumerate().map(|(k, a)| g.is_boundary(k) || a.norm_sqr() <= floor).collect()
}

/// Overwrites every flagged node with the value of the nearest unflagged node
/// (breadth-first over grid neighbours).
pub(crate) fn fill_flagged(grid: &Grid, flags: &[bool], values: &mut [f64]) {
    let (nx, ny) = grid.shape();
    let mut seen: Vec<bool> = flags.iter().map(|f| !f).collect();
    let mut queue: VecDeque<usize> = (0..values.len()).filter(|&k| !flags[k]).collect();
    if queue.is_empty() {
        return;
    }
    while let Some(k) = queue.pop_front() {
        let (i, j) = grid.unravel(k);
        let mut nb = [usize::MAX; 4];
        if i > 0 {
            nb[0] = k - ny;
        }
        if i + 1 < nx {
            nb[1] = k + ny;
        }
        if grid.dim() == 2 {
            if j > 0 {
                nb[2] = k - 1;
            }
            if j + 1 < ny {
                nb[3] = k + 1;
            }
        }
        for &n in nb.iter().filter(|&&n| n != usize::MAX) {
            if !seen[n] {
                seen[n] = true;
                values[n] = values[k];
                queue.push_back(n);
            }
        }
    }
}

/// `Im{(∂_axis ψ)/ψ}` by central difference at interior nodes (NaN elsewhere).
pub(crate) fn phase_gradient(psi: &Wavefunction, axis: usize) -> Vec<f64> {
    let g = psi.grid();
    let a = psi.amplitudes();
    let (nx, ny) = g.shape();
    let stride = if axis == 0 { ny } else { 1 };
    let d = g.axis(axis).spacing();
    (0..a.len())
        .map(|k| {
            let (i, j) = g.unravel(k);
            let interior = if axis == 0 { i > 0 && i + 1 < nx } else { j > 0 && j + 1 < ny };
            if !interior || a[k].norm_sqr() == 0.0 {
                return f64::NAN;
            }
            let dpsi = (a[k + stride] - a[k - stride]) / (2.0 * d);
            (dpsi / a[k]).im
        })
        .collect()
}

/// `(∂²_axis R)/R` with `R = |ψ|` by the 3-point stencil (NaN where undefined).
pub(crate) fn amplitude_curvature(psi: &Wavefunction, axis: usize) -> Vec<f64> {
    let g = psi.grid();
    let r: Vec<f64> = psi.amplitudes().iter().map(|a| a.norm()).collect();
    let (nx, ny) = g.shape();
    let stride = if axis == 0 { ny } else { 1 };
    let d = g.axis(axis).spacing();
    (0..r.len())
        .map(|k| {
            let (i, j) = g.unravel(k);
            let interior = if axis == 0 { i > 0 && i + 1 < nx } else { j > 0 && j + 1 < ny };
            if !interior || r[k] == 0.0 {
                return f64::NAN;
            }
            (r[k + stride] + r[k - stride] - 2.0 * r[k]) / (d * d * r[k])
        })
        .collect()
}

/// Bohmian velocity field `v_k = (ħ/m_k) Im{(∂_k ψ)/ψ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub grid: Grid,
    /// One nodal array per axis.
    pub components: Vec<Vec<f64>>,
    /// Low-density (or wall) nodes whose values were extrapolated.
    pub flags: Vec<bool>,
    pub time: f64,
}

impl VelocityField {
    /// Velocity at `p`, interpolated (linear in 1D, bilinear in 2D). `None`
    /// if any component is not finite.
    pub fn at(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let mut v = [0.0; 2];
        for (k, c) in self.components.iter().enumerate() {
            v[k] = self.grid.interpolate(c, p);
            if !v[k].is_finite() {
                return None;
            }
        }
        Some(v)
    }

    pub fn flagged_count(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }
}

pub fn velocity_field(psi: &Wavefunction, masses: &[f64], hbar: f64) -> VelocityField {
    let flags = low_density_flags(psi);
    let components = (0..psi.grid().dim())
        .map(|axis| {
            let mut v: Vec<f64> = phase_gradient(psi, axis).into_iter().map(|g| hbar / masses[axis] * g).collect();
            fill_flagged(psi.grid(), &flags, &mut v);
            v
        })
        .collect();
    VelocityField { grid: psi.grid().clone(), components, flags, time: psi.time() }
}

/// Bohmian quantum potential `Q = −Σ_k (ħ²/2m_k)(∂²_k R)/R`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumPotentialField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub flags: Vec<bool>,
    pub time: f64,
}

pub fn quantum_potential(psi: &Wavefunction, masses: &[f64], hbar: f64) -> QuantumPotentialField {
    let flags = low_density_flags(psi);
    let mut values = vec![0.0; psi.amplitudes().len()];
    for (axis, m) in masses.iter().enumerate().take(psi.grid().dim()) {
        for (q, c) in values.iter_mut().zip(amplitude_curvature(psi, axis)) {
            *q -= hbar * hbar / (2.0 * m) * c;
        }
    }
    fill_flagged(psi.grid(), &flags, &mut values);
    QuantumPotentialField { grid: psi.grid().clone(), values, flags, time: psi.time() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn grid() -> Grid {
        Grid::line(-10.0, 10.0, 401).unwrap()
    }

    #[test]
    fn plane_wave_velocity_and_flat_quantum_potential() {
        let k = 1.7;
        let g = grid();
        let psi = Wavefunction::from_fn_1d(&g, |x| Complex64::new(0.0, k * x).exp());
        let v = velocity_field(&psi, &[2.0], 1.0);
        let dx = g.axis(0).spacing();
        // Central difference of e^{ikx} gives sin(k dx)/dx.
        let expected = (k * dx).sin() / dx / 2.0;
        for i in 2..399 {
            assert!((v.components[0][i] - expected).abs() < 1e-12);
            assert!((expected - k / 2.0).abs() < 1e-2);
        }
        let q = quantum_potential(&psi, &[2.0], 1.0);
        for i in 2..399 {
            assert!(q.values[i].abs() < 1e-10);
        }
    }

    #[test]
    fn real_state_has_zero_velocity() {
        let g = grid();
        let psi = Wavefunction::from_fn_1d(&g, |x| Complex64::new((-x * x / 2.0).exp(), 0.0));
        let v = velocity_field(&psi, &[1.0], 1.0);
        assert!(v.components[0].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn low_density_nodes_are_flagged_and_filled() {
        let g = grid();
        let psi = Wavefunction::from_fn_1d(&g, |x| Complex64::new(0.0, 0.5 * x).exp() * (-x * x).exp());
        let v = velocity_field(&psi, &[1.0], 1.0);
        assert!(v.flags[0] && v.flags[400]);
        assert!(v.flagged_count() > 100);
        assert!(v.components[0].iter().all(|x| x.is_finite()));
        assert!(v.at([9.9, 0.0]).is_some());
    }
}
