use num_complex::Complex64;

use super::slice::locate_y;
use crate::error::{Error, Result};
use crate::trajectories::{fill_flagged, rho_floor};
use crate::wavefield::{Grid, Wavefunction};

/// Smallest fraction of unflagged subsystem nodes accepted on a slice.
pub const MIN_VALID_FRACTION: f64 = 0.01;

/// Correlation potential `𝔚(x; y^ξ, t)` with its terms kept apart.
///
/// The three channels are `−½ m_y v_y²`, `−(ħ²/2m_y)(∂²_y R)/R` and
/// `−(ħ/2) ∂_y v_y` (the imaginary part), all evaluated at `y = y^ξ`.
/// `velocity` and `log_gradient` hold `v_y` and `(∂_y R)/R` on the slice so
/// that the convective term along a moving conditioning position can be
/// formed with [`CorrelationPotential::convective`].
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationPotential {
    pub grid: Grid,
    pub y: f64,
    pub time: f64,
    pub mass: f64,
    pub hbar: f64,
    pub kinetic: Vec<f64>,
    pub quantum: Vec<f64>,
    pub divergence: Vec<f64>,
    pub velocity: Vec<f64>,
    pub log_gradient: Vec<f64>,
    pub flags: Vec<bool>,
}

impl CorrelationPotential {
    /// `𝔚 = kinetic + quantum + i·divergence` per node.
    pub fn values(&self) -> Vec<Complex64> {
        (0..self.kinetic.len()).map(|i| Complex64::new(self.kinetic[i] + self.quantum[i], self.divergence[i])).collect()
    }

    /// Extra term needed when the slice position moves at speed `y_dot`:
    /// `m_y v_y (v_y − ẏ) + iħ (ẏ − v_y)(∂_y R)/R`. It vanishes where
    /// `v_y = ẏ`, in particular on the conditioning trajectory itself.
    pub fn convective(&self, y_dot: f64) -> Vec<Complex64> {
        self.velocity
            .iter()
            .zip(&self.log_gradient)
            .map(|(&v, &g)| Complex64::new(self.mass * v * (v - y_dot), self.hbar * (y_dot - v) * g))
            .collect()
    }

    /// `𝔚 + convective(ẏ)`.
    pub fn along(&self, y_dot: f64) -> Vec<Complex64> {
        self.values().into_iter().zip(self.convective(y_dot)).map(|(a, b)| a + b).collect()
    }

    pub fn flagged_count(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }
}

struct Row {
    kinetic: Vec<f64>,
    quantum: Vec<f64>,
    divergence: Vec<f64>,
    velocity: Vec<f64>,
    log_gradient: Vec<f64>,
    flags: Vec<bool>,
}

fn row_channels(psi: &Wavefunction, j: usize, mass: f64, hbar: f64, floor: f64) -> Row {
    let g = psi.grid();
    let (nx, ny) = g.shape();
    let dy = g.axis(1).spacing();
    let a = psi.amplitudes();
    let mut row = Row {
        kinetic: vec![f64::NAN; nx],
        quantum: vec![f64::NAN; nx],
        divergence: vec![f64::NAN; nx],
        velocity: vec![f64::NAN; nx],
        log_gradient: vec![f64::NAN; nx],
        flags: vec![true; nx],
    };
    for i in 1..nx - 1 {
        let f = |d: isize| a[i * ny + (j as isize + d) as usize];
        if (-2..=2).any(|d| f(d).norm_sqr() <= floor) {
            continue;
        }
        let p0 = f(0);
        let d1 = (f(-2) - f(-1) * 8.0 + f(1) * 8.0 - f(2)) / (12.0 * dy);
        let d2 = (-f(-2) + f(-1) * 16.0 - p0 * 30.0 + f(1) * 16.0 - f(2)) / (12.0 * dy * dy);
        let r = |d: isize| f(d).norm();
        let r2 = (-r(-2) + 16.0 * r(-1) - 30.0 * r(0) + 16.0 * r(1) - r(2)) / (12.0 * dy * dy);
        let l1 = d1 / p0;
        let l2 = d2 / p0;
        let v = hbar / mass * l1.im;
        row.velocity[i] = v;
        row.log_gradient[i] = l1.re;
        row.kinetic[i] = -0.5 * mass * v * v;
        row.quantum[i] = -hbar * hbar / (2.0 * mass) * r2 / r(0);
        row.divergence[i] = -0.5 * hbar * (hbar / mass * (l2 - l1 * l1).im);
        row.flags[i] = false;
    }
    row
}

/// Evaluates the correlation potential of `psi` on the slice `y`.
///
/// `y_mass` is the environment mass. Five-point stencils in `y` are taken
/// on the two rows bracketing `y` and blended linearly, so every stencil
/// node must lie inside the grid.
pub fn correlation_potential(psi: &Wavefunction, y: f64, y_mass: f64, hbar: f64) -> Result<CorrelationPotential> {
    let g = psi.grid();
    let (j, t) = locate_y(g, y)?;
    let ny = g.shape().1;
    if j < 2 || j + 3 >= ny {
        return Err(Error::range(format!("conditioning position {y} too close to the wall for the y stencil")));
    }
    if !(y_mass > 0.0) {
        return Err(Error::config("environment mass must be positive"));
    }
    let floor = rho_floor(psi);
    let lo = row_channels(psi, j, y_mass, hbar, floor);
    let hi = row_channels(psi, j + 1, y_mass, hbar, floor);
    let nx = g.shape().0;
    let flags: Vec<bool> = (0..nx).map(|i| lo.flags[i] || hi.flags[i]).collect();
    let valid = flags.iter().filter(|f| !**f).count();
    if (valid as f64) < MIN_VALID_FRACTION * nx as f64 || valid == 0 {
        return Err(Error::eval(format!("only {valid} of {nx} slice nodes lie above the density floor")));
    }
    let x_grid = Grid::one_d(*g.axis(0));
    let blend = |a: &[f64], b: &[f64]| -> Vec<f64> {
        let mut v: Vec<f64> = (0..nx).map(|i| if flags[i] { f64::NAN } else { (1.0 - t) * a[i] + t * b[i] }).collect();
        fill_flagged(&x_grid, &flags, &mut v);
        v
    };
    Ok(CorrelationPotential {
        kinetic: blend(&lo.kinetic, &hi.kinetic),
        quantum: blend(&lo.quantum, &hi.quantum),
        divergence: blend(&lo.divergence, &hi.divergence),
        velocity: blend(&lo.velocity, &hi.velocity),
        log_gradient: blend(&lo.log_gradient, &hi.log_gradient),
        flags,
        grid: x_grid,
        y,
        time: psi.time(),
        mass: y_mass,
        hbar,
    })
}
