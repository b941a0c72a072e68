//! Crank–Nicolson propagation.
//!
//! One step solves `(I + i dt H⁺ / 2ħ) ψ' = (I − i dt H⁻ / 2ħ) ψ`, where
//! `H⁻`/`H⁺` are the Hamiltonians at the start and end of the step (equal for
//! static problems). 1D systems are tridiagonal and solved directly; 2D and
//! hybrid systems use matrix-free BiCGSTAB.

use num_complex::Complex64;

use super::grid::Grid;
use super::hamiltonian::Hamiltonian;
use super::wavefunction::Wavefunction;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Relative residual target for iterative solves.
pub const SOLVER_TOLERANCE: f64 = 1e-13;
pub const SOLVER_MAX_ITERATIONS: usize = 1000;

/// Solves a tridiagonal system in place (Thomas algorithm, no pivoting).
///
/// `sub[i]` couples row `i` to `i-1`, `sup[i]` couples row `i` to `i+1`.
pub fn thomas_solve(sub: &[Complex64], diag: &[Complex64], sup: &[Complex64], rhs: &mut [Complex64]) -> Result<()> {
    let n = diag.len();
    let mut c = vec![ZERO; n];
    let mut beta = diag[0];
    if beta.norm() == 0.0 {
        return Err(Error::Numerical { iterations: 0, residual: f64::INFINITY });
    }
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i - 1];
        if beta.norm() == 0.0 {
            return Err(Error::Numerical { iterations: i, residual: f64::INFINITY });
        }
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= c[i] * next;
    }
    Ok(())
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned BiCGSTAB for `A x = b` with `A` given as an action.
///
/// `x` holds the initial guess on entry and the solution on exit.
pub fn bicgstab(
    apply: impl Fn(&[Complex64], &mut [Complex64]),
    diag: &[Complex64],
    b: &[Complex64],
    x: &mut [Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = ZERO);
        return Ok(SolveReport { iterations: 0, residual: 0.0 });
    }
    let inv: Vec<Complex64> = diag.iter().map(|d| if d.norm() > 0.0 { 1.0 / d } else { Complex64::new(1.0, 0.0) }).collect();

    let mut ax = vec![ZERO; n];
    apply(x, &mut ax);
    let mut r: Vec<Complex64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let r_hat = r.clone();
    let mut p = vec![ZERO; n];
    let mut v = vec![ZERO; n];
    let mut y = vec![ZERO; n];
    let mut z = vec![ZERO; n];
    let mut s = vec![ZERO; n];
    let mut t = vec![ZERO; n];
    let (mut rho, mut alpha, mut omega) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));

    let mut res = norm(&r) / bnorm;
    if res <= tol {
        return Ok(SolveReport { iterations: 0, residual: res });
    }
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.norm() == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = inv[i] * p[i];
        }
        apply(&y, &mut v);
        let rv = dot(&r_hat, &v);
        if rv.norm() == 0.0 {
            break;
        }
        alpha = rho_new / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) / bnorm <= tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            res = true_residual(&apply, b, x, bnorm);
            return Ok(SolveReport { iterations: it, residual: res });
        }
        for i in 0..n {
            z[i] = inv[i] * s[i];
        }
        apply(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt.norm() > 0.0 { dot(&t, &s) / tt } else { ZERO };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        rho = rho_new;
        res = norm(&r) / bnorm;
        if res <= tol {
            res = true_residual(&apply, b, x, bnorm);
            if res <= 10.0 * tol {
                return Ok(SolveReport { iterations: it, residual: res });
            }
        }
        if omega.norm() == 0.0 {
            break;
        }
    }
    if !res.is_finite() {
        res = true_residual(&apply, b, x, bnorm);
    }
    Err(Error::Numerical { iterations: max_iter, residual: res })
}

fn true_residual(apply: &impl Fn(&[Complex64], &mut [Complex64]), b: &[Complex64], x: &[Complex64], bnorm: f64) -> f64 {
    let mut ax = vec![ZERO; b.len()];
    apply(x, &mut ax);
    b.iter().zip(&ax).map(|(b, a)| (b - a).norm_sqr()).sum::<f64>().sqrt() / bnorm
}

/// One Crank–Nicolson step under a static Hamiltonian.
pub fn evolve_step(psi: &Wavefunction, h: &Hamiltonian, dt: f64) -> Result<Wavefunction> {
    evolve_step_between(psi, h, h, dt)
}

/// One Crank–Nicolson step with `h_now` at the start and `h_next` at the end
/// of the interval (trapezoidal rule in time).
pub fn evolve_step_between(psi: &Wavefunction, h_now: &Hamiltonian, h_next: &Hamiltonian, dt: f64) -> Result<Wavefunction> {
    if !(dt > 0.0) {
        return Err(Error::config("time step must be positive"));
    }
    if psi.grid() != h_now.grid() || psi.grid() != h_next.grid() {
        return Err(Error::config("wavefunction and Hamiltonian grids differ"));
    }
    let amps = cn_solve(psi.amplitudes(), h_now, h_next, dt)?;
    Wavefunction::from_amplitudes(psi.grid().clone(), amps, psi.time() + dt).map_err(|_| Error::Numerical { iterations: 0, residual: f64::NAN })
}

pub(crate) fn cn_solve(psi: &[Complex64], h_now: &Hamiltonian, h_next: &Hamiltonian, dt: f64) -> Result<Vec<Complex64>> {
    let grid = h_now.grid();
    let half = Complex64::new(0.0, 0.5 * dt / h_now.hbar());
    let hpsi = h_now.apply(psi);
    let mut rhs: Vec<Complex64> = psi.iter().zip(&hpsi).map(|(p, hp)| p - half * hp).collect();
    for (k, r) in rhs.iter_mut().enumerate() {
        if grid.is_boundary(k) {
            *r = ZERO;
        }
    }
    if grid.dim() == 1 {
        solve_1d(grid, h_next, half, rhs)
    } else {
        solve_iterative(grid, h_next, half, rhs, psi)
    }
}

fn solve_1d(grid: &Grid, h: &Hamiltonian, half: Complex64, mut rhs: Vec<Complex64>) -> Result<Vec<Complex64>> {
    let n = grid.len();
    let m = n - 2;
    let c = h.hopping()[0];
    let off = half * (-c);
    let sub = vec![off; m];
    let sup = vec![off; m];
    let diag: Vec<Complex64> = (1..n - 1).map(|i| Complex64::new(1.0, 0.0) + half * h.diagonal(i)).collect();
    thomas_solve(&sub, &diag, &sup, &mut rhs[1..n - 1])?;
    Ok(rhs)
}

fn solve_iterative(grid: &Grid, h: &Hamiltonian, half: Complex64, rhs: Vec<Complex64>, guess: &[Complex64]) -> Result<Vec<Complex64>> {
    let diag: Vec<Complex64> = (0..grid.len())
        .map(|k| if grid.is_boundary(k) { Complex64::new(1.0, 0.0) } else { Complex64::new(1.0, 0.0) + half * h.diagonal(k) })
        .collect();
    let apply = |x: &[Complex64], out: &mut [Complex64]| {
        h.apply_into(x, out);
        for k in 0..x.len() {
            out[k] = if grid.is_boundary(k) { x[k] } else { x[k] + half * out[k] };
        }
    };
    let mut x = guess.to_vec();
    bicgstab(apply, &diag, &rhs, &mut x, SOLVER_TOLERANCE, SOLVER_MAX_ITERATIONS)?;
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefield::grid::Axis;

    #[test]
    fn thomas_matches_dense_solve() {
        let sub = vec![ZERO, Complex64::new(1.0, 0.5), Complex64::new(-0.3, 0.0)];
        let diag = vec![Complex64::new(4.0, 1.0), Complex64::new(3.0, -1.0), Complex64::new(5.0, 0.0)];
        let sup = vec![Complex64::new(0.2, 0.1), Complex64::new(0.0, 1.0), ZERO];
        let x_true = [Complex64::new(1.0, -1.0), Complex64::new(0.5, 2.0), Complex64::new(-1.0, 0.25)];
        let mut b: Vec<Complex64> = (0..3)
            .map(|i| {
                let mut v = diag[i] * x_true[i];
                if i > 0 {
                    v += sub[i] * x_true[i - 1];
                }
                if i < 2 {
                    v += sup[i] * x_true[i + 1];
                }
                v
            })
            .collect();
        thomas_solve(&sub, &diag, &sup, &mut b).unwrap();
        for (a, e) in b.iter().zip(&x_true) {
            assert!((a - e).norm() < 1e-14);
        }
    }

    #[test]
    fn two_d_step_preserves_norm() {
        let ax = Axis::new(-6.0, 6.0, 48).unwrap();
        let g = Grid::two_d(ax, ax).unwrap();
        let v: Vec<f64> = (0..g.len())
            .map(|k| {
                let [x, y] = g.point(k);
                0.5 * (x * x + y * y) + 0.2 * x * y
            })
            .collect();
        let h = Hamiltonian::from_real_potential(g.clone(), vec![1.0, 1.0], 1.0, v).unwrap();
        let psi = Wavefunction::from_fn_2d(&g, |x, y| Complex64::new(0.0, 1.2 * x).exp() * (-((x - 1.0).powi(2) + y * y) / 2.0).exp())
            .normalized()
            .unwrap();
        let next = evolve_step(&psi, &h, 0.05).unwrap();
        assert!((next.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_convergence_reports_residual() {
        let apply = |x: &[Complex64], out: &mut [Complex64]| {
            // Singular operator: projects out the second component.
            out[0] = x[0];
            out[1] = ZERO;
        };
        let b = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        let mut x = [ZERO; 2];
        let err = bicgstab(apply, &[Complex64::new(1.0, 0.0); 2], &b, &mut x, 1e-12, 20).unwrap_err();
        assert!(matches!(err, Error::Numerical { residual, .. } if residual > 0.1));
    }
}
