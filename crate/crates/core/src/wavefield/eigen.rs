use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{Hamiltonian, Wavefunction};
use crate::{Error, Result};

/// Largest number of interior nodes accepted by [`eigenstate`].
pub const MAX_EIGEN_NODES: usize = 4000;

/// The `n`-th eigenvector (ascending energy, `n = 0` the ground state) of a
/// real 1D grid Hamiltonian, normalized, with its eigenvalue.
pub fn eigenstate(h: &Hamiltonian, n: usize) -> Result<(Wavefunction, f64)> {
    let grid = h.grid().clone();
    if grid.dim() != 1 {
        return Err(Error::Configuration("eigenstates are built on 1D grids only".into()));
    }
    if !h.is_real() {
        return Err(Error::Configuration("eigenstates need a real potential".into()));
    }
    let m = grid.len() - 2;
    if m > MAX_EIGEN_NODES {
        return Err(Error::Resource(format!("{m} interior nodes exceed the eigenstate limit {MAX_EIGEN_NODES}")));
    }
    if n >= m {
        return Err(Error::Range(format!("eigenstate index {n} is beyond the {m} interior nodes")));
    }
    let c = h.hopping()[0];
    let mut a = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        a[(i, i)] = h.diagonal(i + 1).re;
        if i + 1 < m {
            a[(i, i + 1)] = -c;
            a[(i + 1, i)] = -c;
        }
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let k = order[n];
    let col = eig.eigenvectors.column(k);
    let sign = if col.iter().copied().fold(0.0, |s: f64, v| s + v) < 0.0 { -1.0 } else { 1.0 };
    let mut amps = vec![Complex64::new(0.0, 0.0); m + 2];
    for i in 0..m {
        amps[i + 1] = Complex64::new(sign * col[i], 0.0);
    }
    let psi = Wavefunction::from_amplitudes(grid, amps, 0.0)?.normalized()?;
    Ok((psi, eig.eigenvalues[k]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefield::{build_hamiltonian, Grid, HamiltonianSpec, PotentialSpec};

    #[test]
    fn discrete_eigenvector_satisfies_the_grid_equation() {
        let g = Grid::line(-8.0, 8.0, 401).unwrap();
        let h = build_hamiltonian(&HamiltonianSpec::new(vec![1.0], PotentialSpec::subsystem(|x| 0.5 * x * x)), &g).unwrap();
        for n in 0..3 {
            let (psi, e) = eigenstate(&h, n).unwrap();
            assert!((e - (n as f64 + 0.5)).abs() < 1e-3, "{n}: {e}");
            let hpsi = h.apply(psi.amplitudes());
            for (a, b) in hpsi.iter().zip(psi.amplitudes()) {
                assert!((a - b * e).norm() < 1e-10);
            }
        }
        assert!(eigenstate(&h, 399).is_err());
    }
}
