//! Grids, wavefunctions, Hamiltonians and Crank–Nicolson propagation.

mod eigen;
mod grid;
mod hamiltonian;
mod hybrid;
mod propagate;
mod snapshot;
mod wavefunction;

pub use eigen::{eigenstate, MAX_EIGEN_NODES};
pub use grid::{Axis, Grid, MAX_POINTS_2D, MIN_POINTS};
pub use hamiltonian::{
    build_hamiltonian, build_hamiltonian_at, resolution_warnings, Absorber, Drive, Field1, Field2, Hamiltonian, HamiltonianSpec, PotentialSpec,
    UnitSystem, Units,
};
pub use hybrid::{couple_impulse, evolve_hybrid, HybridHamiltonian, HybridState};
pub use propagate::{bicgstab, evolve_step, evolve_step_between, thomas_solve, SolveReport, SOLVER_MAX_ITERATIONS, SOLVER_TOLERANCE};
pub use snapshot::{read_snapshot, write_snapshot};
pub use wavefunction::{Wavefunction, NORM_TOLERANCE};

pub(crate) use propagate::cn_solve;
pub(crate) use wavefunction::inner;
