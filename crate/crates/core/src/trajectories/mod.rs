//! Bohmian velocity field, quantum potential, equilibrium sampling and
//! trajectory integration.

mod ensemble;
mod fields;
mod integrate;
mod sampling;

pub use ensemble::{count_crossings, histogram_l1, quantile_histogram_l1, Ensemble, Trajectory};
pub use fields::{low_density_flags, quantum_potential, rho_floor, velocity_field, QuantumPotentialField, VelocityField, RHO_FLOOR_FRACTION};
pub use integrate::{advance, evolve_with_trajectories, integrate};
pub use sampling::{sample_initial, DensitySampler};

pub(crate) use fields::fill_flagged;
pub(crate) use sampling::{linear_cdf, linear_cdf_at};
