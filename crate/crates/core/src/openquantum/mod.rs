//! Collision-model quantum trajectories, their average, an exact
//! partial-trace oracle and a memory witness.

mod collision;
mod oracle;
mod unravel;

pub use collision::{kraus_from_collision, CollisionSpec, KRAUS_TOLERANCE, STRUCTURE_TOLERANCE};
pub use oracle::{density_sanity, markovianity_diagnostic, partial_trace_oracle, series_gap, MarkovianityReport, DEFAULT_ORACLE_CAP};
pub use unravel::{reduced_density, unravel, DensitySeries, NoiseRecord, QuantumTrajectory, QuantumTrajectoryState, STATE_NORM_TOLERANCE};
