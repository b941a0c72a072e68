//! Conditional wavefunctions: slicing, the correlation potential, the
//! conditional equation of motion and effective-wavefunction diagnostics.

mod correlation;
mod diagnostic;
mod pipeline;
mod slice;

pub use correlation::{correlation_potential, CorrelationPotential, MIN_VALID_FRACTION};
pub use diagnostic::{ewf_diagnostic, EwfReport, EwfSample, EwfThresholds};
pub use pipeline::{ewf_samples, run_cwf_pipeline, CorrelationMode, CwfRun, CwfSettings, CwfSnapshot, CwfStep, CwfTrace};
pub use slice::{evolve_cwf, quotient_error, slice_cwf, ConditionalWavefunction, SliceDrive};
