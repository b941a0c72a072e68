//! Local expectation values and the trajectory observables built on them:
//! ensemble and two-time averages, Bohmian work, dwell time and current.

mod current;
mod dwell;
mod local;
mod operator;
mod work;

pub use current::{gauss_current, total_current, CurrentSeries, Device};
pub use dwell::{dwell_time, expected_dwell, DwellReport, RegionSpec};
pub use local::{ensemble_expectation, local_expectation, two_time_correlation, Estimate, LocalExpectationField};
pub use operator::{Diagonal, OperatorKind, OperatorRep, HERMITICITY_TOLERANCE};
pub use work::{bohmian_work, ensemble_work};
