//! Von Neumann pointer measurements (strong and weak) and generalized
//! measurements on level systems.

mod kraus;
mod pointer;
mod record;
mod strong;
mod weak;

pub(crate) use kraus::sample_branch;
pub use kraus::{generalized_measure, generalized_measure_run, KrausFamily, COMPLETENESS_TOLERANCE};
pub use pointer::{PointerConfig, MARGIN_WIDTHS, POINTS_PER_WIDTH};
pub use record::{outcome_frequencies, MeasurementRecord};
pub use strong::{strong_measure, strong_measure_runs, Eigenspace, StrongMeasurement};
pub use weak::{weak_value_protocol, WeakRow, WeakRun, WeakSettings, WeakValueReport};
