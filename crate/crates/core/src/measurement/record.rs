use nalgebra::DVector;
use num_complex::Complex64;

/// Result of one measurement run.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    /// Index of the outcome (eigenspace or Kraus element).
    pub outcome: usize,
    /// Eigenvalue for pointer measurements; the element index otherwise.
    pub value: f64,
    /// Pointer position read, when a pointer was used.
    pub pointer: Option<f64>,
    /// Probability assigned to the recorded outcome.
    pub probability: f64,
    pub pre: DVector<Complex64>,
    pub post: DVector<Complex64>,
    pub seed: u64,
    pub run: u64,
}

/// Relative frequency of each outcome among `records`.
pub fn outcome_frequencies(records: &[MeasurementRecord], outcomes: usize) -> Vec<f64> {
    let mut counts = vec![0usize; outcomes];
    for r in records {
        if r.outcome < outcomes {
            counts[r.outcome] += 1;
        }
    }
    counts.iter().map(|&c| c as f64 / records.len().max(1) as f64).collect()
}
