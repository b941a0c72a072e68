use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::collision::CollisionSpec;
use super::unravel::{reduced_density, unravel, DensitySeries};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermiticity_defect, trace_distance};

/// Default limit on the joint Hilbert dimension held by the oracle.
pub const DEFAULT_ORACLE_CAP: usize = 1 << 14;

/// Exact reduced system state after every collision. Fresh ancillas are
/// appended to the joint pure state and kept until the end; with
/// `spec.recycle` a single ancilla is reused. Joint amplitudes are indexed
/// `(A·d_A + a)·d_S + s` with `a` the ancilla colliding now.
pub fn partial_trace_oracle(spec: &CollisionSpec, psi0: &DVector<Complex64>, horizon: f64, cap: usize) -> Result<DensitySeries> {
    spec.validate()?;
    let steps = spec.steps_for(horizon)?;
    let (da, ds) = (spec.ancilla_dim(), spec.system_dim());
    if psi0.len() != ds {
        return Err(Error::config("initial state does not match the system dimension"));
    }
    let ancillas = if spec.recycle { steps.min(1) } else { steps };
    let dim = (da as f64).powi(ancillas as i32) * ds as f64;
    if dim > cap as f64 {
        return Err(Error::Resource(format!(
            "oracle needs a joint dimension of {dim:.0}, above the cap of {cap}; shorten the horizon or raise the cap"
        )));
    }
    let norm = psi0.norm();
    if !(norm > 0.0) {
        return Err(Error::config("initial state is zero"));
    }
    let drift = spec.drift_propagator();
    let mut joint: Vec<Complex64> = (psi0 / Complex64::new(norm, 0.0)).iter().copied().collect();
    let mut times = vec![0.0];
    let mut states = vec![trace_blocks(&joint, ds)];
    for n in 1..=steps {
        apply_blocks(&mut joint, &drift);
        if !spec.recycle || n == 1 {
            joint = attach(&joint, &spec.ancilla, ds);
        }
        apply_blocks(&mut joint, &spec.unitary);
        times.push(n as f64 * spec.interval);
        states.push(trace_blocks(&joint, ds));
    }
    Ok(DensitySeries { times, states })
}

/// Applies `m` to every consecutive block of `m.nrows()` amplitudes.
fn apply_blocks(joint: &mut [Complex64], m: &DMatrix<Complex64>) {
    let b = m.nrows();
    for chunk in joint.chunks_mut(b) {
        let v = m * DVector::from_column_slice(chunk);
        chunk.copy_from_slice(v.as_slice());
    }
}

/// `|A⟩ ⊗ |θ₀⟩ ⊗ |s⟩` for every block `A`.
fn attach(joint: &[Complex64], ancilla: &DVector<Complex64>, ds: usize) -> Vec<Complex64> {
    let da = ancilla.len();
    let mut out = Vec::with_capacity(joint.len() * da);
    for block in joint.chunks(ds) {
        for a in ancilla.iter() {
            out.extend(block.iter().map(|v| v * a));
        }
    }
    out
}

fn trace_blocks(joint: &[Complex64], ds: usize) -> DMatrix<Complex64> {
    let mut rho = DMatrix::zeros(ds, ds);
    for block in joint.chunks(ds) {
        for r in 0..ds {
            for c in 0..ds {
                rho[(r, c)] += block[r] * block[c].conj();
            }
        }
    }
    rho
}

/// Hermiticity defect, trace error and smallest eigenvalue of `rho`.
pub fn density_sanity(rho: &DMatrix<Complex64>) -> (f64, f64, f64) {
    let (values, _) = hermitian_eigen(rho);
    (hermiticity_defect(rho), (rho.trace() - Complex64::new(1.0, 0.0)).norm(), values[0])
}

/// Trace distance between two series at every time.
pub fn series_gap(a: &DensitySeries, b: &DensitySeries) -> Result<Vec<f64>> {
    if a.states.len() != b.states.len() {
        return Err(Error::config("density series have different lengths"));
    }
    Ok(a.states.iter().zip(&b.states).map(|(x, y)| trace_distance(x, y)).collect())
}

/// Gap between the memoryless reconstruction and the exact dynamics with
/// fresh and with recycled ancillas.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovianityReport {
    pub times: Vec<f64>,
    pub records: usize,
    /// `5/√N`.
    pub bound: f64,
    pub fresh_gap: Vec<f64>,
    pub recycled_gap: Vec<f64>,
    /// `max recycled gap / bound`.
    pub witness: f64,
    /// Whether the fresh-ancilla gap stays within the bound at every time.
    pub fresh_within_bound: bool,
}

/// Compares one Monte Carlo reconstruction (fresh-ancilla Kraus family at
/// every collision) against the exact oracle of both ancilla variants.
pub fn markovianity_diagnostic(
    spec: &CollisionSpec,
    psi0: &DVector<Complex64>,
    horizon: f64,
    records: usize,
    seed: u64,
    cap: usize,
) -> Result<MarkovianityReport> {
    let fresh = spec.clone().with_recycling(false);
    let recycled = spec.clone().with_recycling(true);
    let reconstruction = reduced_density(&unravel(&fresh, psi0, horizon, records, seed)?)?;
    let fresh_gap = series_gap(&reconstruction, &partial_trace_oracle(&fresh, psi0, horizon, cap)?)?;
    let recycled_gap = series_gap(&reconstruction, &partial_trace_oracle(&recycled, psi0, horizon, cap)?)?;
    let bound = 5.0 / (records as f64).sqrt();
    let witness = recycled_gap.iter().copied().fold(0.0, f64::max) / bound;
    let fresh_within_bound = fresh_gap.iter().all(|g| *g <= bound);
    Ok(MarkovianityReport { times: reconstruction.times, records, bound, fresh_gap, recycled_gap, witness, fresh_within_bound })
}
