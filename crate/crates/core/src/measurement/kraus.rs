use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng as _;

use super::record::MeasurementRecord;
use crate::error::{Error, Result};
use crate::linalg::projector;
use crate::rng;

/// Largest allowed entry of `Σ M†M − I`.
pub const COMPLETENESS_TOLERANCE: f64 = 1e-10;

/// Measurement operators `{M_m}` with `Σ_m M_m†M_m = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausFamily {
    pub operators: Vec<DMatrix<Complex64>>,
    pub labels: Vec<String>,
}

impl KrausFamily {
    pub fn new(operators: Vec<DMatrix<Complex64>>, labels: Vec<String>) -> Result<Self> {
        Self::with_tolerance(operators, labels, COMPLETENESS_TOLERANCE)
    }

    /// As [`KrausFamily::new`] with a custom completeness tolerance.
    pub fn with_tolerance(operators: Vec<DMatrix<Complex64>>, labels: Vec<String>, tolerance: f64) -> Result<Self> {
        if operators.is_empty() || operators.len() != labels.len() {
            return Err(Error::config("Kraus family needs one label per operator and at least one operator"));
        }
        let d = operators[0].nrows();
        if operators.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::config("Kraus operators must be square and of equal size"));
        }
        let family = KrausFamily { operators, labels };
        let defect = family.completeness_defect();
        if defect > tolerance {
            return Err(Error::config(format!("Kraus operators are not complete: max |ΣM†M − I| = {defect:.3e}")));
        }
        Ok(family)
    }

    /// Projective family onto the columns of an orthonormal `basis`.
    pub fn projective(basis: &DMatrix<Complex64>) -> Result<Self> {
        let ops = (0..basis.ncols()).map(|k| projector(&basis.column(k).into_owned())).collect();
        let labels = (0..basis.ncols()).map(|k| k.to_string()).collect();
        Self::new(ops, labels)
    }

    /// Qubit amplitude damping: `M₀ = diag(1, √(1−γ))`, `M₁ = √γ |0⟩⟨1|`.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::config("damping parameter must lie in [0, 1]"));
        }
        let c = |x: f64| Complex64::new(x, 0.0);
        let m0 = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c((1.0 - gamma).sqrt())]);
        let m1 = DMatrix::from_row_slice(2, 2, &[c(0.0), c(gamma.sqrt()), c(0.0), c(0.0)]);
        Self::new(vec![m0, m1], vec!["no-jump".into(), "jump".into()])
    }

    pub fn dim(&self) -> usize {
        self.operators[0].nrows()
    }

    pub fn completeness_defect(&self) -> f64 {
        let d = self.dim();
        let sum = self.operators.iter().fold(DMatrix::<Complex64>::zeros(d, d), |acc, m| acc + m.adjoint() * m);
        (sum - DMatrix::identity(d, d)).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Conditional states `ϕ_m = M_m ψ` and probabilities `⟨ϕ_m|ϕ_m⟩`.
    pub fn branches(&self, psi: &DVector<Complex64>) -> Vec<(DVector<Complex64>, f64)> {
        self.operators
            .iter()
            .map(|m| {
                let phi = m * psi;
                let p = phi.norm_squared();
                (phi, p)
            })
            .collect()
    }

    /// `Σ_m M_m ρ M_m†`.
    pub fn channel(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        self.operators.iter().fold(DMatrix::zeros(rho.nrows(), rho.ncols()), |acc, m| acc + m * rho * m.adjoint())
    }

    /// Isometric dilation `Σ_m |m⟩ ⊗ M_m ψ`, indexed `m·d + s`: the
    /// composite state after the system has been coupled to an outcome
    /// register.
    pub fn dilate(&self, psi: &DVector<Complex64>) -> DVector<Complex64> {
        let d = self.dim();
        let mut out = DVector::zeros(self.operators.len() * d);
        for (m, op) in self.operators.iter().enumerate() {
            out.rows_mut(m * d, d).copy_from(&(op * psi));
        }
        out
    }
}

/// Draws an outcome of `k` on the normalized state `pre` with one uniform
/// variate from `rng`: `(m, ϕ_m/‖ϕ_m‖, P_m)`.
pub(crate) fn sample_branch(pre: &DVector<Complex64>, k: &KrausFamily, rng: &mut rng::Rng) -> (usize, DVector<Complex64>, f64) {
    let branches = k.branches(pre);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut pick = branches.len() - 1;
    for (m, (_, p)) in branches.iter().enumerate() {
        acc += p;
        if u < acc {
            pick = m;
            break;
        }
    }
    while branches[pick].1 == 0.0 && pick > 0 {
        pick -= 1;
    }
    let (phi, p) = &branches[pick];
    (pick, phi / Complex64::new(p.sqrt(), 0.0), *p)
}

/// Run `run` of master `seed`: outcome `m` with probability `⟨ϕ_m|ϕ_m⟩`,
/// post-state `ϕ_m/‖ϕ_m‖`.
pub fn generalized_measure_run(psi: &DVector<Complex64>, k: &KrausFamily, seed: u64, run: u64) -> Result<MeasurementRecord> {
    if psi.len() != k.dim() {
        return Err(Error::config("state and Kraus operator dimensions differ"));
    }
    let norm = psi.norm();
    if !(norm > 0.0) {
        return Err(Error::config("cannot measure a zero state"));
    }
    let pre = psi / Complex64::new(norm, 0.0);
    let (pick, post, p) = sample_branch(&pre, k, &mut rng::stream(seed, run));
    Ok(MeasurementRecord { outcome: pick, value: pick as f64, pointer: None, probability: p, pre, post, seed, run })
}

pub fn generalized_measure(psi: &DVector<Complex64>, k: &KrausFamily, seed: u64) -> Result<MeasurementRecord> {
    generalized_measure_run(psi, k, seed, 0)
}
