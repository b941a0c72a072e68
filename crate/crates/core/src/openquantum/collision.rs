use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermiticity_defect};
use crate::measurement::KrausFamily;

/// Tolerance for unitarity, orthonormality and normalization checks.
pub const STRUCTURE_TOLERANCE: f64 = 1e-10;
/// Completeness tolerance of extracted Kraus families.
pub const KRAUS_TOLERANCE: f64 = 1e-8;

/// Repeated-interaction environment: every `interval` the system drifts
/// under `drift` and then collides with an ancilla prepared in `ancilla`
/// through `unitary`, after which the ancilla is read in `basis`.
///
/// Composite amplitudes are indexed `a·d_S + s` (ancilla ⊗ system).
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionSpec {
    pub ancilla: DVector<Complex64>,
    pub unitary: DMatrix<Complex64>,
    /// Columns are the measured ancilla states `|θ_m⟩`.
    pub basis: DMatrix<Complex64>,
    pub interval: f64,
    pub drift: DMatrix<Complex64>,
    pub hbar: f64,
    /// Reuse one ancilla for every collision instead of a fresh one.
    pub recycle: bool,
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

impl CollisionSpec {
    pub fn new(
        ancilla: DVector<Complex64>,
        unitary: DMatrix<Complex64>,
        basis: DMatrix<Complex64>,
        interval: f64,
        drift: DMatrix<Complex64>,
    ) -> Result<Self> {
        let spec = CollisionSpec { ancilla, unitary, basis, interval, drift, hbar: 1.0, recycle: false };
        spec.validate()?;
        Ok(spec)
    }

    /// Qubit ancilla in `|0⟩` exchanging an excitation with a qubit system
    /// through the partial swap `cos θ I + i sin θ SWAP`.
    pub fn partial_swap(theta: f64, interval: f64, drift: DMatrix<Complex64>) -> Result<Self> {
        let (c, s) = (theta.cos(), theta.sin());
        let mut u = DMatrix::<Complex64>::identity(4, 4) * Complex64::new(c, 0.0);
        // SWAP on a·2 + s: |00⟩ and |11⟩ fixed, |01⟩ ↔ |10⟩.
        for (r, col) in [(0, 0), (3, 3), (1, 2), (2, 1)] {
            u[(r, col)] += Complex64::new(0.0, s);
        }
        let ancilla = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        Self::new(ancilla, u, DMatrix::identity(2, 2), interval, drift)
    }

    pub fn with_recycling(mut self, recycle: bool) -> Self {
        self.recycle = recycle;
        self
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla.len()
    }

    pub fn system_dim(&self) -> usize {
        self.drift.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let (da, ds) = (self.ancilla.len(), self.drift.nrows());
        if da < 1 || ds < 1 || self.drift.ncols() != ds {
            return Err(Error::config("collision model needs a square drift and a non-empty ancilla"));
        }
        if self.unitary.nrows() != da * ds || self.unitary.ncols() != da * ds {
            return Err(Error::config(format!("joint unitary must be {0}x{0}", da * ds)));
        }
        if self.basis.nrows() != da || self.basis.ncols() != da {
            return Err(Error::config("ancilla basis must be a square matrix of ancilla dimension"));
        }
        let u_defect = max_abs(&(self.unitary.adjoint() * &self.unitary - DMatrix::identity(da * ds, da * ds)));
        if u_defect > STRUCTURE_TOLERANCE {
            return Err(Error::config(format!("joint unitary is not unitary (defect {u_defect:.2e})")));
        }
        let b_defect = max_abs(&(self.basis.adjoint() * &self.basis - DMatrix::identity(da, da)));
        if b_defect > STRUCTURE_TOLERANCE {
            return Err(Error::config(format!("ancilla basis is not orthonormal (defect {b_defect:.2e})")));
        }
        if (self.ancilla.norm() - 1.0).abs() > STRUCTURE_TOLERANCE {
            return Err(Error::config("ancilla state must be normalized"));
        }
        if hermiticity_defect(&self.drift) > STRUCTURE_TOLERANCE {
            return Err(Error::config("drift Hamiltonian must be Hermitian"));
        }
        if !(self.interval > 0.0) || !(self.hbar > 0.0) {
            return Err(Error::config("collision interval and hbar must be positive"));
        }
        Ok(())
    }

    /// `exp(−i H Δt/ħ)`.
    pub fn drift_propagator(&self) -> DMatrix<Complex64> {
        let (values, vectors) = hermitian_eigen(&self.drift);
        let phases = DMatrix::from_diagonal(&DVector::from_iterator(
            values.len(),
            values.iter().map(|e| Complex64::new(0.0, -e * self.interval / self.hbar).exp()),
        ));
        &vectors * phases * vectors.adjoint()
    }

    /// Number of collisions in `horizon`.
    pub fn steps_for(&self, horizon: f64) -> Result<usize> {
        let n = horizon / self.interval;
        let r = n.round();
        if !(horizon >= 0.0) || (n - r).abs() > 1e-9 * r.max(1.0) {
            return Err(Error::config(format!("horizon {horizon} is not a multiple of the collision interval {}", self.interval)));
        }
        Ok(r as usize)
    }
}

/// `M_m = ⟨θ_m| U_AS |θ₀⟩` as a Kraus family on the system.
pub fn kraus_from_collision(spec: &CollisionSpec) -> Result<KrausFamily> {
    spec.validate()?;
    let (da, ds) = (spec.ancilla_dim(), spec.system_dim());
    let ops = (0..da)
        .map(|m| {
            DMatrix::from_fn(ds, ds, |sp, s| {
                let mut acc = Complex64::new(0.0, 0.0);
                for ap in 0..da {
                    let bra = spec.basis[(ap, m)].conj();
                    for a in 0..da {
                        acc += bra * spec.unitary[(ap * ds + sp, a * ds + s)] * spec.ancilla[a];
                    }
                }
                acc
            })
        })
        .collect();
    let labels = (0..da).map(|m| m.to_string()).collect();
    KrausFamily::with_tolerance(ops, labels, KRAUS_TOLERANCE)
}
