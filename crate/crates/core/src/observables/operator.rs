use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;
use crate::wavefield::{inner, Grid, Hamiltonian};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Tolerance of the construction-time Hermiticity check.
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;

pub type Diagonal = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum OperatorKind {
    /// Multiplication by a real function of position.
    Diagonal(Diagonal),
    /// `−iħ ∂_axis` by central difference.
    Momentum {
        axis: usize,
        hbar: f64,
    },
    /// `−Σ_k (ħ²/2m_k) ∂²_k` by the 3-point stencil.
    Kinetic {
        masses: Vec<f64>,
        hbar: f64,
    },
    Hamiltonian(Box<Hamiltonian>),
    LevelMatrix(DMatrix<Complex64>),
}

/// A Hermitian observable acting on grid or level states.
#[derive(Clone)]
pub struct OperatorRep {
    pub kind: OperatorKind,
    /// Grid of the states it acts on (`None` for level matrices).
    pub grid: Option<Grid>,
    pub label: String,
}

impl fmt::Debug for OperatorRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorRep").field("label", &self.label).field("grid", &self.grid).finish()
    }
}

impl OperatorRep {
    pub fn position(grid: &Grid, axis: usize) -> Result<Self> {
        Self::diagonal(grid, move |p| p[axis], if axis == 0 { "x" } else { "y" })
    }

    pub fn identity(grid: &Grid) -> Result<Self> {
        Self::diagonal(grid, |_| 1.0, "identity")
    }

    pub fn diagonal(grid: &Grid, f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static, label: &str) -> Result<Self> {
        Self::checked(OperatorKind::Diagonal(Arc::new(f)), Some(grid.clone()), label)
    }

    pub fn momentum(grid: &Grid, axis: usize, hbar: f64) -> Result<Self> {
        if axis >= grid.dim() {
            return Err(Error::config("momentum axis exceeds grid dimension"));
        }
        Self::checked(OperatorKind::Momentum { axis, hbar }, Some(grid.clone()), if axis == 0 { "p" } else { "p_y" })
    }

    pub fn kinetic(grid: &Grid, masses: Vec<f64>, hbar: f64) -> Result<Self> {
        if masses.len() != grid.dim() || masses.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::config("kinetic operator needs one positive mass per axis"));
        }
        Self::checked(OperatorKind::Kinetic { masses, hbar }, Some(grid.clone()), "kinetic")
    }

    pub fn hamiltonian(h: &Hamiltonian) -> Result<Self> {
        if !h.is_real() {
            return Err(Error::config("Hamiltonian with an absorbing potential is not an observable"));
        }
        Self::checked(OperatorKind::Hamiltonian(Box::new(h.clone())), Some(h.grid().clone()), "H")
    }

    pub fn level_matrix(m: DMatrix<Complex64>, label: &str) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::config("level operator must be square"));
        }
        Self::checked(OperatorKind::LevelMatrix(m), None, label)
    }

    fn checked(kind: OperatorKind, grid: Option<Grid>, label: &str) -> Result<Self> {
        let op = OperatorRep { kind, grid, label: label.to_string() };
        let defect = op.hermiticity_defect();
        if defect > HERMITICITY_TOLERANCE {
            return Err(Error::config(format!("operator '{label}' is not Hermitian (defect {defect:e})")));
        }
        Ok(op)
    }

    /// Number of components of the states it acts on.
    pub fn size(&self) -> usize {
        match (&self.kind, &self.grid) {
            (OperatorKind::LevelMatrix(m), _) => m.nrows(),
            (_, Some(g)) => g.len(),
            _ => 0,
        }
    }

    /// `|⟨a, B b⟩ − conj⟨b, B a⟩|` relative to its scale for seeded random
    /// vectors.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.size();
        let mut r = rng::stream(0x4865_726d, 0);
        let mut vec = || -> Vec<Complex64> {
            (0..n)
                .map(|k| {
                    let wall = self.grid.as_ref().is_some_and(|g| g.is_boundary(k));
                    if wall {
                        ZERO
                    } else {
                        Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5)
                    }
                })
                .collect()
        };
        let a = vec();
        let b = vec();
        let w = self.weights();
        let lhs = inner(&w, &a, &self.apply(&b));
        let rhs = inner(&w, &b, &self.apply(&a)).conj();
        let scale = lhs.norm().max(rhs.norm()).max(1.0);
        (lhs - rhs).norm() / scale
    }

    /// Quadrature weights of the state space (ones for level states).
    pub fn weights(&self) -> Vec<f64> {
        match &self.grid {
            Some(g) if !matches!(self.kind, OperatorKind::LevelMatrix(_)) => g.weights(),
            _ => vec![1.0; self.size()],
        }
    }

    /// `B ψ`. Wall nodes map to zero and are read as zero.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        match &self.kind {
            OperatorKind::LevelMatrix(m) => {
                let v = nalgebra::DVector::from_column_slice(psi);
                (m * v).iter().copied().collect()
            }
            OperatorKind::Hamiltonian(h) => h.apply(psi),
            OperatorKind::Kinetic { masses, hbar } => {
                let g = self.grid.as_ref().expect("grid operator");
                let h = Hamiltonian::from_real_potential(g.clone(), masses.clone(), *hbar, vec![0.0; g.len()]).expect("validated at construction");
                h.apply(psi)
            }
            OperatorKind::Diagonal(f) => {
                let g = self.grid.as_ref().expect("grid operator");
                (0..psi.len()).map(|k| if g.is_boundary(k) { ZERO } else { psi[k] * f(g.point(k)) }).collect()
            }
            OperatorKind::Momentum { axis, hbar } => {
                let g = self.grid.as_ref().expect("grid operator");
                let ny = g.shape().1;
                let stride = if *axis == 0 { ny } else { 1 };
                let c = Complex64::new(0.0, -hbar / (2.0 * g.axis(*axis).spacing()));
                let at = |k: usize| if g.is_boundary(k) { ZERO } else { psi[k] };
                (0..psi.len()).map(|k| if g.is_boundary(k) { ZERO } else { c * (at(k + stride) - at(k - stride)) }).collect()
            }
        }
    }

    /// `⟨ψ|B|ψ⟩` by quadrature.
    pub fn expectation(&self, psi: &[Complex64]) -> Complex64 {
        inner(&self.weights(), psi, &self.apply(psi))
    }
}
