use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::pointer::PointerConfig;
use super::record::MeasurementRecord;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, projector};
use crate::observables::{OperatorKind, OperatorRep};
use crate::rng;
use crate::trajectories::DensitySampler;
use crate::wavefield::{couple_impulse, HybridHamiltonian, HybridState, Wavefunction};

/// Relative tolerance for grouping degenerate eigenvalues.
const DEGENERACY: f64 = 1e-9;

/// One distinct eigenvalue of B and the eigenvectors spanning its space.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenspace {
    pub value: f64,
    pub vectors: Vec<DVector<Complex64>>,
}

pub(crate) fn level_matrix(b: &OperatorRep) -> Result<&DMatrix<Complex64>> {
    match &b.kind {
        OperatorKind::LevelMatrix(m) => Ok(m),
        _ => Err(Error::config(format!("operator '{}' is not a level matrix", b.label))),
    }
}

pub(crate) fn eigenspaces(m: &DMatrix<Complex64>) -> Vec<Eigenspace> {
    let (values, vectors) = hermitian_eigen(m);
    let scale = values.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let mut spaces: Vec<Eigenspace> = Vec::new();
    for (k, &v) in values.iter().enumerate() {
        let col = vectors.column(k).into_owned();
        match spaces.last_mut() {
            Some(s) if (v - s.value).abs() <= DEGENERACY * scale => s.vectors.push(col),
            _ => spaces.push(Eigenspace { value: v, vectors: vec![col] }),
        }
    }
    spaces
}

/// Hybrid state after the coupling window, prepared once and sampled for
/// any number of runs.
#[derive(Debug)]
pub struct StrongMeasurement {
    pub pre: DVector<Complex64>,
    pub spaces: Vec<Eigenspace>,
    pub state: HybridState,
    /// Envelope areas of the pointer marginal (Voronoi cells around the
    /// shifted centres), normalized.
    pub probabilities: Vec<f64>,
    /// Largest Bhattacharyya overlap of neighbouring envelopes.
    pub overlap: f64,
    centers: Vec<f64>,
    sampler: DensitySampler,
}

impl StrongMeasurement {
    pub fn prepare(psi: &DVector<Complex64>, b: &OperatorRep, cfg: &PointerConfig) -> Result<Self> {
        cfg.validate()?;
        let m = level_matrix(b)?;
        if m.nrows() != psi.len() {
            return Err(Error::config("state and operator dimensions differ"));
        }
        let norm = psi.norm();
        if !(norm > 0.0) {
            return Err(Error::config("cannot measure a zero state"));
        }
        let pre = psi / Complex64::new(norm, 0.0);
        let spaces = eigenspaces(m);
        let gap = spaces.windows(2).map(|w| w[1].value - w[0].value).fold(f64::INFINITY, f64::min);
        let overlap = if gap.is_finite() { cfg.overlap(gap) } else { 0.0 };
        let separation = cfg.strength.abs() * gap / cfg.final_width();
        if gap.is_finite() && (separation < cfg.min_separation || overlap > cfg.max_overlap) {
            return Err(Error::Regime(format!(
                "pointer envelopes are not disjoint (separation {separation:.2} widths, overlap {overlap:.2e}); \
                 increase the strength or use the weak-value protocol"
            )));
        }
        let lo = spaces[0].value;
        let hi = spaces[spaces.len() - 1].value;
        let grid = cfg.grid_for(lo, hi)?;
        let state = match cfg.mass {
            None => impulse(&pre, &spaces, cfg, &grid)?,
            Some(mass) => {
                let h = HybridHamiltonian::new(DMatrix::zeros(pre.len(), pre.len()), m.clone(), Some(mass), cfg.hbar)?;
                let start = HybridState::product(&pre, &grid, |z| cfg.amplitude(z))?;
                couple_impulse(&start, &h, cfg.strength, cfg.window, cfg.steps)?
            }
        };
        let centers: Vec<f64> = spaces.iter().map(|s| cfg.shifted_center(s.value)).collect();
        let marginal = state.pointer_marginal();
        let amps: Vec<Complex64> = marginal.iter().map(|r| Complex64::new(r.sqrt(), 0.0)).collect();
        let pointer_psi = Wavefunction::from_amplitudes(grid.clone(), amps, cfg.window)?;
        let sampler = DensitySampler::new(&pointer_psi)?;
        let probabilities = envelope_areas(&grid, &marginal, &centers);
        Ok(StrongMeasurement { pre, spaces, state, probabilities, overlap, centers, sampler })
    }

    /// Index of the envelope whose centre is nearest to `z`.
    pub fn envelope_of(&self, z: f64) -> usize {
        self.centers.iter().enumerate().min_by(|a, b| (a.1 - z).abs().total_cmp(&(b.1 - z).abs())).map(|(k, _)| k).unwrap_or(0)
    }

    /// Effective collapse: the normalized level vector at pointer position `z`.
    pub fn collapse_at(&self, z: f64) -> Result<DVector<Complex64>> {
        let v = self.state.slice_at(z)?;
        let n = v.norm();
        if !(n > 0.0) {
            return Err(Error::eval(format!("pointer position {z} carries no amplitude")));
        }
        Ok(v / Complex64::new(n, 0.0))
    }

    /// Run `run` of master `seed`: pointer position drawn from the final
    /// pointer marginal, outcome from the envelope containing it.
    pub fn sample(&self, seed: u64, run: u64) -> Result<MeasurementRecord> {
        let mut r = rng::stream(seed, run);
        let z = self.sampler.sample(&mut r)[0];
        let k = self.envelope_of(z);
        let post = self.collapse_at(z)?;
        Ok(MeasurementRecord {
            outcome: k,
            value: self.spaces[k].value,
            pointer: Some(z),
            probability: self.probabilities[k],
            pre: self.pre.clone(),
            post,
            seed,
            run,
        })
    }

    /// `Σ_j P_j |post_j⟩⟨post_j|` from envelope areas and collapsed states.
    pub fn unconditional_state(&self) -> Result<DMatrix<Complex64>> {
        let d = self.pre.len();
        let mut rho = DMatrix::zeros(d, d);
        for (k, &p) in self.probabilities.iter().enumerate() {
            if p > 0.0 {
                rho += projector(&self.collapse_at(self.centers[k])?) * Complex64::new(p, 0.0);
            }
        }
        Ok(rho)
    }

    /// Levels' reduced state of the post-coupling hybrid state, unit trace.
    pub fn reduced_state(&self) -> DMatrix<Complex64> {
        let rho = self.state.reduced_levels();
        let tr = rho.trace();
        rho / tr
    }
}

/// Exact translation of each eigencomponent by `μ b` for a rigid pointer.
fn impulse(pre: &DVector<Complex64>, spaces: &[Eigenspace], cfg: &PointerConfig, grid: &crate::wavefield::Grid) -> Result<HybridState> {
    let d = pre.len();
    let nz = grid.len();
    let ax = grid.axis(0);
    let mut amps = vec![Complex64::new(0.0, 0.0); d * nz];
    for s in spaces {
        let mut component = DVector::zeros(d);
        for v in &s.vectors {
            component += v * v.dotc(pre);
        }
        let shift = cfg.strength * s.value;
        for iz in 1..nz - 1 {
            let phi = cfg.amplitude(ax.coord(iz) - shift);
            for l in 0..d {
                amps[l * nz + iz] += component[l] * phi;
            }
        }
    }
    HybridState::new(d, grid.clone(), amps, cfg.window)
}

fn envelope_areas(grid: &crate::wavefield::Grid, marginal: &[f64], centers: &[f64]) -> Vec<f64> {
    let ax = grid.axis(0);
    let w = grid.weights();
    let mut areas = vec![0.0; centers.len()];
    for (iz, (m, w)) in marginal.iter().zip(&w).enumerate() {
        let z = ax.coord(iz);
        let k = centers.iter().enumerate().min_by(|a, b| (a.1 - z).abs().total_cmp(&(b.1 - z).abs())).map(|(k, _)| k).unwrap_or(0);
        areas[k] += m * w;
    }
    let total: f64 = areas.iter().sum();
    areas.iter().map(|a| a / total).collect()
}

/// Single strong measurement (run 0 of `seed`).
pub fn strong_measure(psi: &DVector<Complex64>, b: &OperatorRep, cfg: &PointerConfig, seed: u64) -> Result<MeasurementRecord> {
    StrongMeasurement::prepare(psi, b, cfg)?.sample(seed, 0)
}

/// `runs` independent strong measurements of the same prepared state.
pub fn strong_measure_runs(psi: &DVector<Complex64>, b: &OperatorRep, cfg: &PointerConfig, seed: u64, runs: usize) -> Result<Vec<MeasurementRecord>> {
    let setup = StrongMeasurement::prepare(psi, b, cfg)?;
    (0..runs as u64).into_par_iter().map(|r| setup.sample(seed, r)).collect()
}
