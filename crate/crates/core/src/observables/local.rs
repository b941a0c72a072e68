use num_complex::Complex64;

use super::operator::{OperatorKind, OperatorRep};
use crate::error::{Error, Result};
use crate::trajectories::{fill_flagged, low_density_flags, Ensemble};
use crate::wavefield::{Grid, Wavefunction};

/// `C^ψ = (Bψ)/ψ` per node and its real part `𝔅^ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalExpectationField {
    pub grid: Grid,
    pub complex: Vec<Complex64>,
    pub real: Vec<f64>,
    /// Wall and low-density nodes; their values are copied from the
    /// nearest unflagged node.
    pub flags: Vec<bool>,
    pub operator: String,
    pub time: f64,
}

impl LocalExpectationField {
    /// `∫|ψ|² C^ψ` by quadrature.
    pub fn weighted_integral(&self, psi: &Wavefunction) -> Complex64 {
        let w = self.grid.weights();
        psi.amplitudes().iter().zip(&self.complex).zip(&w).map(|((a, c), w)| c * (a.norm_sqr() * w)).sum()
    }

    /// `𝔅^ψ` at `p`, or `None` when the interpolation touches a flagged node.
    pub fn at(&self, p: [f64; 2]) -> Option<f64> {
        let (idx, w) = self.grid.stencil(p);
        if idx.iter().zip(&w).any(|(&k, &w)| w > 0.0 && self.flags[k]) {
            return None;
        }
        Some(self.grid.interpolate(&self.real, p))
    }

    /// Variance of `𝔅^ψ` over unflagged nodes (unweighted).
    pub fn unflagged_variance(&self) -> f64 {
        let vals: Vec<f64> = self.real.iter().zip(&self.flags).filter(|(_, f)| !**f).map(|(v, _)| *v).collect();
        if vals.is_empty() {
            return 0.0;
        }
        let n = vals.len() as f64;
        let m = vals.iter().sum::<f64>() / n;
        vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
    }
}

pub fn local_expectation(psi: &Wavefunction, b: &OperatorRep) -> Result<LocalExpectationField> {
    if matches!(b.kind, OperatorKind::LevelMatrix(_)) || b.grid.as_ref() != Some(psi.grid()) {
        return Err(Error::config(format!("operator '{}' does not act on this wavefunction's grid", b.label)));
    }
    let flags = low_density_flags(psi);
    let bpsi = b.apply(psi.amplitudes());
    let a = psi.amplitudes();
    let mut re = vec![0.0; a.len()];
    let mut im = vec![0.0; a.len()];
    for k in 0..a.len() {
        if !flags[k] {
            let c = bpsi[k] / a[k];
            re[k] = c.re;
            im[k] = c.im;
        }
    }
    fill_flagged(psi.grid(), &flags, &mut re);
    fill_flagged(psi.grid(), &flags, &mut im);
    let complex = re.iter().zip(&im).map(|(r, i)| Complex64::new(*r, *i)).collect();
    Ok(LocalExpectationField { grid: psi.grid().clone(), complex, real: re, flags, operator: b.label.clone(), time: psi.time() })
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    /// Number of evaluations averaged.
    pub n: usize,
    /// Evaluations dropped (flagged nodes or failed trajectories).
    pub flagged: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[f64], flagged: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::eval(format!("all {flagged} evaluations were flagged")));
        }
        let n = samples.len() as f64;
        let value = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 { samples.iter().map(|s| (s - value).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        Ok(Estimate { value, std_error: (var / n).sqrt(), n: samples.len(), flagged })
    }

    /// `|value − target| ≤ k·SE` (with a tiny absolute slack for SE = 0).
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error + 1e-12 * (1.0 + target.abs())
    }
}

/// Mean of `𝔅^ψ(x^ξ(t))` over the ensemble at stored sample `step`.
pub fn ensemble_expectation(ensemble: &Ensemble, field: &LocalExpectationField, step: usize) -> Result<Estimate> {
    let mut samples = Vec::with_capacity(ensemble.len());
    let mut flagged = 0;
    for tr in &ensemble.trajectories {
        match (tr.failed, field.at(tr.position(step))) {
            (false, Some(v)) => samples.push(v),
            _ => flagged += 1,
        }
    }
    Estimate::from_samples(&samples, flagged)
}

/// Mean over ξ of `𝔅^ψ(x^ξ(t2), t2) · ℱ^ψ(x^ξ(t1), t1)`.
pub fn two_time_correlation(
    ensemble: &Ensemble,
    b_field: &LocalExpectationField,
    step2: usize,
    f_field: &LocalExpectationField,
    step1: usize,
) -> Result<Estimate> {
    if step1 > step2 {
        return Err(Error::config("two-time correlation needs t1 <= t2"));
    }
    let mut samples = Vec::with_capacity(ensemble.len());
    let mut flagged = 0;
    for tr in &ensemble.trajectories {
        match (tr.failed, b_field.at(tr.position(step2)), f_field.at(tr.position(step1))) {
            (false, Some(b), Some(f)) => samples.push(b * f),
            _ => flagged += 1,
        }
    }
    Estimate::from_samples(&samples, flagged)
}
