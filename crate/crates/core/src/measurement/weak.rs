use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::pointer::PointerConfig;
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigen;
use crate::observables::{local_expectation, Estimate, OperatorKind, OperatorRep};
use crate::rng;
use crate::trajectories::{linear_cdf, linear_cdf_at, DensitySampler};
use crate::wavefield::{Grid, Wavefunction};

/// Post-selection and run settings of the weak-value protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakSettings {
    pub bin_center: f64,
    pub bin_width: f64,
    pub runs: usize,
    pub seed: u64,
    /// Upper limit on the bin width.
    pub max_bin_width: f64,
    /// Largest allowed `μ·rms(B) / σ_M`.
    pub weakness: f64,
    /// The comparison run uses `factor·μ`.
    pub comparison_factor: f64,
}

impl WeakSettings {
    pub fn new(bin_center: f64, bin_width: f64, runs: usize, seed: u64) -> Self {
        WeakSettings { bin_center, bin_width, runs, seed, max_bin_width: 0.5, weakness: 0.1, comparison_factor: 2.0 }
    }
}

/// One row of the run table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakRow {
    pub run: u64,
    /// Pointer reading relative to its initial centre.
    pub z_b: f64,
    pub z_x: f64,
    pub accepted: bool,
}

/// Protocol result at one coupling strength.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakRun {
    pub strength: f64,
    /// Mean of `z_B/μ` over post-selected runs.
    pub estimate: Estimate,
    pub accepted: usize,
    pub acceptance_rate: f64,
    /// Large-N limit of the estimator, by quadrature of the joint density.
    pub expected: f64,
    /// `|expected − reference|`.
    pub bias: f64,
    pub table: Vec<WeakRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakValueReport {
    /// `𝔅^ψ(x₀)` from the local-expectation field.
    pub local_value: f64,
    /// `|ψ|²`-weighted average of `𝔅^ψ` over the bin.
    pub reference: f64,
    pub primary: WeakRun,
    pub comparison: WeakRun,
    /// Whether the bias at the primary strength is at most the comparison's.
    pub bias_shrinks: bool,
}

/// Dense matrix of a grid operator on the interior nodes.
fn dense(b: &OperatorRep, grid: &Grid, interior: &[usize]) -> DMatrix<Complex64> {
    let n = grid.len();
    let mut m = DMatrix::zeros(interior.len(), interior.len());
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    for (c, &k) in interior.iter().enumerate() {
        e[k] = Complex64::new(1.0, 0.0);
        let col = b.apply(&e);
        for (r, &j) in interior.iter().enumerate() {
            m[(r, c)] = col[j];
        }
        e[k] = Complex64::new(0.0, 0.0);
    }
    m
}

struct Joint {
    psi: Wavefunction,
    center: f64,
}

/// Joint system–pointer state after the impulsive coupling `exp(−iμ B ⊗ p̂_M/ħ)`.
fn couple(psi: &Wavefunction, interior: &[usize], values: &[f64], vectors: &DMatrix<Complex64>, cfg: &PointerConfig, mu: f64) -> Result<Joint> {
    let g = psi.grid();
    let cfg = PointerConfig { strength: mu, ..cfg.clone() };
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pointer = cfg.grid_for(lo, hi)?;
    let az = *pointer.axis(0);
    let nz = az.points;
    let a = DVector::from_iterator(interior.len(), interior.iter().map(|&k| psi.amplitudes()[k]));
    let c = vectors.adjoint() * a;
    let shifted = DMatrix::from_fn(interior.len(), nz, |k, iz| {
        if iz == 0 || iz + 1 == nz {
            Complex64::new(0.0, 0.0)
        } else {
            c[k] * cfg.amplitude(az.coord(iz) - mu * values[k])
        }
    });
    let joint = vectors * shifted;
    let joint_grid = Grid::two_d_with_cap(*g.axis(0), az, usize::MAX)?;
    let mut amps = vec![Complex64::new(0.0, 0.0); g.len() * nz];
    for (r, &i) in interior.iter().enumerate() {
        for iz in 0..nz {
            amps[i * nz + iz] = joint[(r, iz)];
        }
    }
    Ok(Joint { psi: Wavefunction::from_amplitudes(joint_grid, amps, psi.time())?, center: cfg.center })
}

/// Large-N estimator `E[z − c | x ∈ bin]/μ` under the interpolated joint density.
fn expected_reading(joint: &Joint, lo: f64, hi: f64, mu: f64) -> f64 {
    let g = joint.psi.grid();
    let (ax, az) = (g.axis(0), g.axis(1));
    let (nx, nz) = (ax.points, az.points);
    let rho = joint.psi.density();
    let dz = az.spacing();
    let mut m0 = vec![0.0; nx];
    let mut m1 = vec![0.0; nx];
    for i in 0..nx {
        let row = &rho[i * nz..(i + 1) * nz];
        for j in 0..nz - 1 {
            let (za, zb) = (az.coord(j) - joint.center, az.coord(j + 1) - joint.center);
            let (ra, rb) = (row[j], row[j + 1]);
            m0[i] += 0.5 * dz * (ra + rb);
            m1[i] += dz / 6.0 * (za * (2.0 * ra + rb) + zb * (ra + 2.0 * rb));
        }
    }
    bin_integral(ax, &m1, lo, hi) / (mu * bin_integral(ax, &m0, lo, hi))
}

fn bin_integral(ax: &crate::wavefield::Axis, values: &[f64], lo: f64, hi: f64) -> f64 {
    let cdf = linear_cdf(ax, values);
    linear_cdf_at(ax, values, &cdf, hi) - linear_cdf_at(ax, values, &cdf, lo)
}

#[allow(clippy::too_many_arguments)]
fn run_at(
    psi: &Wavefunction,
    interior: &[usize],
    eig: &(Vec<f64>, DMatrix<Complex64>),
    cfg: &PointerConfig,
    settings: &WeakSettings,
    mu: f64,
    purpose: u16,
    reference: f64,
) -> Result<WeakRun> {
    let joint = couple(psi, interior, &eig.0, &eig.1, cfg, mu)?;
    let sampler = DensitySampler::new(&joint.psi)?;
    let (lo, hi) = (settings.bin_center - 0.5 * settings.bin_width, settings.bin_center + 0.5 * settings.bin_width);
    let table: Vec<WeakRow> = (0..settings.runs as u64)
        .into_par_iter()
        .map(|run| {
            let mut r = rng::substream(settings.seed, run, purpose);
            let [x, z] = sampler.sample(&mut r);
            WeakRow { run, z_b: z - joint.center, z_x: x, accepted: (lo..=hi).contains(&x) }
        })
        .collect();
    let samples: Vec<f64> = table.iter().filter(|r| r.accepted).map(|r| r.z_b / mu).collect();
    let acceptance_rate = samples.len() as f64 / settings.runs as f64;
    if samples.is_empty() {
        return Err(Error::eval(format!("no run post-selected into [{lo}, {hi}] out of {} (acceptance rate 0)", settings.runs)));
    }
    let estimate = Estimate::from_samples(&samples, settings.runs - samples.len())?;
    let expected = expected_reading(&joint, lo, hi, mu);
    Ok(WeakRun { strength: mu, accepted: samples.len(), acceptance_rate, estimate, expected, bias: (expected - reference).abs(), table })
}

/// Position-post-selected weak measurement of `B` on a 1D grid state.
///
/// Each run couples a rigid pointer impulsively, reads the pointer `z_B`
/// and then the system position `z_x` from the joint equilibrium density;
/// runs with `z_x` in the bin contribute `z_B/μ`. A second pass at
/// `comparison_factor·μ` exposes the finite-strength bias.
pub fn weak_value_protocol(psi: &Wavefunction, b: &OperatorRep, cfg: &PointerConfig, settings: &WeakSettings) -> Result<WeakValueReport> {
    cfg.validate()?;
    let g = psi.grid();
    if g.dim() != 1 {
        return Err(Error::config("weak-value protocol needs a 1D system state"));
    }
    if matches!(b.kind, OperatorKind::LevelMatrix(_)) || b.grid.as_ref() != Some(g) {
        return Err(Error::config(format!("operator '{}' does not act on the system grid", b.label)));
    }
    if settings.runs == 0 {
        return Err(Error::config("weak-value protocol needs at least one run"));
    }
    if !(settings.bin_width > 0.0) || settings.bin_width > settings.max_bin_width {
        return Err(Error::config(format!("bin width {} must be positive and at most {}", settings.bin_width, settings.max_bin_width)));
    }
    if !(cfg.strength > 0.0) || !(settings.comparison_factor > 1.0) {
        return Err(Error::config("weak protocol needs positive strength and a comparison factor above 1"));
    }
    if cfg.mass.is_some() {
        log::warn!("weak-value protocol couples impulsively; pointer mass is ignored");
    }
    let psi = psi.clone().normalized()?;
    let w = g.weights();
    let bpsi = b.apply(psi.amplitudes());
    let rms = bpsi.iter().zip(&w).map(|(v, w)| v.norm_sqr() * w).sum::<f64>().sqrt();
    let ratio = cfg.strength * rms / cfg.width;
    if ratio > settings.weakness {
        return Err(Error::Regime(format!("coupling is not weak: μ·rms(B)/σ_M = {ratio:.3} exceeds {}; lower the strength", settings.weakness)));
    }
    let interior: Vec<usize> = (0..g.len()).filter(|&k| !g.is_boundary(k)).collect();
    let eig = hermitian_eigen(&dense(b, g, &interior));

    let field = local_expectation(&psi, b)?;
    let local_value =
        field.at([settings.bin_center, 0.0]).ok_or_else(|| Error::eval(format!("local expectation is flagged at x = {}", settings.bin_center)))?;
    let (lo, hi) = (settings.bin_center - 0.5 * settings.bin_width, settings.bin_center + 0.5 * settings.bin_width);
    let rho = psi.density();
    let weighted: Vec<f64> = rho.iter().zip(&field.real).map(|(r, v)| r * v).collect();
    let ax = g.axis(0);
    let mass = bin_integral(ax, &rho, lo, hi);
    if !(mass > 0.0) {
        return Err(Error::eval("post-selection bin carries no probability"));
    }
    let reference = bin_integral(ax, &weighted, lo, hi) / mass;

    let primary = run_at(&psi, &interior, &eig, cfg, settings, cfg.strength, 1, reference)?;
    let comparison = run_at(&psi, &interior, &eig, cfg, settings, settings.comparison_factor * cfg.strength, 2, reference)?;
    let bias_shrinks = primary.bias <= comparison.bias;
    Ok(WeakValueReport { local_value, reference, primary, comparison, bias_shrinks })
}
