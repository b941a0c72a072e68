use std::fmt::Write as _;

use crate::wavefield::Wavefunction;

use super::sampling::{linear_cdf, linear_cdf_at};

/// One Bohmian trajectory `q^ξ(t)`, sampled at `t0 + n dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub label: u64,
    /// Master seed the initial position was drawn under.
    pub seed: u64,
    pub t0: f64,
    /// Positions per sample; the second entry is unused in 1D.
    pub positions: Vec<[f64; 2]>,
    /// Set when a non-finite velocity was met; the position is then frozen.
    pub failed: bool,
    /// Number of wall reflections applied while integrating.
    pub reflections: usize,
}

impl Trajectory {
    pub fn start(label: u64, seed: u64, t0: f64, position: [f64; 2]) -> Self {
        Trajectory { label, seed, t0, positions: vec![position], failed: false, reflections: 0 }
    }

    pub fn position(&self, step: usize) -> [f64; 2] {
        self.positions[step]
    }

    pub fn last(&self) -> [f64; 2] {
        self.positions[self.positions.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// A labelled set of trajectories sharing time step and horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub dim: usize,
    pub trajectories: Vec<Trajectory>,
    /// Identifier of the wavefunction the ensemble was sampled from.
    pub source: String,
    pub seed: u64,
    /// Time step between stored samples (0 until integrated).
    pub dt: f64,
}

impl Ensemble {
    pub fn new(dim: usize, trajectories: Vec<Trajectory>, source: impl Into<String>, seed: u64) -> Self {
        Ensemble { dim, trajectories, source: source.into(), seed, dt: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// Number of stored samples per trajectory.
    pub fn steps(&self) -> usize {
        self.trajectories.first().map_or(0, |t| t.len())
    }

    pub fn time(&self, step: usize) -> f64 {
        self.trajectories.first().map_or(0.0, |t| t.t0) + step as f64 * self.dt
    }

    pub fn failed_count(&self) -> usize {
        self.trajectories.iter().filter(|t| t.failed).count()
    }

    pub fn reflection_count(&self) -> usize {
        self.trajectories.iter().map(|t| t.reflections).sum()
    }

    /// Positions of non-failed members at `step`.
    pub fn positions_at(&self, step: usize) -> Vec<[f64; 2]> {
        self.trajectories.iter().filter(|t| !t.failed).map(|t| t.position(step)).collect()
    }

    /// Rows `xi,t,x1[,x2]` for every member and stored sample.
    pub fn to_csv_rows(&self) -> String {
        let mut s = String::new();
        s.push_str(if self.dim == 1 { "xi,t,x1\n" } else { "xi,t,x1,x2\n" });
        for tr in &self.trajectories {
            for (n, p) in tr.positions.iter().enumerate() {
                let t = tr.t0 + n as f64 * self.dt;
                if self.dim == 1 {
                    let _ = writeln!(s, "{},{:e},{:e}", tr.label, t, p[0]);
                } else {
                    let _ = writeln!(s, "{},{:e},{:e},{:e}", tr.label, t, p[0], p[1]);
                }
            }
        }
        s
    }
}

/// Number of the given index pairs whose 1D ordering changes over the
/// stored samples.
pub fn count_crossings(ensemble: &Ensemble, pairs: &[(usize, usize)]) -> usize {
    pairs
        .iter()
        .filter(|&&(a, b)| {
            let (ta, tb) = (&ensemble.trajectories[a], &ensemble.trajectories[b]);
            let s0 = (ta.position(0)[0] - tb.position(0)[0]).signum();
            (0..ta.len().min(tb.len())).any(|n| (ta.position(n)[0] - tb.position(n)[0]).signum() != s0)
        })
        .count()
}

/// L1 distance between the histogram of `samples` along `axis` (bins over
/// `[lo, hi]` plus one overflow bin) and the matching bin probabilities of
/// the interpolated marginal of |ψ|².
pub fn histogram_l1(samples: &[[f64; 2]], psi: &Wavefunction, axis: usize, lo: f64, hi: f64, bins: usize) -> f64 {
    let ax = *psi.grid().axis(axis);
    let marginal = marginal(psi, axis);
    let cdf = linear_cdf(&ax, &marginal);
    let total = cdf[cdf.len() - 1];
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins + 1];
    for p in samples {
        let x = p[axis];
        let b = if x >= lo && x < hi { (((x - lo) / width) as usize).min(bins - 1) } else { bins };
        counts[b] += 1;
    }
    let n = samples.len() as f64;
    let mut inside = 0.0;
    let mut l1 = 0.0;
    for (b, &c) in counts.iter().enumerate().take(bins) {
        let a = lo + b as f64 * width;
        let p = (linear_cdf_at(&ax, &marginal, &cdf, a + width) - linear_cdf_at(&ax, &marginal, &cdf, a)) / total;
        inside += p;
        l1 += (c as f64 / n - p).abs();
    }
    l1 + (counts[bins] as f64 / n - (1.0 - inside)).abs()
}

/// L1 distance between the histogram of `samples` along `axis` and the
/// uniform law over `bins` equal-probability bins of the interpolated
/// marginal of |ψ|². The i.i.d. value does not depend on the shape of ψ.
pub fn quantile_histogram_l1(samples: &[[f64; 2]], psi: &Wavefunction, axis: usize, bins: usize) -> f64 {
    let g = psi.grid();
    let ax = *g.axis(axis);
    let marginal = marginal(psi, axis);
    let cdf = linear_cdf(&ax, &marginal);
    let total = cdf[cdf.len() - 1];
    let mut counts = vec![0usize; bins];
    for p in samples {
        let u = linear_cdf_at(&ax, &marginal, &cdf, p[axis]) / total;
        counts[((u * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let n = samples.len() as f64;
    counts.iter().map(|&c| (c as f64 / n - 1.0 / bins as f64).abs()).sum()
}

fn marginal(psi: &Wavefunction, axis: usize) -> Vec<f64> {
    let g = psi.grid();
    let rho = psi.density();
    if g.dim() == 1 {
        return rho;
    }
    let (nx, ny) = g.shape();
    if axis == 0 {
        let wy = g.axis(1).weights();
        (0..nx).map(|i| (0..ny).map(|j| wy[j] * rho[i * ny + j]).sum()).collect()
    } else {
        let wx = g.axis(0).weights();
        (0..ny).map(|j| (0..nx).map(|i| wx[i] * rho[i * ny + j]).sum()).collect()
    }
}
