use crate::error::{Error, Result};

/// Smallest admissible number of nodes along an axis.
pub const MIN_POINTS: usize = 16;

/// Default per-axis node cap for two-dimensional grids.
pub const MAX_POINTS_2D: usize = 512;

/// A uniformly spaced axis. The end nodes sit on the hard walls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(Error::config(format!("axis bounds must satisfy min < max, got [{min}, {max}]")));
        }
        if points < MIN_POINTS {
            return Err(Error::config(format!("axis needs at least {MIN_POINTS} points, got {points}")));
        }
        Ok(Axis { min, max, points })
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        // Pin the last node exactly to `max`.
        if i + 1 == self.points {
            self.max
        } else {
            self.min + i as f64 * self.spacing()
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.coord(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }

    pub fn length(&self) -> f64 {
        self.max - self.min
    }

    /// Cell index `i` and fraction `s` in `[0, 1]` with `x = coord(i) + s * dx`.
    ///
    /// Positions outside the axis are clamped onto it.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let dx = self.spacing();
        let u = ((x - self.min) / dx).clamp(0.0, (self.points - 1) as f64);
        let i = (u.floor() as usize).min(self.points - 2);
        (i, u - i as f64)
    }

    /// Index of the node nearest to `x` (clamped).
    pub fn nearest(&self, x: f64) -> usize {
        let (i, s) = self.locate(x);
        if s < 0.5 {
            i
        } else {
            i + 1
        }
    }

    /// Trapezoid quadrature weights.
    pub fn weights(&self) -> Vec<f64> {
        let dx = self.spacing();
        let mut w = vec![dx; self.points];
        w[0] = 0.5 * dx;
        w[self.points - 1] = 0.5 * dx;
        w
    }
}

/// A one- or two-dimensional tensor grid.
///
/// Two-dimensional data is stored x-major: node `(i, j)` lives at
/// `i * ny + j`, so a fixed-`x` column along `y` is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn one_d(axis: Axis) -> Self {
        Grid { axes: vec![axis] }
    }

    pub fn line(min: f64, max: f64, points: usize) -> Result<Self> {
        Ok(Grid::one_d(Axis::new(min, max, points)?))
    }

    /// Two-dimensional grid, subject to the default per-axis cap.
    pub fn two_d(x: Axis, y: Axis) -> Result<Self> {
        Self::two_d_with_cap(x, y, MAX_POINTS_2D)
    }

    pub fn two_d_with_cap(x: Axis, y: Axis, cap: usize) -> Result<Self> {
        if x.points > cap || y.points > cap {
            return Err(Error::Resource(format!("2D grid {}x{} exceeds the per-axis cap of {cap}", x.points, y.points)));
        }
        Ok(Grid { axes: vec![x, y] })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> (usize, usize) {
        match self.axes.len() {
            1 => (self.axes[0].points, 1),
            _ => (self.axes[0].points, self.axes[1].points),
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.shape().1 + j
    }

    /// `(i, j)` from a flat index (`j = 0` in 1D).
    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize) {
        let ny = self.shape().1;
        (idx / ny, idx % ny)
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (nx, ny) = self.shape();
        let (i, j) = self.unravel(idx);
        let on_x = i == 0 || i + 1 == nx;
        if self.dim() == 1 {
            on_x
        } else {
            on_x || j == 0 || j + 1 == ny
        }
    }

    /// Coordinates of node `idx` (second entry is 0 in 1D).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.unravel(idx);
        if self.dim() == 1 {
            [self.axes[0].coord(i), 0.0]
        } else {
            [self.axes[0].coord(i), self.axes[1].coord(j)]
        }
    }

    /// Product trapezoid weights.
    pub fn weights(&self) -> Vec<f64> {
        let wx = self.axes[0].weights();
        if self.dim() == 1 {
            return wx;
        }
        let wy = self.axes[1].weights();
        let mut w = Vec::with_capacity(self.len());
        for a in &wx {
            for b in &wy {
                w.push(a * b);
            }
        }
        w
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.axes.iter().zip(p).all(|(a, &x)| a.contains(x))
    }

    /// Flat indices and weights of the nodes spanning the cell that holds
    /// `p` (two in 1D, four in 2D). Positions are clamped onto the grid.
    pub fn stencil(&self, p: [f64; 2]) -> ([usize; 4], [f64; 4]) {
        let (i, s) = self.axes[0].locate(p[0]);
        if self.dim() == 1 {
            return ([i, i + 1, i, i], [1.0 - s, s, 0.0, 0.0]);
        }
        let (j, t) = self.axes[1].locate(p[1]);
        let ny = self.axes[1].points;
        ([i * ny + j, i * ny + j + 1, (i + 1) * ny + j, (i + 1) * ny + j + 1], [(1.0 - s) * (1.0 - t), (1.0 - s) * t, s * (1.0 - t), s * t])
    }

    /// Linear (1D) or bilinear (2D) interpolation of nodal values.
    pub fn interpolate<T>(&self, values: &[T], p: [f64; 2]) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let (idx, w) = self.stencil(p);
        let n = if self.dim() == 1 { 2 } else { 4 };
        let mut acc = values[idx[0]] * w[0];
        for k in 1..n {
            acc = acc + values[idx[k]] * w[k];
        }
        acc
    }
}
