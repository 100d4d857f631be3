//! Discretized Brownian paths and the Wiener-measure-preserving moves used by
//! the sampler.
//!
//! Increments are the canonical representation. Positions are always the
//! left-to-right prefix sum of the increments, so a move that leaves an
//! increment untouched leaves every earlier position bit-identical.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{ModelParams, SeedSpec, TimeGrid};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    grid: TimeGrid,
    increments: Vec<Vec3>,
    positions: Vec<Vec3>,
}

impl PathSample {
    pub fn from_increments(grid: TimeGrid, increments: Vec<Vec3>) -> Result<Self> {
        if increments.len() != grid.n_steps() {
            return Err(Error::Parameter("increment count must equal n_steps"));
        }
        if increments.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("increments must be finite"));
        }
        let positions = prefix_sum(&increments);
        Ok(Self { grid, increments, positions })
    }

    /// Builds a path from node positions; `positions[0]` must be the origin.
    /// Positions are rebuilt from the differenced increments.
    pub fn from_positions(grid: TimeGrid, positions: &[Vec3]) -> Result<Self> {
        if positions.len() != grid.node_count() {
            return Err(Error::Parameter("position count must equal n_steps + 1"));
        }
        if positions[0] != [0.0; 3] {
            return Err(Error::Parameter("path must start at the origin"));
        }
        let increments = positions.windows(2).map(|w| sub(w[1], w[0])).collect();
        Self::from_increments(grid, increments)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_steps(&self) -> usize {
        self.grid.n_steps()
    }

    pub fn dt(&self) -> f64 {
        self.grid.dt()
    }

    pub fn increments(&self) -> &[Vec3] {
        &self.increments
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn endpoint(&self) -> Vec3 {
        self.positions[self.positions.len() - 1]
    }

    fn with_increments(&self, increments: Vec<Vec3>, from: usize) -> PathSample {
        let mut positions = self.positions.clone();
        for i in from..=increments.len() {
            positions[i] = add(positions[i - 1], increments[i - 1]);
        }
        PathSample { grid: self.grid, increments, positions }
    }
}

fn prefix_sum(increments: &[Vec3]) -> Vec<Vec3> {
    let mut positions = Vec::with_capacity(increments.len() + 1);
    let mut cur = [0.0; 3];
    positions.push(cur);
    for inc in increments {
        cur = add(cur, *inc);
        positions.push(cur);
    }
    positions
}

#[inline]
pub(crate) fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn gaussian3<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)]
}

/// One increment of the base law: mean `μΔe₁`, covariance `ΔI₃`.
fn base_increment<R: Rng + ?Sized>(rng: &mut R, sd: f64, drift: f64) -> Vec3 {
    let g = gaussian3(rng);
    [g[0] * sd + drift, g[1] * sd, g[2] * sd]
}

/// Draws a path with independent increments `N(μΔe₁, ΔI₃)`.
pub fn sample_path(params: &ModelParams, seed: &SeedSpec) -> Result<PathSample> {
    sample_path_with(params, &mut seed.rng())
}

pub fn sample_path_with<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<PathSample> {
    params.validate()?;
    let grid = params.grid()?;
    let dt = grid.dt();
    let sd = dt.sqrt();
    let drift = params.drift_mu * dt;
    let increments = (0..grid.n_steps()).map(|_| base_increment(rng, sd, drift)).collect();
    PathSample::from_increments(grid, increments)
}

/// A proper rotation of R³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation([[f64; 3]; 3]);

impl Rotation {
    const TOL: f64 = 1e-12;

    pub const IDENTITY: Rotation = Rotation([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Accepts `m` if `mᵀm = I` and `det m = +1` to within `1e-12`.
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if !((dot - want).abs() <= Self::TOL) {
                    return Err(Error::Parameter("rotation is not orthogonal"));
                }
            }
        }
        let r = Rotation(m);
        if !((r.det() - 1.0).abs() <= Self::TOL) {
            return Err(Error::Parameter("rotation must have determinant +1"));
        }
        Ok(r)
    }

    /// Rotation from a unit quaternion `(w, x, y, z)`; the input is normalized.
    pub fn from_quaternion(q: [f64; 4]) -> Result<Self> {
        let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Parameter("quaternion must be nonzero and finite"));
        }
        let [w, x, y, z] = q.map(|c| c / norm);
        Ok(Rotation([
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ]))
    }

    /// Uniform (Haar) rotation from a normalized Gaussian quaternion.
    pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let q = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            if let Ok(r) = Self::from_quaternion(q) {
                return r;
            }
        }
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.0
    }

    pub fn transpose(&self) -> Self {
        let m = self.0;
        Rotation([[m[0][0], m[1][0], m[2][0]], [m[0][1], m[1][1], m[2][1]], [m[0][2], m[1][2], m[2][2]]])
    }

    fn det(&self) -> f64 {
        let m = self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    #[inline]
    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }
}

/// Rotates increments `k+1..=n` (1-based) by `rotation`; positions up to
/// node `k` are untouched and the tail pivots rigidly about node `k`.
pub fn apply_pivot(path: &PathSample, k: usize, rotation: &Rotation) -> Result<PathSample> {
    let n = path.n_steps();
    if k < 1 || k > n {
        return Err(Error::Parameter("pivot index must lie in 1..=n_steps"));
    }
    // Re-validates matrices built by hand.
    let rotation = Rotation::new(rotation.0)?;
    let mut inc = path.increments.clone();
    for xi in &mut inc[k..] {
        *xi = rotation.apply(*xi);
    }
    Ok(path.with_increments(inc, k + 1))
}

/// Prior-preserving autoregressive refresh of every increment:
/// `ξ' = √(1−s²)(ξ − μΔe₁) + sζ + μΔe₁` with fresh `ζ ~ N(0, ΔI₃)`.
pub fn apply_global_autoregressive<R: Rng + ?Sized>(
    path: &PathSample,
    s: f64,
    rng: &mut R,
    params: &ModelParams,
) -> Result<PathSample> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Parameter("autoregressive step must lie in (0, 1]"));
    }
    check_grid(path, params)?;
    let dt = path.dt();
    let sd = dt.sqrt();
    let drift = params.drift_mu * dt;
    let keep = (1.0 - s * s).sqrt();
    let inc = path
        .increments
        .iter()
        .map(|xi| {
            let g = gaussian3(rng);
            [
                keep * (xi[0] - drift) + s * sd * g[0] + drift,
                keep * xi[1] + s * sd * g[1],
                keep * xi[2] + s * sd * g[2],
            ]
        })
        .collect();
    Ok(path.with_increments(inc, 1))
}

/// Redraws increments `i0..i0+len` (1-based) from the base law; the tail
/// after the block translates rigidly.
pub fn resample_block<R: Rng + ?Sized>(
    path: &PathSample,
    i0: usize,
    len: usize,
    rng: &mut R,
    params: &ModelParams,
) -> Result<PathSample> {
    let n = path.n_steps();
    if len == 0 || i0 < 1 || i0 + len - 1 > n {
        return Err(Error::Parameter("block must be non-empty and lie in 1..=n_steps"));
    }
    check_grid(path, params)?;
    let dt = path.dt();
    let sd = dt.sqrt();
    let drift = params.drift_mu * dt;
    let mut inc = path.increments.clone();
    for xi in &mut inc[i0 - 1..i0 - 1 + len] {
        *xi = base_increment(rng, sd, drift);
    }
    Ok(path.with_increments(inc, i0))
}

fn check_grid(path: &PathSample, params: &ModelParams) -> Result<()> {
    if params.n_steps != path.n_steps() || params.horizon != path.grid.horizon() {
        return Err(Error::Parameter("path grid does not match the model parameters"));
    }
    Ok(())
}
