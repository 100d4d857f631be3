//! Blocked inverse-distance pair sums.
//!
//! Rows are grouped into strips of [`STRIP`] indices. Each strip is summed
//! row by row with four interleaved accumulators, and strip totals are then
//! added in strip order. The grouping is a function of the problem size only,
//! which keeps results bit-identical for any number of workers.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;


use crate::exec::Executor;
use crate::Vec3;

/// Rows per reduction strip.
pub const STRIP: usize = 256;

/// Pair distances below this are clamped.
pub const EPS_MIN: f64 = 1e-12;
const EPS_MIN_SQ: f64 = EPS_MIN * EPS_MIN;

/// Structure-of-arrays copy of a point set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Points {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl Points {
    pub fn from_slice(p: &[Vec3]) -> Self {
        let mut pts = Points {
            x: Vec::with_capacity(p.len()),
            y: Vec::with_capacity(p.len()),
            z: Vec::with_capacity(p.len()),
        };
        for q in p {
            pts.x.push(q[0]);
            pts.y.push(q[1]);
            pts.z.push(q[2]);
        }
        pts
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn view(&self) -> View<'_> {
        View { x: &self.x, y: &self.y, z: &self.z }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct View<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub z: &'a [f64],
}

impl<'a> View<'a> {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn slice(&self, range: core::ops::Range<usize>) -> View<'a> {
        View {
            x: &self.x[range.clone()],
            y: &self.y[range.clone()],
            z: &self.z[range],
        }
    }
}

/// A sum of inverse distances together with its clamping diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairSum {
    pub sum: f64,
    pub clamped: u64,
    pub pairs: u64,
}

impl PairSum {
    fn add(self, other: PairSum) -> PairSum {
        PairSum {
            sum: self.sum + other.sum,
            clamped: self.clamped + other.clamped,
            pairs: self.pairs + other.pairs,
        }
    }
}

#[inline]
fn row(px: f64, py: f64, pz: f64, q: View<'_>) -> (f64, u64) {
    let n = q.len();
    let (x, y, z) = (&q.x[..n], &q.y[..n], &q.z[..n]);
    let mut acc = [0.0f64; 4];
    let mut clamped = 0u64;
    let body = n - n % 4;
    let mut j = 0;
    while j < body {
        for l in 0..4 {
            let dx = x[j + l] - px;
            let dy = y[j + l] - py;
            let dz = z[j + l] - pz;
            let d2 = dx * dx + dy * dy + dz * dz;
            clamped += (d2 < EPS_MIN_SQ) as u64;
            acc[l] += 1.0 / d2.max(EPS_MIN_SQ).sqrt();
        }
        j += 4;
    }
    for (l, jj) in (body..n).enumerate() {
        let dx = x[jj] - px;
        let dy = y[jj] - py;
        let dz = z[jj] - pz;
        let d2 = dx * dx + dy * dy + dz * dz;
        clamped += (d2 < EPS_MIN_SQ) as u64;
        acc[l] += 1.0 / d2.max(EPS_MIN_SQ).sqrt();
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3]), clamped)
}

fn strips(rows: usize) -> usize {
    rows.div_ceil(STRIP)
}

fn reduce(parts: Vec<PairSum>) -> PairSum {
    parts.into_iter().fold(PairSum::default(), PairSum::add)
}

/// `Σ_{i<j} 1/|p_i − p_j|` over one point set.
pub fn upper_sum<E: Executor>(p: View<'_>, exec: &E) -> PairSum {
    let n = p.len();
    let parts = exec.map(strips(n), |s| {
        let mut out = PairSum::default();
        for i in s * STRIP..((s + 1) * STRIP).min(n) {
            let tail = p.slice(i + 1..n);
            let (sum, clamped) = row(p.x[i], p.y[i], p.z[i], tail);
            out = out.add(PairSum { sum, clamped, pairs: tail.len() as u64 });
        }
        out
    });
    reduce(parts)
}

/// `Σ_{i,j} 1/|a_i − b_j|` between two point sets.
pub fn cross_sum<E: Executor>(a: View<'_>, b: View<'_>, exec: &E) -> PairSum {
    let n = a.len();
    if n == 0 || b.is_empty() {
        return PairSum::default();
    }
    let parts = exec.map(strips(n), |s| {
        let mut out = PairSum::default();
        for i in s * STRIP..((s + 1) * STRIP).min(n) {
            let (sum, clamped) = row(a.x[i], a.y[i], a.z[i], b);
            out = out.add(PairSum { sum, clamped, pairs: b.len() as u64 });
        }
        out
    });
    reduce(parts)
}
