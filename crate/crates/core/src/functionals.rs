//! Pairwise path functionals: Coulomb self-energy, gyration radius, the
//! discrete Hölder product and incremental energy changes.
//!
//! The energy is the full ordered off-diagonal sum
//! `Δ² Σ_{i≠j} 1/|x_i − x_j|` over all `n + 1` grid nodes, so each unordered
//! pair contributes twice.


#[allow(unused_imports)]
use num_traits::Float;
use crate::error::{Error, Result};
use crate::exec::{Executor, Serial};
use crate::kernel::{self, PairSum, Points, EPS_MIN};
use crate::path::{apply_pivot, sub, PathSample, Rotation};
use crate::Vec3;

/// Functionals of one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathFunctionals {
    pub coulomb: f64,
    pub rg: f64,
    pub endpoint_x1: f64,
    /// Pair distances clamped to `EPS_MIN` while computing `coulomb`.
    pub clamped: u64,
}

/// Energy with its clamping diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoulombEnergy {
    pub value: f64,
    pub clamped: u64,
}

/// Fails when more than 0.1% of the pairs needed clamping.
pub(crate) fn check_clamping(s: &PairSum) -> Result<()> {
    if s.clamped > 0 && s.clamped * 1000 > s.pairs {
        return Err(Error::DegeneratePath { clamped: s.clamped, pairs: s.pairs });
    }
    Ok(())
}

pub fn coulomb_energy(path: &PathSample) -> Result<CoulombEnergy> {
    coulomb_energy_with(path, &Serial)
}

pub fn coulomb_energy_with<E: Executor>(path: &PathSample, exec: &E) -> Result<CoulombEnergy> {
    let pts = Points::from_slice(path.positions());
    energy_of_points(&pts, path.dt(), exec)
}

pub(crate) fn energy_of_points<E: Executor>(pts: &Points, dt: f64, exec: &E) -> Result<CoulombEnergy> {
    let s = kernel::upper_sum(pts.view(), exec);
    check_clamping(&s)?;
    Ok(CoulombEnergy { value: 2.0 * dt * dt * s.sum, clamped: s.clamped })
}

/// `−β · coulomb`; the Gibbs weight itself is never formed.
pub fn log_gibbs_weight(path: &PathSample, beta: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::Parameter("beta must be >= 0"));
    }
    Ok(-beta * coulomb_energy(path)?.value)
}

/// Energy change of [`apply_pivot`] from the `k·(n−k)` pairs straddling `k`.
pub fn coulomb_delta_pivot(path: &PathSample, k: usize, rotation: &Rotation) -> Result<f64> {
    coulomb_delta_pivot_with(path, k, rotation, &Serial)
}

pub fn coulomb_delta_pivot_with<E: Executor>(
    path: &PathSample,
    k: usize,
    rotation: &Rotation,
    exec: &E,
) -> Result<f64> {
    let pivoted = apply_pivot(path, k, rotation)?;
    let old = Points::from_slice(path.positions());
    let new = Points::from_slice(pivoted.positions());
    pivot_delta_points(&old, &new, k, path.dt(), exec)
}

pub(crate) fn pivot_delta_points<E: Executor>(
    old: &Points,
    new: &Points,
    k: usize,
    dt: f64,
    exec: &E,
) -> Result<f64> {
    let n = old.len();
    if k + 1 >= n {
        return Ok(0.0);
    }
    let head = old.view().slice(0..k);
    let before = kernel::cross_sum(head, old.view().slice(k + 1..n), exec);
    let after = kernel::cross_sum(head, new.view().slice(k + 1..n), exec);
    check_clamping(&after)?;
    Ok(2.0 * dt * dt * (after.sum - before.sum))
}

/// Energy change when nodes `i0..i0+len` move freely and the nodes after them
/// move rigidly together, as in a block resample.
pub(crate) fn block_delta_points<E: Executor>(
    old: &Points,
    new: &Points,
    i0: usize,
    len: usize,
    dt: f64,
    exec: &E,
) -> Result<f64> {
    let n = old.len();
    let b_end = i0 + len;
    let part = |p: &Points| {
        let v = p.view();
        let a = kernel::cross_sum(v.slice(0..i0), v.slice(i0..n), exec);
        let b = kernel::upper_sum(v.slice(i0..b_end), exec);
        let c = kernel::cross_sum(v.slice(i0..b_end), v.slice(b_end..n), exec);
        PairSum {
            sum: (a.sum + b.sum) + c.sum,
            clamped: a.clamped + b.clamped + c.clamped,
            pairs: a.pairs + b.pairs + c.pairs,
        }
    };
    let before = part(old);
    let after = part(new);
    check_clamping(&after)?;
    Ok(2.0 * dt * dt * (after.sum - before.sum))
}

fn dist2(a: Vec3, b: Vec3) -> f64 {
    let d = sub(a, b);
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

/// `sqrt((1/(n+1)²) Σ_{i,j} |x_i − x_j|²)`, diagonal included. O(n²).
pub fn radius_gyration_pairwise(path: &PathSample) -> f64 {
    let p = path.positions();
    let m = p.len();
    let mut total = 0.0;
    for i in 0..m {
        let mut row = 0.0;
        for j in i + 1..m {
            row += dist2(p[i], p[j]);
        }
        total += row;
    }
    (2.0 * total / (m as f64 * m as f64)).sqrt()
}

/// Same value through `R² = 2·mean |x_i − x̄|²`. O(n).
pub fn radius_gyration_centered(path: &PathSample) -> f64 {
    radius_of_points(path.positions())
}

pub(crate) fn radius_of_points(p: &[Vec3]) -> f64 {
    let m = p.len() as f64;
    let mut c = [0.0; 3];
    for q in p {
        for a in 0..3 {
            c[a] += q[a];
        }
    }
    let c = c.map(|s| s / m);
    let ss: f64 = p.iter().map(|q| dist2(*q, c)).sum();
    (2.0 * ss / m).sqrt()
}

/// Means over the `(n+1)·n` ordered off-diagonal pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderCheck {
    /// Mean squared pair distance.
    pub m2: f64,
    /// Mean inverse pair distance.
    pub m_neg1: f64,
    /// `√m2 · m_neg1`, never below one.
    pub product: f64,
}

pub fn holder_check(path: &PathSample) -> Result<HolderCheck> {
    let p = path.positions();
    let m = p.len();
    let mut sq = 0.0;
    let mut inv = 0.0;
    let mut clamped = 0u64;
    for i in 0..m {
        let (mut row_sq, mut row_inv) = (0.0, 0.0);
        for j in i + 1..m {
            let d2 = dist2(p[i], p[j]);
            let d = d2.sqrt();
            if d < EPS_MIN {
                clamped += 1;
            }
            row_sq += d2;
            row_inv += 1.0 / d.max(EPS_MIN);
        }
        sq += row_sq;
        inv += row_inv;
    }
    let pairs = (m * (m - 1) / 2) as u64;
    check_clamping(&PairSum { sum: inv, clamped, pairs })?;
    let n_pairs = pairs as f64;
    let m2 = sq / n_pairs;
    let m_neg1 = inv / n_pairs;
    Ok(HolderCheck { m2, m_neg1, product: m2.sqrt() * m_neg1 })
}

pub fn path_functionals(path: &PathSample) -> Result<PathFunctionals> {
    path_functionals_with(path, &Serial)
}

pub fn path_functionals_with<E: Executor>(path: &PathSample, exec: &E) -> Result<PathFunctionals> {
    let e = coulomb_energy_with(path, exec)?;
    Ok(PathFunctionals {
        coulomb: e.value,
        rg: radius_gyration_centered(path),
        endpoint_x1: path.endpoint()[0],
        clamped: e.clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelParams, SeedSpec, TimeGrid};
    use crate::path::{resample_block, sample_path};
    use crate::stats::mean_se;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::vec::Vec;

    fn line(n: usize) -> PathSample {
        let g = TimeGrid::new(n as f64, n).unwrap();
        let pos: Vec<Vec3> = (0..=n).map(|i| [i as f64, 0.0, 0.0]).collect();
        PathSample::from_positions(g, &pos).unwrap()
    }

    fn two_nodes() -> Vec<Vec3> {
        std::vec![[0.0; 3], [1.0, 0.0, 0.0]]
    }

    #[test]
    fn straight_line_values() {
        let p = line(2);
        assert_eq!(coulomb_energy(&p).unwrap().value, 5.0);
        assert_eq!(log_gibbs_weight(&p, 1.0).unwrap(), -5.0);
        assert_eq!(log_gibbs_weight(&p, 0.0).unwrap(), 0.0);
        assert_eq!(log_gibbs_weight(&p, 2.0).unwrap(), -10.0);
        assert!(log_gibbs_weight(&p, -1.0).is_err());
        let want = 2.0 / 3f64.sqrt();
        assert!((radius_gyration_pairwise(&p) - want).abs() < 1e-15);
        assert!((radius_gyration_centered(&p) - want).abs() < 1e-15);
        let h = holder_check(&p).unwrap();
        assert_eq!(h.m2, 2.0);
        assert!((h.m_neg1 - 5.0 / 6.0).abs() < 1e-15);
        assert!((h.product - 2f64.sqrt() * 5.0 / 6.0).abs() < 1e-15);
        assert!((h.product - 1.17851).abs() < 1e-5);
    }

    #[test]
    fn two_node_radius() {
        let h = 1.0 / 2f64.sqrt();
        assert!((radius_of_points(&two_nodes()) - h).abs() < 1e-15);
        let shifted: Vec<Vec3> = two_nodes().iter().map(|q| [q[0] + 3.5, q[1] - 2.0, q[2] + 1e3]).collect();
        assert!((radius_of_points(&shifted) - h).abs() < 1e-12);
    }

    #[test]
    fn holder_equality_case() {
        // Vertices of a regular tetrahedron: all six distances equal.
        let s = 2f64.sqrt();
        let base: [Vec3; 4] = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
        let pos: Vec<Vec3> = base.iter().map(|q| sub(*q, base[0])).collect();
        let g = TimeGrid::new(3.0, 3).unwrap();
        let p = PathSample::from_positions(g, &pos).unwrap();
        let h = holder_check(&p).unwrap();
        assert!((h.product - 1.0).abs() < 1e-15, "{}", h.product);
        assert!((h.m2 - 8.0).abs() < 1e-13 && (h.m_neg1 - 1.0 / (2.0 * s)).abs() < 1e-15);
    }

    #[test]
    fn degenerate_path_errors() {
        let g = TimeGrid::new(2.0, 2).unwrap();
        let p = PathSample::from_positions(g, &[[0.0; 3], [0.0; 3], [0.0; 3]]).unwrap();
        assert!(matches!(coulomb_energy(&p), Err(Error::DegeneratePath { clamped: 3, pairs: 3 })));
        assert!(holder_check(&p).is_err());
    }

    #[test]
    fn isolated_clamp_is_reported_not_fatal() {
        // One coincident pair among ~500k stays under the 0.1% limit.
        let n = 1000;
        let g = TimeGrid::new(1.0, n).unwrap();
        let mut inc: Vec<Vec3> = (0..n).map(|i| [1e-3, (i as f64 * 0.37).sin() * 1e-3, 0.0]).collect();
        inc[500] = [0.0; 3];
        let p = PathSample::from_increments(g, inc).unwrap();
        let e = coulomb_energy(&p).unwrap();
        assert_eq!(e.clamped, 1);
    }

    #[test]
    fn beta_independent_energy() {
        let pr = ModelParams::new(0.3, 1.0, 64, 0.0).unwrap();
        let p = sample_path(&pr, &SeedSpec::new(1, 1)).unwrap();
        let p2 = sample_path(&pr.with_beta(5.0), &SeedSpec::new(1, 1)).unwrap();
        assert_eq!(coulomb_energy(&p).unwrap(), coulomb_energy(&p2).unwrap());
    }

    #[test]
    fn pivot_delta_matches_recompute() {
        let pr = ModelParams::new(1.0, 2.0, 300, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for r in 0..40 {
            let p = sample_path(&pr, &SeedSpec::new(2, r)).unwrap();
            let k = 1 + (r as usize * 37) % 299;
            let rot = Rotation::uniform(&mut rng);
            let delta = coulomb_delta_pivot(&p, k, &rot).unwrap();
            let full = coulomb_energy(&apply_pivot(&p, k, &rot).unwrap()).unwrap().value
                - coulomb_energy(&p).unwrap().value;
            assert!((delta - full).abs() <= 1e-9 * full.abs(), "k={k}: {delta} vs {full}");
        }
        let p = sample_path(&pr, &SeedSpec::new(2, 0)).unwrap();
        assert_eq!(coulomb_delta_pivot(&p, 17, &Rotation::IDENTITY).unwrap(), 0.0);
        let rot = Rotation::uniform(&mut rng);
        assert_eq!(coulomb_delta_pivot(&p, 300, &rot).unwrap(), 0.0);
    }

    #[test]
    fn block_delta_matches_recompute() {
        let pr = ModelParams::new(1.0, 1.0, 200, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (i0, len) in [(1, 5), (50, 20), (181, 20), (1, 200), (100, 1)] {
            let p = sample_path(&pr, &SeedSpec::new(3, i0 as u64)).unwrap();
            let q = resample_block(&p, i0, len, &mut rng, &pr).unwrap();
            let old = Points::from_slice(p.positions());
            let new = Points::from_slice(q.positions());
            let d = block_delta_points(&old, &new, i0, len, p.dt(), &Serial).unwrap();
            let full = coulomb_energy(&q).unwrap().value - coulomb_energy(&p).unwrap().value;
            assert!((d - full).abs() <= 1e-9 * full.abs(), "({i0},{len}): {d} vs {full}");
        }
    }

    #[test]
    fn prior_moments_small() {
        // E R_T² = T·(n+2)/(n+1) on the grid; the continuum value is T.
        let pr = ModelParams::new(0.0, 1.0, 64, 0.0).unwrap();
        let seed = SeedSpec::new(4, 0);
        let rg2: Vec<f64> = (0..4000)
            .map(|r| radius_gyration_centered(&sample_path(&pr, &seed.child(r)).unwrap()).powi(2))
            .collect();
        let (m, se) = mean_se(&rg2);
        assert!((m - 66.0 / 65.0).abs() <= 3.0 * se, "{m} ± {se}");
    }

    fn rotate_all(path: &PathSample, r: &Rotation) -> PathSample {
        let pos: Vec<Vec3> = path.positions().iter().map(|q| r.apply(*q)).collect();
        PathSample::from_positions(*path.grid(), &pos).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn gyration_forms_agree(seed in any::<u64>(), n in 2usize..300, t in 0.01f64..50.0, mu in -2.0f64..2.0) {
            let pr = ModelParams::new(0.0, t, n, mu).unwrap();
            let p = sample_path(&pr, &SeedSpec::new(seed, 0)).unwrap();
            let a = radius_gyration_pairwise(&p);
            let b = radius_gyration_centered(&p);
            prop_assert!((a - b).abs() <= 1e-10 * a);
        }

        #[test]
        fn holder_product_at_least_one(seed in any::<u64>(), n in 2usize..200, t in 0.01f64..20.0, mu in -3.0f64..3.0) {
            let pr = ModelParams::new(0.0, t, n, mu).unwrap();
            let p = sample_path(&pr, &SeedSpec::new(seed, 1)).unwrap();
            prop_assert!(holder_check(&p).unwrap().product >= 1.0 - 1e-12);
        }

        #[test]
        fn euclidean_invariance(seed in any::<u64>(), n in 2usize..150) {
            let pr = ModelParams::new(0.0, 1.0, n, 0.0).unwrap();
            let p = sample_path(&pr, &SeedSpec::new(seed, 2)).unwrap();
            let r = Rotation::uniform(&mut ChaCha8Rng::seed_from_u64(seed));
            let q = rotate_all(&p, &r);
            let (c0, c1) = (coulomb_energy(&p).unwrap().value, coulomb_energy(&q).unwrap().value);
            prop_assert!((c0 - c1).abs() <= 1e-10 * c0);
            let (a0, a1) = (radius_gyration_pairwise(&p), radius_gyration_pairwise(&q));
            prop_assert!((a0 - a1).abs() <= 1e-10 * a0);
            let (b0, b1) = (radius_gyration_centered(&p), radius_gyration_centered(&q));
            prop_assert!((b0 - b1).abs() <= 1e-10 * b0);
        }
    }
}
