//! Deterministic low-discrepancy sampling of circles and spheres.
//!
//! Golden-ratio angle sequences in the plane, a Fibonacci lattice on the
//! 2-sphere. The k = 0 sample always lands on angle 0 (the positive real
//! axis), which several extremal checks rely on, and prefixes nest: the
//! first n points of a 2n-point sample are the n-point sample, so doubling
//! the budget can only improve a max and lower a min.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::point::{Dim, Point};

/// Fractional part of the golden ratio, (sqrt(5) - 1) / 2.
pub const GOLDEN_FRAC: f64 = 0.618_033_988_749_894_9;

/// k-th golden-angle sample in [0, tau); k = 0 gives exactly 0.
pub fn golden_angle(k: usize) -> f64 {
    std::f64::consts::TAU * (k as f64 * GOLDEN_FRAC).fract()
}

/// n golden-angle directions on the unit circle.
pub fn circle_directions(n: usize) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let (s, c) = golden_angle(k).sin_cos();
            Point::planar(c, s)
        })
        .collect()
}

/// n Fibonacci-lattice directions on the unit 2-sphere.
///
/// Latitudes step uniformly in z while longitudes advance by the golden
/// angle. Poles are avoided by the half-offset so no direction repeats.
pub fn sphere_directions(n: usize) -> Vec<Point> {
    assert!(n > 0);
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let (s, c) = golden_angle(k).sin_cos();
            Point::spatial(rho * c, rho * s, z)
        })
        .collect()
}

/// How to sample spheres and how hard to push the refinement loop.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SamplePolicy {
    /// Initial number of directions per sphere or circle.
    pub samples: usize,
    /// Stop refining when the extremal value moves by less than this
    /// relative amount under a doubling of the budget.
    pub rel_tol: f64,
    /// Hard cap on the number of doublings.
    pub max_doublings: u32,
    /// Optional seed for a small random angular jitter. Off by default;
    /// jitter breaks prefix nesting and is only for sensitivity checks.
    pub jitter_seed: Option<u64>,
}

impl Default for SamplePolicy {
    fn default() -> Self {
        SamplePolicy { samples: 2048, rel_tol: 1e-6, max_doublings: 6, jitter_seed: None }
    }
}

impl SamplePolicy {
    pub fn with_samples(n: usize) -> Self {
        SamplePolicy { samples: n, ..Default::default() }
    }
}

/// A concrete sampled sphere (circle in the plane): centre, radius, points,
/// and a recorded bound on the largest gap left uncovered.
#[derive(Debug, Clone)]
pub struct SphereSample {
    pub center: Point,
    pub radius: f64,
    pub points: Vec<Point>,
    /// Upper bound on the distance from any sphere point to its nearest
    /// sample. Exact in the plane (largest angular gap times radius); on the
    /// 2-sphere a standard covering bound for the Fibonacci lattice.
    pub max_gap: f64,
}

impl SphereSample {
    pub fn new(center: Point, radius: f64, n: usize, jitter_seed: Option<u64>) -> Self {
        assert!(radius > 0.0 && radius.is_finite(), "sphere radius must be positive");
        assert!(n >= 4, "need at least 4 sample points");
        let mut dirs = match center.dim() {
            Dim::Two => circle_directions(n),
            Dim::Three => sphere_directions(n),
        };
        if let Some(seed) = jitter_seed {
            jitter_directions(&mut dirs, seed, n);
        }
        let max_gap = match center.dim() {
            Dim::Two => {
                let mut angles: Vec<f64> = dirs
                    .iter()
                    .map(|d| d.coords()[1].atan2(d.coords()[0]))
                    .collect();
                angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let mut gap: f64 = 0.0;
                for i in 0..angles.len() {
                    let next = if i + 1 == angles.len() {
                        angles[0] + std::f64::consts::TAU
                    } else {
                        angles[i + 1]
                    };
                    gap = gap.max(next - angles[i]);
                }
                // Chord midpoint is the worst case; arc length bounds it.
                radius * gap / 2.0
            }
            // Covering radius of the n-point Fibonacci lattice is below
            // 3.1 / sqrt(n) radians for the n used here.
            Dim::Three => radius * 3.1 / (n as f64).sqrt(),
        };
        let points = dirs.into_iter().map(|d| center.add(d.scale(radius))).collect();
        SphereSample { center, radius, points, max_gap }
    }
}

fn jitter_directions(dirs: &mut [Point], seed: u64, n: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = 0.25 * std::f64::consts::TAU / n as f64;
    for d in dirs.iter_mut() {
        match d.dim() {
            Dim::Two => {
                let theta = d.coords()[1].atan2(d.coords()[0]) + rng.gen_range(-eps..eps);
                let (s, c) = theta.sin_cos();
                *d = Point::planar(c, s);
            }
            Dim::Three => {
                // Small tangent-space nudge, then renormalize.
                let v = [
                    rng.gen_range(-eps..eps),
                    rng.gen_range(-eps..eps),
                    rng.gen_range(-eps..eps),
                ];
                let p = Point::spatial(
                    d.coords()[0] + v[0],
                    d.coords()[1] + v[1],
                    d.coords()[2] + v[2],
                );
                *d = p.normalized().expect("jittered direction became zero");
            }
        }
    }
}
