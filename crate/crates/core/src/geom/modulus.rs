//! Extremal modulus of a map over spheres and explicit point sets.
//!
//! The quantities of interest are M(r, f) = max |f| and m(r, f) = min |f|
//! over the sphere of radius r, their iterated towers, and the same extrema
//! over explicit curves. Everything is sampled deterministically; budgets
//! refine by doubling, and because sample prefixes nest a doubling can only
//! push a max up or a min down.

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::logspace::LN_F64_MAX;
use super::point::{Dim, Point};
use super::sample::{circle_directions, sphere_directions, SamplePolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Extremum {
    Max,
    Min,
}

impl Extremum {
    fn fold(self, acc: f64, x: f64) -> f64 {
        match self {
            Extremum::Max => acc.max(x),
            Extremum::Min => acc.min(x),
        }
    }

    fn seed(self) -> f64 {
        match self {
            Extremum::Max => f64::NEG_INFINITY,
            Extremum::Min => f64::INFINITY,
        }
    }
}

/// A map that can be evaluated on points, with a log-radial path for
/// magnitudes far beyond plain f64 range.
pub trait ModulusMap: Sync {
    fn dim(&self) -> Dim;

    fn apply(&self, p: Point) -> Result<Point>;

    /// Evaluate at the point of magnitude e^ln_r in direction `dir` (unit),
    /// returning (ln of image magnitude, image direction). The default
    /// routes through plain evaluation and only works inside f64 range;
    /// map families with genuine log-polar evaluation override it.
    fn apply_log_radial(&self, ln_r: f64, dir: Point) -> Result<(f64, Point)> {
        if ln_r >= LN_F64_MAX {
            return Err(Error::LogOverflow);
        }
        let q = self.apply(dir.scale(ln_r.exp()))?;
        let n = q.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::EvaluationFailure(q.raw()));
        }
        Ok((n.ln(), q.scale(1.0 / n)))
    }
}

impl<T: ModulusMap + ?Sized> ModulusMap for &T {
    fn dim(&self) -> Dim {
        (**self).dim()
    }
    fn apply(&self, p: Point) -> Result<Point> {
        (**self).apply(p)
    }
    fn apply_log_radial(&self, ln_r: f64, dir: Point) -> Result<(f64, Point)> {
        (**self).apply_log_radial(ln_r, dir)
    }
}

fn directions(dim: Dim, n: usize) -> Vec<Point> {
    match dim {
        Dim::Two => circle_directions(n),
        Dim::Three => sphere_directions(n),
    }
}

/// ln of the extremal modulus over the sphere of ln-radius `ln_r`.
pub fn ln_extremal_modulus(
    map: &impl ModulusMap,
    ln_r: f64,
    samples: usize,
    which: Extremum,
) -> Result<f64> {
    assert!(samples >= 4, "need at least 4 sphere samples");
    let dirs = directions(map.dim(), samples);
    let vals = dirs
        .par_iter()
        .map(|d| map.apply_log_radial(ln_r, *d).map(|(ln, _)| ln))
        .collect::<Result<Vec<f64>>>()?;
    let out = vals.into_iter().fold(which.seed(), |a, x| which.fold(a, x));
    if !out.is_finite() {
        return Err(Error::EvaluationFailure([ln_r, f64::NAN, f64::NAN]));
    }
    Ok(out)
}

/// Extremal modulus over the sphere of radius r, plain scale.
pub fn extremal_modulus(
    map: &impl ModulusMap,
    r: f64,
    samples: usize,
    which: Extremum,
) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::invalid(format!("sphere radius must be positive, got {r}")));
    }
    let dirs = directions(map.dim(), samples);
    let vals = dirs
        .par_iter()
        .map(|d| map.apply(d.scale(r)).map(|q| q.norm()))
        .collect::<Result<Vec<f64>>>()?;
    for v in &vals {
        if !v.is_finite() {
            return Err(Error::EvaluationFailure([r, *v, f64::NAN]));
        }
    }
    Ok(vals.into_iter().fold(which.seed(), |a, x| which.fold(a, x)))
}

pub fn max_modulus(map: &impl ModulusMap, r: f64, samples: usize) -> Result<f64> {
    extremal_modulus(map, r, samples, Extremum::Max)
}

pub fn min_modulus(map: &impl ModulusMap, r: f64, samples: usize) -> Result<f64> {
    extremal_modulus(map, r, samples, Extremum::Min)
}

/// Extremal |map| over an explicit finite point set.
pub fn modulus_on_set(map: &impl ModulusMap, points: &[Point], which: Extremum) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    let vals = points
        .par_iter()
        .map(|p| map.apply(*p).map(|q| q.norm()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(vals.into_iter().fold(which.seed(), |a, x| which.fold(a, x)))
}

/// An extremal value refined by doubling the sample budget.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RefinedExtremum {
    pub ln_value: f64,
    pub samples_used: usize,
    /// Relative movement of the value on the last doubling.
    pub last_rel_change: f64,
    pub converged: bool,
}

impl RefinedExtremum {
    /// Plain-scale value; +inf when out of f64 range.
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

/// Refine ln-extremal modulus by doubling samples until the value moves by
/// less than `policy.rel_tol` or the doubling budget runs out.
pub fn refined_ln_extremal(
    map: &impl ModulusMap,
    ln_r: f64,
    policy: &SamplePolicy,
    which: Extremum,
) -> Result<RefinedExtremum> {
    let mut n = policy.samples.max(4);
    let mut current = ln_extremal_modulus(map, ln_r, n, which)?;
    let mut last_change = f64::INFINITY;
    for _ in 0..policy.max_doublings {
        let next_n = n * 2;
        let next = ln_extremal_modulus(map, ln_r, next_n, which)?;
        // ln difference approximates relative change of the plain value.
        last_change = (next - current).abs();
        n = next_n;
        current = next;
        if last_change < policy.rel_tol {
            return Ok(RefinedExtremum {
                ln_value: current,
                samples_used: n,
                last_rel_change: last_change,
                converged: true,
            });
        }
    }
    Ok(RefinedExtremum {
        ln_value: current,
        samples_used: n,
        last_rel_change: last_change,
        converged: false,
    })
}

/// ln M^k(r, f) for k = 1..=levels: the iterated maximum modulus tower,
/// where each level takes the max modulus over the sphere whose radius is
/// the previous level's value.
pub fn ln_max_modulus_tower(
    map: &impl ModulusMap,
    ln_r: f64,
    levels: u32,
    policy: &SamplePolicy,
) -> Result<Vec<f64>> {
    if levels == 0 {
        return Err(Error::invalid("tower needs at least one level"));
    }
    let mut out = Vec::with_capacity(levels as usize);
    let mut ln_cur = ln_r;
    for _ in 0..levels {
        let step = refined_ln_extremal(map, ln_cur, policy, Extremum::Max)?;
        if step.ln_value <= ln_cur {
            return Err(Error::ThresholdTooSmall {
                r: ln_cur.exp(),
                max_mod: step.ln_value.exp(),
            });
        }
        ln_cur = step.ln_value;
        out.push(ln_cur);
    }
    Ok(out)
}

/// Plain-scale iterated maximum modulus; errors with LogOverflow when the
/// tower leaves f64 range (use ln_max_modulus_tower there).
pub fn iterated_max_modulus(
    map: &impl ModulusMap,
    r: f64,
    levels: u32,
    samples: usize,
) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::invalid(format!("sphere radius must be positive, got {r}")));
    }
    let policy = SamplePolicy { samples, ..Default::default() };
    let tower = ln_max_modulus_tower(map, r.ln(), levels, &policy)?;
    let top = *tower.last().expect("levels >= 1");
    if top >= LN_F64_MAX {
        return Err(Error::LogOverflow);
    }
    Ok(top.exp())
}

/// Closed annular region around a centre, used as a search window.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Ring {
    pub center: Point,
    pub inner: f64,
    pub outer: f64,
}

impl Ring {
    pub fn new(center: Point, inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0) || !(outer > inner) || !outer.is_finite() {
            return Err(Error::invalid(format!(
                "ring radii must satisfy 0 < inner < outer, got {inner}, {outer}"
            )));
        }
        Ok(Ring { center, inner, outer })
    }

    pub fn thickness(&self) -> f64 {
        self.outer - self.inner
    }

    pub fn contains(&self, p: Point) -> bool {
        let d = p.sub(self.center).norm();
        self.inner <= d && d <= self.outer
    }
}

/// A closed polygonal curve; the edge back from the last vertex to the
/// first is implicit.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ClosedCurve {
    vertices: Vec<Point>,
}

impl ClosedCurve {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::invalid(format!(
                "closed curve needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        let dim = vertices[0].dim();
        for v in &vertices {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    map_dim: dim.as_u8(),
                    point_dim: v.dim().as_u8(),
                });
            }
            if !v.norm().is_finite() {
                return Err(Error::invalid("curve vertex is not finite"));
            }
        }
        Ok(ClosedCurve { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn dim(&self) -> Dim {
        self.vertices[0].dim()
    }

    /// Closed edge list: (v_i, v_{i+1}) including the wrap-around edge.
    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn diameter(&self) -> f64 {
        let n = self.vertices.len();
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                d = d.max(self.vertices[i].dist(self.vertices[j]));
            }
        }
        d
    }

    pub fn max_norm(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn min_norm(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn perimeter(&self) -> f64 {
        self.segments().map(|(a, b)| a.dist(b)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    struct Squarer;

    impl ModulusMap for Squarer {
        fn dim(&self) -> Dim {
            Dim::Two
        }
        fn apply(&self, p: Point) -> Result<Point> {
            let z = p.to_complex()?;
            Ok(Point::from_complex(z * z))
        }
        fn apply_log_radial(&self, ln_r: f64, dir: Point) -> Result<(f64, Point)> {
            let theta = dir.coords()[1].atan2(dir.coords()[0]);
            let (s, c) = (2.0 * theta).sin_cos();
            Ok((2.0 * ln_r, Point::planar(c, s)))
        }
    }

    #[test]
    fn squaring_moduli_are_exact() {
        let m = max_modulus(&Squarer, 3.0, 64).unwrap();
        assert!((m - 9.0).abs() < 1e-12);
        let m = min_modulus(&Squarer, 3.0, 64).unwrap();
        assert!((m - 9.0).abs() < 1e-12);
    }

    #[test]
    fn tower_of_squaring_doubles_ln() {
        let t = ln_max_modulus_tower(&Squarer, 2.0_f64.ln(), 4, &SamplePolicy::with_samples(32))
            .unwrap();
        for (k, ln_m) in t.iter().enumerate() {
            let want = 2.0_f64.ln() * 2f64.powi(k as i32 + 1);
            assert!((ln_m - want).abs() < 1e-9, "level {k}: {ln_m} vs {want}");
        }
    }

    #[test]
    fn tower_rejects_contracting_radius() {
        // Inside the unit circle, squaring contracts.
        let err = ln_max_modulus_tower(
            &Squarer,
            0.5_f64.ln(),
            2,
            &SamplePolicy::with_samples(32),
        )
        .unwrap_err();
        assert!(matches!(err, Error::ThresholdTooSmall { .. }));
    }

    #[test]
    fn plain_tower_overflow_is_reported() {
        let err = iterated_max_modulus(&Squarer, 10.0, 12, 32).unwrap_err();
        assert!(matches!(err, Error::LogOverflow));
    }

    #[test]
    fn curve_requires_three_vertices() {
        let v = vec![Point::planar(0.0, 0.0), Point::planar(1.0, 0.0)];
        assert!(ClosedCurve::new(v).is_err());
    }

    #[test]
    fn curve_geometry() {
        let square = ClosedCurve::new(vec![
            Point::planar(0.0, 0.0),
            Point::planar(1.0, 0.0),
            Point::planar(1.0, 1.0),
            Point::planar(0.0, 1.0),
        ])
        .unwrap();
        assert!((square.perimeter() - 4.0).abs() < 1e-12);
        assert!((square.diameter() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn set_modulus_uses_all_points() {
        let pts = vec![
            Point::from_complex(Complex64::new(1.0, 0.0)),
            Point::from_complex(Complex64::new(0.0, 2.0)),
        ];
        let hi = modulus_on_set(&Squarer, &pts, Extremum::Max).unwrap();
        let lo = modulus_on_set(&Squarer, &pts, Extremum::Min).unwrap();
        assert!((hi - 4.0).abs() < 1e-12);
        assert!((lo - 1.0).abs() < 1e-12);
    }
}
