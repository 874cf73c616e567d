//! Linearizer evaluation at a repelling fixed point.
//!
//! At a fixed point x0 with multiplier lambda, |lambda| > 1, the map is
//! conjugate to its linear part: there is an L with f(L(z)) = L(lambda z)
//! and L(0) = x0. Among the scalings of L we fix L'(0) = 1, which the
//! defining limit L(z) = lim_n f^n(x0 + lambda^{-n} z) produces directly.
//!
//! Evaluation is hybrid: orbits run as plain complex numbers while they fit
//! comfortably in f64 and switch to log-polar form when they grow past
//! that, so L is usable at the enormous radii the escape certificates need.
//!
//! Truncating the limit at n leaves an error a(z) lambda^{-n} + O(lambda^{-2n}),
//! while each extra orbit step roughly doubles the rounding noise; raw
//! truncations therefore stall near sqrt-machine precision. Successive
//! truncations are Richardson-extrapolated in n, which removes the leading
//! error term and converges well before the noise floor.
//!
//! In 3-space the same construction is supported when the linearizing model
//! is an expanding conformal similarity; there is no concrete nonconformal
//! 3-D map to linearize, so that case is out of scope.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geom::logspace::{wrap_angle, LogComplex, LN_F64_MAX, LN_PLAIN_EVAL};
use crate::geom::point::{Dim, Point};
use crate::geom::ModulusMap;
use crate::maps::MapSpec;

/// How exactly "fixed" the fixed point must be.
const FIXED_POINT_TOL: f64 = 1e-10;

/// Default agreement tolerance between successive truncations. Orbit
/// rounding noise floors the achievable agreement near 1e-10 for small
/// multipliers, so the default sits above that.
const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Refinements allowed without improving the successive-agreement gap
/// before the evaluator concludes it has hit the rounding floor.
const STALL_LIMIT: usize = 4;

/// Default cap on the truncation index n.
const DEFAULT_N_MAX: usize = 256;

/// Arguments with ln|z| beyond this are reduced through the functional
/// equation before evaluation, keeping the refinement orbit in plain
/// arithmetic where the backward seed carries full precision. The value
/// must stay small: the refinement's rounding floor scales with the
/// logarithmic derivative of L at the reduced point, and by e^8 that
/// floor already brushes the model tolerance for quadratic growth. At
/// e^2 the floor keeps three orders of headroom while the extra forward
/// pushes it costs are exact.
const LN_MODERATE_ARG: f64 = 2.0;

/// Allowed deviation of lambda times the ratio of successive truncation
/// differences from 1 before the refinement ladder is declared to have
/// hit the resolution of the backward increment. The corruption creeps
/// over a few rungs, doubling per step, so the ladder must stop at the
/// first whiff; healthy mid-ladder deviations sit well below this.
const RATIO_BREAK: f64 = 1e-3;

/// The linear model L is conjugated to: a scalar in the plane, an expanding
/// conformal similarity fixing the origin in 3-space.
#[derive(Debug, Clone)]
pub enum Multiplier {
    Scalar(Complex64),
    Model(MapSpec),
}

#[derive(Debug, Clone)]
pub struct LinearizerModel {
    map: MapSpec,
    x0: Point,
    multiplier: Multiplier,
    rho: f64,
    tolerance: f64,
    n_max: usize,
}

impl LinearizerModel {
    /// Planar model with multiplier `lambda`. When `rho` is None the
    /// linearization radius defaults to half the distance from x0 to the
    /// nearest critical point; families without computable critical points
    /// must pass a radius.
    pub fn planar(
        map: MapSpec,
        x0: Complex64,
        lambda: Complex64,
        rho: Option<f64>,
    ) -> Result<Self> {
        if map.dim() != Dim::Two {
            return Err(Error::invalid("planar linearizer needs a planar map"));
        }
        let fx0 = map.evaluate_c(x0)?;
        if (fx0 - x0).norm() >= FIXED_POINT_TOL {
            return Err(Error::invalid(format!(
                "x0 is not fixed: |f(x0) - x0| = {:.3e}",
                (fx0 - x0).norm()
            )));
        }
        if !(lambda.norm() > 1.0) {
            return Err(Error::invalid("multiplier must be repelling, |lambda| > 1"));
        }
        if let Some(df) = map.complex_derivative(x0) {
            if (df - lambda).norm() > 1e-8 * (1.0 + df.norm()) {
                return Err(Error::invalid(format!(
                    "multiplier {lambda} disagrees with the derivative {df} at the fixed point"
                )));
            }
        }
        let rho = match rho {
            Some(r) if r > 0.0 && r.is_finite() => r,
            Some(_) => return Err(Error::invalid("linearization radius must be positive")),
            None => default_planar_radius(&map, x0)?,
        };
        Ok(LinearizerModel {
            map,
            x0: Point::from_complex(x0),
            multiplier: Multiplier::Scalar(lambda),
            rho,
            tolerance: DEFAULT_TOLERANCE,
            n_max: DEFAULT_N_MAX,
        })
    }

    /// 3-D model: `model` must be an expanding conformal similarity fixing
    /// the origin (the loxodromic family).
    pub fn spatial(map: MapSpec, x0: Point, model: MapSpec, rho: Option<f64>) -> Result<Self> {
        if map.dim() != Dim::Three || x0.dim() != Dim::Three {
            return Err(Error::invalid("spatial linearizer needs a 3-D map and point"));
        }
        if !matches!(model, MapSpec::Loxodromic { .. }) {
            return Err(Error::invalid(
                "the linearizing model must be an expanding conformal similarity fixing 0",
            ));
        }
        let fx0 = map.evaluate(x0)?;
        if fx0.dist(x0) >= FIXED_POINT_TOL {
            return Err(Error::invalid(format!(
                "x0 is not fixed: |f(x0) - x0| = {:.3e}",
                fx0.dist(x0)
            )));
        }
        let rho = match rho {
            Some(r) if r > 0.0 && r.is_finite() => r,
            Some(_) => return Err(Error::invalid("linearization radius must be positive")),
            None => 1.0,
        };
        Ok(LinearizerModel {
            map,
            x0,
            multiplier: Multiplier::Model(model),
            rho,
            tolerance: DEFAULT_TOLERANCE,
            n_max: DEFAULT_N_MAX,
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0) || !tolerance.is_finite() {
            return Err(Error::invalid("tolerance must be positive and finite"));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    pub fn with_refinement_cap(mut self, n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::invalid("refinement cap must be at least 1"));
        }
        self.n_max = n_max;
        Ok(self)
    }

    pub fn map(&self) -> &MapSpec {
        &self.map
    }

    pub fn radius(&self) -> f64 {
        self.rho
    }

    pub fn fixed_point(&self) -> Point {
        self.x0
    }

    pub fn multiplier_scalar(&self) -> Option<Complex64> {
        match self.multiplier {
            Multiplier::Scalar(l) => Some(l),
            Multiplier::Model(_) => None,
        }
    }

    fn x0_c(&self) -> Complex64 {
        // Constructors guarantee planar x0 for scalar multipliers.
        self.x0.to_complex().expect("planar fixed point")
    }

    /// L(z) for a planar point given in log-polar form. This is the evaluator
    /// that stays exact when either z or L(z) is far outside f64 range.
    ///
    /// Arguments beyond a moderate radius are reduced through the functional
    /// equation: L(z) = f^m(L(lambda^{-m} z)) with m chosen so the reduced
    /// argument is small. The reduced value comes from an all-plain orbit
    /// (accurate near machine precision) and each forward push is a single
    /// exact log-space application of f. Refining the truncation index at
    /// the full argument instead would shrink the backward seed towards x0,
    /// and the seed's rounding, amplified by the orbit derivative, destroys
    /// convergence there; the reduce-then-push schedule amplifies noise by
    /// exactly the logarithmic derivative of L, which is the conditioning
    /// floor any evaluator shares.
    pub fn linearize_log(&self, z: LogComplex) -> Result<LogComplex> {
        let lambda = self
            .multiplier_scalar()
            .ok_or_else(|| Error::invalid("log-polar evaluation is planar only"))?;
        let ln_lam = lambda.norm().ln();
        if z.ln_abs <= LN_MODERATE_ARG {
            return Ok(self.refine_plain(z, lambda)?.0);
        }
        let m = ((z.ln_abs - LN_MODERATE_ARG) / ln_lam).ceil() as u64;
        if m > 20_000 {
            return Err(Error::LogOverflow);
        }
        let u = LogComplex::new(
            z.ln_abs - m as f64 * ln_lam,
            wrap_angle(z.arg - m as f64 * lambda.arg()),
        );
        let (mut w, _) = self.refine_plain(u, lambda)?;
        for _ in 0..m {
            w = self.map.apply_ln(w)?;
            if !w.ln_abs.is_finite() {
                return Err(Error::LogOverflow);
            }
        }
        Ok(w)
    }

    /// Truncation refinement at a moderate argument: Richardson-extrapolated
    /// estimates until successive agreement meets the tolerance (aiming
    /// lower when the model tolerance is loose, so forward pushes start from
    /// the most accurate base available). Returns the estimate and the gap
    /// it achieved. A refinement that stalls at the rounding floor still
    /// succeeds if its best gap met the model tolerance.
    fn refine_plain(&self, z: LogComplex, lambda: Complex64) -> Result<(LogComplex, f64)> {
        let ln_lam = lambda.norm().ln();
        let ln_rho = self.rho.ln();
        let aim = self.tolerance.min(1e-12);
        let n0 = if z.ln_abs < ln_rho {
            0
        } else {
            ((z.ln_abs - ln_rho) / ln_lam).floor() as usize + 1
        };
        let one = Complex64::new(1.0, 0.0);
        let mut raw_prev: Option<LogComplex> = None;
        let mut diff_prev: Option<Complex64> = None;
        let mut armed = false;
        let mut extr_prev: Option<LogComplex> = None;
        let mut best: Option<(f64, LogComplex)> = None;
        let mut stalled = 0usize;
        if n0 <= self.n_max {
            for n in n0..=self.n_max {
                let raw = self.forward_planar(z, lambda, n)?;
                if let Some(p) = raw_prev {
                    // Bit-identical successive truncations at the first pair
                    // mean the map is exactly linear on the backward orbit
                    // and the value is already exact. After a gap history
                    // exists they mean the increment's nonlinear response
                    // fell below f64 resolution instead; deeper n only
                    // repeats the frozen value and its zero gap would be
                    // mistaken for convergence.
                    if raw.ln_abs == p.ln_abs && raw.arg == p.arg {
                        if best.is_none() {
                            return Ok((raw, 0.0));
                        }
                        break;
                    }
                    // Healthy truncations differ by a factor shrinking like
                    // 1/lambda. Near f64 resolution the increment's
                    // nonlinear response quantizes, the ratio of successive
                    // differences breaks away, and extrapolated estimates
                    // start agreeing tightly on a wrong plateau; stop at
                    // the first broken pair. Early rungs violate the ratio
                    // legitimately, so the check arms once it first holds.
                    let t = p.div(raw);
                    let diff = if t.is_plain_representable() {
                        Some(one - t.to_complex())
                    } else {
                        None
                    };
                    if let (Some(d), Some(dp)) = (diff, diff_prev) {
                        if dp.norm() > 0.0 {
                            let dev = (lambda * d / dp - one).norm();
                            if dev < RATIO_BREAK {
                                armed = true;
                            } else if armed {
                                break;
                            }
                        }
                    }
                    diff_prev = diff;
                }
                let extr = match raw_prev {
                    Some(p) => richardson(p, raw, lambda),
                    None => raw,
                };
                if let Some(p) = extr_prev {
                    let gap = estimate_gap(p, extr);
                    if gap <= aim {
                        return Ok((extr, gap));
                    }
                    if best.map(|(g, _)| gap < g).unwrap_or(true) {
                        best = Some((gap, extr));
                        stalled = 0;
                    } else {
                        stalled += 1;
                        // Past the rounding floor deeper truncations only
                        // accumulate noise; stop before accidental agreement
                        // of two noisy estimates masquerades as convergence.
                        if stalled >= STALL_LIMIT {
                            break;
                        }
                    }
                }
                raw_prev = Some(raw);
                extr_prev = Some(extr);
            }
        }
        match best {
            Some((gap, est)) if gap <= self.tolerance => Ok((est, gap)),
            _ => Err(Error::Convergence {
                steps: self.n_max,
                last_delta: best.map(|(g, _)| g).unwrap_or(f64::INFINITY),
                tolerance: self.tolerance,
            }),
        }
    }

    /// f^n(x0 + lambda^{-n} z), hybrid plain/log orbit.
    fn forward_planar(&self, z: LogComplex, lambda: Complex64, n: usize) -> Result<LogComplex> {
        let back = LogComplex::new(
            z.ln_abs - n as f64 * lambda.norm().ln(),
            wrap_angle(z.arg - n as f64 * lambda.arg()),
        );
        let mut w = self.x0_c() + back.to_complex();
        let plain_limit = (600.0 / self.map.degree().max(1) as f64).exp();
        let mut k = 0;
        while k < n && w.norm() < plain_limit {
            w = self.map.evaluate_c(w)?;
            if !w.is_finite() {
                return Err(Error::EvaluationFailure([w.re, w.im, f64::NAN]));
            }
            k += 1;
        }
        if k == n {
            return LogComplex::from_complex(w)
                .ok_or(Error::EvaluationFailure([w.re, w.im, f64::NAN]));
        }
        let mut wl = LogComplex::from_complex(w)
            .ok_or(Error::EvaluationFailure([w.re, w.im, f64::NAN]))?;
        for _ in k..n {
            wl = self.map.apply_ln(wl)?;
            if !wl.ln_abs.is_finite() {
                return Err(Error::LogOverflow);
            }
        }
        Ok(wl)
    }

    /// L(z) at a planar complex argument; errors with a log-overflow when
    /// the value exists but exceeds f64 (use `linearize_log` there).
    pub fn linearize_c(&self, z: Complex64) -> Result<Complex64> {
        if z.norm() == 0.0 {
            return Ok(self.x0_c());
        }
        let zl = LogComplex::from_complex(z)
            .ok_or(Error::EvaluationFailure([z.re, z.im, f64::NAN]))?;
        let l = self.linearize_log(zl)?;
        if l.ln_abs >= LN_F64_MAX {
            return Err(Error::LogOverflow);
        }
        Ok(l.to_complex())
    }

    /// L(z), dispatching on dimension.
    pub fn linearize(&self, z: Point) -> Result<Point> {
        match &self.multiplier {
            Multiplier::Scalar(_) => {
                let zc = z.to_complex()?;
                Ok(Point::from_complex(self.linearize_c(zc)?))
            }
            Multiplier::Model(phi) => self.linearize_spatial(z, phi),
        }
    }

    fn linearize_spatial(&self, x: Point, phi: &MapSpec) -> Result<Point> {
        if x.dim() != Dim::Three {
            return Err(Error::DimensionMismatch { map_dim: 3, point_dim: x.dim().as_u8() });
        }
        let (scale, rotation) = match phi {
            MapSpec::Loxodromic { scale, rotation } => (*scale, rotation),
            _ => unreachable!("validated in the constructor"),
        };
        let rot_inv = rotation.transpose();
        let n0 = if x.norm() < self.rho {
            0
        } else {
            ((x.norm() / self.rho).ln() / scale.ln()).floor() as usize + 1
        };
        let mut prev: Option<Point> = None;
        let mut last_delta = f64::INFINITY;
        if n0 <= self.n_max {
            for n in n0..=self.n_max {
                let mut v = x.raw();
                for _ in 0..n {
                    v = rot_inv.apply(v);
                    for c in v.iter_mut() {
                        *c /= scale;
                    }
                }
                let mut w = self.x0.add(Point::spatial(v[0], v[1], v[2]));
                for _ in 0..n {
                    w = self.map.evaluate(w)?;
                    if !w.norm().is_finite() {
                        return Err(Error::EvaluationFailure(w.raw()));
                    }
                }
                if let Some(p) = prev {
                    last_delta = w.dist(p);
                    if last_delta <= self.tolerance * (1.0 + w.norm()) {
                        return Ok(w);
                    }
                }
                prev = Some(w);
            }
        }
        Err(Error::Convergence {
            steps: self.n_max,
            last_delta,
            tolerance: self.tolerance,
        })
    }

    /// |f(L(z)) - L(model(z))|, the defect in the functional equation.
    pub fn residual(&self, z: Point) -> Result<f64> {
        match &self.multiplier {
            Multiplier::Scalar(lambda) => {
                let zc = z.to_complex()?;
                let lz = self.linearize_c(zc)?;
                let flz = self.map.evaluate_c(lz)?;
                let llz = self.linearize_c(lambda * zc)?;
                Ok((flz - llz).norm())
            }
            Multiplier::Model(phi) => {
                let lz = self.linearize(z)?;
                let flz = self.map.evaluate(lz)?;
                let llz = self.linearize(phi.evaluate(z)?)?;
                Ok(flz.dist(llz))
            }
        }
    }

    /// Residual scaled by the magnitude of the compared values.
    pub fn residual_relative(&self, z: Point) -> Result<f64> {
        match &self.multiplier {
            Multiplier::Scalar(lambda) => {
                let zc = z.to_complex()?;
                let llz = self.linearize_c(lambda * zc)?;
                Ok(self.residual(z)? / (1.0 + llz.norm()))
            }
            Multiplier::Model(phi) => {
                let llz = self.linearize(phi.evaluate(z)?)?;
                Ok(self.residual(z)? / (1.0 + llz.norm()))
            }
        }
    }

    /// Solve L(z) = w near the fixed point. Seeded by w - x0 (valid because
    /// L(z) = x0 + z + O(z^2)), refined by Newton steps on the real 2x2
    /// Jacobian of L, which also covers nonconformal linearizers.
    pub fn local_inverse_c(&self, w: Complex64) -> Result<Complex64> {
        self.local_inverse_seeded_c(w, w - self.x0_c())
    }

    /// Local inverse started from an explicit seed. Curve pull-backs seed
    /// each vertex from the previous result, which keeps the chain on one
    /// branch where the default offset seed could hop.
    pub fn local_inverse_seeded_c(&self, w: Complex64, seed: Complex64) -> Result<Complex64> {
        let x0 = self.x0_c();
        let tol = self.tolerance;
        let mut z = seed;
        let mut best_rt = f64::INFINITY;
        for _ in 0..64 {
            let lz = self.linearize_c(z)?;
            let err = lz - w;
            best_rt = best_rt.min(err.norm());
            if err.norm() <= tol * (1.0 + w.norm()) {
                return Ok(z);
            }
            let h = 1e-7 * (1.0 + z.norm());
            let lx = self.linearize_c(z + Complex64::new(h, 0.0))?;
            let ly = self.linearize_c(z + Complex64::new(0.0, h))?;
            // Columns of the real Jacobian.
            let a = (lx.re - lz.re) / h;
            let c = (lx.im - lz.im) / h;
            let b = (ly.re - lz.re) / h;
            let d = (ly.im - lz.im) / h;
            let det = a * d - b * c;
            if det.abs() < 1e-14 {
                break;
            }
            let dx = (d * err.re - b * err.im) / det;
            let dy = (a * err.im - c * err.re) / det;
            z -= Complex64::new(dx, dy);
            if !z.is_finite() || z.norm() > 4.0 * self.rho + w.norm() + x0.norm() {
                break;
            }
        }
        Err(Error::OutsideInjectivity { round_trip: best_rt })
    }

    /// Dimension-dispatching form of the local inverse. The 3-D case uses
    /// damped fixed-point iteration, which converges for the conformal
    /// similarity models where L is near-isometric close to 0.
    pub fn local_inverse(&self, w: Point) -> Result<Point> {
        match &self.multiplier {
            Multiplier::Scalar(_) => {
                let wc = w.to_complex()?;
                Ok(Point::from_complex(self.local_inverse_c(wc)?))
            }
            Multiplier::Model(_) => {
                let tol = self.tolerance;
                let mut z = w.sub(self.x0);
                let mut best_rt = f64::INFINITY;
                for _ in 0..128 {
                    let lz = self.linearize(z)?;
                    let err = lz.sub(w);
                    best_rt = best_rt.min(err.norm());
                    if err.norm() <= tol * (1.0 + w.norm()) {
                        return Ok(z);
                    }
                    z = z.sub(err.scale(0.9));
                    if !z.norm().is_finite() {
                        break;
                    }
                }
                Err(Error::OutsideInjectivity { round_trip: best_rt })
            }
        }
    }

    /// CSV table of linearizer samples: one row per query point.
    pub fn sample_table(&self, zs: &[Complex64]) -> Result<String> {
        if self.multiplier_scalar().is_none() {
            return Err(Error::invalid("sample tables are planar only"));
        }
        let mut out = String::from("re z, im z, re L, im L, residual\n");
        for z in zs {
            let l = self.linearize_c(*z)?;
            let r = self.residual(Point::from_complex(*z))?;
            writeln!(out, "{}, {}, {}, {}, {:e}", z.re, z.im, l.re, l.im, r)
                .expect("string write");
        }
        Ok(out)
    }
}

/// One extrapolation step on successive truncations: the leading truncation
/// error scales by exactly 1/lambda per step, so
/// cur + (cur - prev)/(lambda - 1) cancels it. Computed multiplicatively so
/// it stays exact for values only representable in log form. Skipped for
/// multipliers too close to 1, where the correction divides by noise.
fn richardson(prev: LogComplex, cur: LogComplex, lambda: Complex64) -> LogComplex {
    let denom = lambda - 1.0;
    if denom.norm() < 0.3 {
        return cur;
    }
    let t = prev.div(cur);
    if !t.is_plain_representable() {
        return cur;
    }
    let factor = 1.0 + (1.0 - t.to_complex()) / denom;
    match LogComplex::from_complex(factor) {
        Some(f) => cur.mul(f),
        None => cur,
    }
}

/// Gap between successive truncations, absolute near the origin and
/// relative once values leave plain f64 range; the refinement loop stops
/// when this drops under the model tolerance.
///
/// Beyond plain range only the modulus is compared. At those magnitudes
/// each orbit step doubles the argument, so the argument of L carries
/// irreducible orbit noise no refinement removes; the log-modulus is the
/// quantity the escape machinery consumes and the one that converges.
fn estimate_gap(a: LogComplex, b: LogComplex) -> f64 {
    if a.ln_abs < LN_PLAIN_EVAL && b.ln_abs < LN_PLAIN_EVAL {
        let d = (a.to_complex() - b.to_complex()).norm();
        d / (1.0 + b.to_complex().norm())
    } else {
        (a.ln_abs - b.ln_abs).abs()
    }
}

fn default_planar_radius(map: &MapSpec, x0: Complex64) -> Result<f64> {
    match map.critical_points() {
        Some(crit) => {
            let crit = crit?;
            if crit.is_empty() {
                return Ok(1.0);
            }
            let dist = crit
                .iter()
                .map(|c| (x0 - c).norm())
                .fold(f64::INFINITY, f64::min);
            if dist <= 0.0 {
                return Err(Error::invalid(
                    "fixed point coincides with a critical point, no repelling chart",
                ));
            }
            Ok(dist / 2.0)
        }
        None => Err(Error::invalid(
            "no default linearization radius for this family; give one explicitly",
        )),
    }
}

/// The linearizer itself is a map of the plane (or 3-space), so the modulus
/// functionals apply to it directly; this is how the escape-set machinery
/// measures M(r, L) at radii far outside f64 range.
impl ModulusMap for LinearizerModel {
    fn dim(&self) -> Dim {
        self.map.dim()
    }

    fn apply(&self, p: Point) -> Result<Point> {
        self.linearize(p)
    }

    fn apply_log_radial(&self, ln_r: f64, dir: Point) -> Result<(f64, Point)> {
        match &self.multiplier {
            Multiplier::Scalar(_) => {
                let d = dir.coords();
                let z = LogComplex::new(ln_r, d[1].atan2(d[0]));
                let l = self.linearize_log(z)?;
                Ok((l.ln_abs, Point::planar(l.arg.cos(), l.arg.sin())))
            }
            Multiplier::Model(_) => {
                if ln_r >= LN_PLAIN_EVAL {
                    return Err(Error::LogOverflow);
                }
                let p = self.linearize(dir.scale(ln_r.exp()))?;
                let n = p.norm();
                if n == 0.0 || !n.is_finite() {
                    return Err(Error::EvaluationFailure(p.raw()));
                }
                Ok((n.ln(), p.scale(1.0 / n)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::max_modulus;
    use crate::geom::vec3::Mat3;

    fn squaring_model() -> LinearizerModel {
        // z^2 at x0 = 1: the linearizer is exactly e^z.
        LinearizerModel::planar(
            MapSpec::polynomial(vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ])
            .unwrap(),
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            None,
        )
        .unwrap()
    }

    fn shifted_model() -> LinearizerModel {
        // z^2 - 6 at x0 = 3, lambda = 6.
        LinearizerModel::planar(
            MapSpec::quadratic(Complex64::new(-6.0, 0.0)),
            Complex64::new(3.0, 0.0),
            Complex64::new(6.0, 0.0),
            None,
        )
        .unwrap()
    }

    #[test]
    fn default_radius_is_half_way_to_the_critical_point() {
        assert!((squaring_model().radius() - 0.5).abs() < 1e-15);
        assert!((shifted_model().radius() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn exponential_oracle() {
        let m = squaring_model();
        let e = std::f64::consts::E;
        let l1 = m.linearize_c(Complex64::new(1.0, 0.0)).unwrap();
        assert!((l1 - Complex64::new(e, 0.0)).norm() < 1e-8, "L(1) = {l1}");
        for k in 0..24 {
            let r = [0.5, 1.3, 2.0][k % 3];
            let th = std::f64::consts::TAU * (k as f64) / 24.0;
            let z = Complex64::from_polar(r, th);
            let want = z.exp();
            let got = m.linearize_c(z).unwrap();
            assert!((got - want).norm() < 1e-8, "L({z}) = {got}, want {want}");
        }
    }

    #[test]
    fn normalization_at_zero_and_first_order() {
        let m = shifted_model();
        let l0 = m.linearize_c(Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(l0, Complex64::new(3.0, 0.0));
        let z = Complex64::new(1e-8, 0.0);
        let lz = m.linearize_c(z).unwrap();
        assert!((lz - Complex64::new(3.0 + 1e-8, 0.0)).norm() < 1e-14, "L = {lz}");
    }

    #[test]
    fn functional_equation_residuals() {
        let sq = squaring_model();
        assert!(sq.residual(Point::planar(0.0, 0.0)).unwrap() < 1e-12);
        assert!(sq.residual_relative(Point::planar(1.5, 0.0)).unwrap() < 1e-8);
        let sh = shifted_model();
        assert!(sh.residual_relative(Point::planar(2.0, 1.0)).unwrap() < 1e-6);
    }

    #[test]
    fn local_inverse_oracles() {
        let sq = squaring_model();
        let z = sq.local_inverse_c(Complex64::new(std::f64::consts::E, 0.0)).unwrap();
        assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-8, "z = {z}");
        let at_x0 = sq.local_inverse_c(Complex64::new(1.0, 0.0)).unwrap();
        assert!(at_x0.norm() < 1e-10);

        let sh = shifted_model();
        let z = sh.local_inverse_c(Complex64::new(3.0001, 0.0)).unwrap();
        assert!((z - Complex64::new(1.0001e-4, 0.0)).norm() < 1e-8, "z = {z}");
    }

    #[test]
    fn inverse_round_trip_inside_half_radius() {
        let m = shifted_model();
        for k in 0..16 {
            let r = m.radius() / 2.0 * (0.2 + 0.8 * (k as f64) / 16.0);
            let th = std::f64::consts::TAU * (k as f64) * 0.618;
            let z = Complex64::from_polar(r, th);
            let w = m.linearize_c(z).unwrap();
            let back = m.local_inverse_c(w).unwrap();
            assert!((back - z).norm() < 10.0 * DEFAULT_TOLERANCE, "{z} -> {w} -> {back}");
        }
    }

    #[test]
    fn log_path_satisfies_the_functional_equation() {
        let m = shifted_model();
        let z = LogComplex::new(40.0, 0.7);
        let lz = m.linearize_log(z).unwrap();
        assert!(lz.ln_abs > LN_F64_MAX, "expected a value beyond f64, got {}", lz.ln_abs);
        let lhs = m.map().apply_ln(lz).unwrap();
        let z6 = LogComplex::new(40.0 + 6.0f64.ln(), 0.7);
        let rhs = m.linearize_log(z6).unwrap();
        let dln = (lhs.ln_abs - rhs.ln_abs).abs();
        let darg = wrap_angle(lhs.arg - rhs.arg).abs();
        println!("ln lhs = {}, ln rhs = {}, dln = {dln:.3e}, darg = {darg:.3e}", lhs.ln_abs, rhs.ln_abs);
        assert!(dln < 1e-6, "moduli disagree, dln = {dln:.3e}");
        assert!(darg < 1e-5, "arguments disagree, darg = {darg:.3e}");
    }

    #[test]
    fn max_modulus_squares_under_the_multiplier() {
        // M(6r, L) is within +-6 of M(r, L)^2 because f = z^2 - 6 acts on
        // the image circle; an independent consistency check on the tower.
        let m = shifted_model();
        let m20 = max_modulus(&m, 20.0, 8192).unwrap();
        let m120 = max_modulus(&m, 120.0, 8192).unwrap();
        // Sampling finds each maximum from below, and squaring amplifies the
        // deficit of M(20) by 2 M(20); allow that much beyond the exact +-6.
        assert!(
            (m120 - m20 * m20).abs() <= 6.0 + 0.05,
            "M(120) = {m120}, M(20)^2 = {}",
            m20 * m20
        );
        assert!(m20 > 20.0, "the linearizer should expand, M(20) = {m20}");
    }

    #[test]
    fn nonconformal_model_linearizes_its_linear_disc() {
        // Near 0 the twisted doubling map is exactly z -> 2z, so L = id on
        // a small disc once the radius confines every backward orbit there.
        let m = LinearizerModel::planar(
            MapSpec::twisted_doubling(),
            Complex64::new(0.0, 0.0),
            Complex64::new(2.0, 0.0),
            Some(0.1),
        )
        .unwrap();
        let z = Complex64::new(0.05, -0.02);
        let lz = m.linearize_c(z).unwrap();
        assert!((lz - z).norm() < 1e-12, "L({z}) = {lz}");
        assert!(m.residual(Point::planar(3.0, 1.0)).unwrap() < 1e-9);
    }

    #[test]
    fn spatial_similarity_linearizer_is_a_translation() {
        // f(x) = 2x + (1,0,0) fixes (-1,0,0); its linearizer is x0 + x.
        let f = MapSpec::similarity(2.0, Mat3::identity(), [1.0, 0.0, 0.0]).unwrap();
        let phi = MapSpec::loxodromic(2.0, Mat3::identity()).unwrap();
        let x0 = Point::spatial(-1.0, 0.0, 0.0);
        let m = LinearizerModel::spatial(f, x0, phi, None).unwrap();
        let x = Point::spatial(0.3, -0.2, 0.1);
        let lx = m.linearize(x).unwrap();
        assert!(lx.dist(x0.add(x)) < 1e-12);
        let back = m.local_inverse(lx).unwrap();
        assert!(back.dist(x) < 1e-10);
        assert!(m.residual(x).unwrap() < 1e-10);
    }

    #[test]
    fn model_validation() {
        // Wrong multiplier for z^2 - 6 at 3.
        assert!(LinearizerModel::planar(
            MapSpec::quadratic(Complex64::new(-6.0, 0.0)),
            Complex64::new(3.0, 0.0),
            Complex64::new(5.0, 0.0),
            None,
        )
        .is_err());
        // Not a fixed point.
        assert!(LinearizerModel::planar(
            MapSpec::quadratic(Complex64::new(-6.0, 0.0)),
            Complex64::new(2.9, 0.0),
            Complex64::new(6.0, 0.0),
            None,
        )
        .is_err());
        // Twisted doubling demands an explicit radius.
        assert!(LinearizerModel::planar(
            MapSpec::twisted_doubling(),
            Complex64::new(0.0, 0.0),
            Complex64::new(2.0, 0.0),
            None,
        )
        .is_err());
    }

    #[test]
    fn deep_arguments_hit_the_refinement_cap() {
        let m = shifted_model().with_refinement_cap(3).unwrap();
        let err = m.linearize_log(LogComplex::new(40.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Convergence { steps: 3, .. }), "{err:?}");
    }

    #[test]
    fn sample_table_has_the_documented_columns() {
        let m = shifted_model();
        let t = m
            .sample_table(&[Complex64::new(0.5, 0.0), Complex64::new(0.0, 1.0)])
            .unwrap();
        let mut lines = t.lines();
        assert_eq!(lines.next().unwrap(), "re z, im z, re L, im L, residual");
        assert_eq!(lines.count(), 2);
    }
}
