//! Measured growth laws for polynomial-type quasiregular maps.
//!
//! Everything here is a measurement, not a proof: iterate sandwich bounds,
//! expansion constants of an injective family, ratio bounds of iterates,
//! regularity of the max-modulus under scaled radii, and the mu threshold
//! that the web certificate needs. Checks return reports carrying both
//! sides of the inequality in log scale together with the slack, so a
//! failure states how far off the measurement landed. Log-space arithmetic
//! throughout; M^2 of modest inputs already leaves f64.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::modulus::{ln_extremal_modulus, refined_ln_extremal, Extremum, ModulusMap};
use crate::geom::point::Point;
use crate::geom::sample::{circle_directions, sphere_directions, SamplePolicy};
use crate::linearizer::LinearizerModel;
use crate::maps::MapSpec;

/// Sphere sample budget for the fixed-budget measurements in this module.
const MODULUS_SAMPLES: usize = 512;

/// Iteration cap when searching for a doubling power.
const EXPANSION_POWER_CAP: u32 = 64;

/// Constants claimed for the iterate sandwich of a degree-d map with
/// dilatation K in ambient dimension n: for |x| > r0,
/// c1^{q_j((d/K)^{1/(n-1)})} |x|^{(d/K)^{j/(n-1)}} <= |f^j(x)| and the
/// mirrored upper bound with c2 and dK.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowthConstants {
    pub c1: f64,
    pub c2: f64,
    pub r0: f64,
    pub d: u32,
    pub k: f64,
    pub n: u8,
}

impl GrowthConstants {
    pub fn new(c1: f64, c2: f64, r0: f64, d: u32, k: f64, n: u8) -> Result<Self> {
        if !(c1 > 0.0) || !(c2 > 0.0) || !(r0 > 0.0) {
            return Err(Error::invalid(format!(
                "growth constants must be positive, got c1={c1}, c2={c2}, r0={r0}"
            )));
        }
        if c1 > c2 {
            return Err(Error::invalid(format!("c1 must not exceed c2, got {c1} > {c2}")));
        }
        if !((d as f64) > k) || !(k >= 1.0) {
            return Err(Error::NoValidMu { d: d as f64, k });
        }
        if n != 2 && n != 3 {
            return Err(Error::invalid(format!("ambient dimension must be 2 or 3, got {n}")));
        }
        Ok(GrowthConstants { c1, c2, r0, d, k, n })
    }
}

/// Measured expansion data of an injective family: the least power whose
/// minimum modulus doubles every tested radius, the max-modulus ratio bound
/// c3 at that power, and the distortion ratios M/m for one application
/// (eta_at_1) and for the doubling power (c4).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExpansionConstants {
    pub n_iter: u32,
    pub c3: f64,
    pub c4: f64,
    pub eta_at_1: f64,
}

/// The separation exponent floor: mu must exceed
/// (log c3 / log 2) * ((log d + log K) / (log d - log K)).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MuThreshold {
    pub d: u32,
    pub k: f64,
    pub c3: f64,
    pub mu_min: f64,
    pub chosen_mu: f64,
}

/// q_j(y) = y^{j-1} + ... + y + 1. Requires j >= 1.
pub fn q_poly(j: u32, y: f64) -> f64 {
    assert!(j >= 1, "q_poly needs j >= 1");
    let mut acc = 1.0;
    for _ in 1..j {
        acc = acc * y + 1.0;
    }
    acc
}

/// Least admissible separation exponent for degree d, dilatation K and
/// expansion constant c3, with a 5 percent working margin on top.
pub fn mu_threshold(d: u32, k: f64, c3: f64) -> Result<MuThreshold> {
    let df = d as f64;
    if !(df > k) {
        return Err(Error::NoValidMu { d: df, k });
    }
    if !(k >= 1.0) || !(c3 > 1.0) {
        return Err(Error::invalid(format!(
            "need K >= 1 and c3 > 1, got K={k}, c3={c3}"
        )));
    }
    let mu_min = (c3.ln() / 2f64.ln()) * ((df.ln() + k.ln()) / (df.ln() - k.ln()));
    Ok(MuThreshold { d, k, c3, mu_min, chosen_mu: 1.05 * mu_min })
}

/// The m-fold composition of a map, evaluated point by point.
struct Iterate<'a, M: ModulusMap + ?Sized> {
    map: &'a M,
    times: u32,
}

impl<M: ModulusMap + ?Sized> ModulusMap for Iterate<'_, M> {
    fn dim(&self) -> crate::geom::point::Dim {
        self.map.dim()
    }

    fn apply(&self, p: Point) -> Result<Point> {
        let mut q = p;
        for _ in 0..self.times {
            q = self.map.apply(q)?;
        }
        Ok(q)
    }

    fn apply_log_radial(&self, ln_r: f64, dir: Point) -> Result<(f64, Point)> {
        let mut cur = (ln_r, dir);
        for _ in 0..self.times {
            cur = self.map.apply_log_radial(cur.0, cur.1)?;
        }
        Ok(cur)
    }
}

/// Search for the least power N <= 64 of an injective map whose minimum
/// modulus at least doubles every radius in `radii`, and record the ratio
/// bounds at that power. All quantities are sampled suprema and infima.
pub fn expansion_constants(phi: &MapSpec, radii: &[f64]) -> Result<ExpansionConstants> {
    if !phi.is_injective() {
        return Err(Error::invalid("expansion constants need an injective family"));
    }
    if radii.is_empty() {
        return Err(Error::EmptySet);
    }
    for &r in radii {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::invalid(format!("test radius must be positive, got {r}")));
        }
    }
    let ratio = |n_iter: u32, r: f64, which: Extremum| -> Result<f64> {
        let it = Iterate { map: phi, times: n_iter };
        let ln = ln_extremal_modulus(&it, r.ln(), MODULUS_SAMPLES, which)?;
        Ok((ln - r.ln()).exp())
    };
    let mut eta_at_1: f64 = 1.0;
    for &r in radii {
        let up = ratio(1, r, Extremum::Max)?;
        let lo = ratio(1, r, Extremum::Min)?;
        eta_at_1 = eta_at_1.max(up / lo);
    }
    for n_iter in 1..=EXPANSION_POWER_CAP {
        let mut min_ratio = f64::INFINITY;
        let mut max_ratio: f64 = 0.0;
        for &r in radii {
            min_ratio = min_ratio.min(ratio(n_iter, r, Extremum::Min)?);
            max_ratio = max_ratio.max(ratio(n_iter, r, Extremum::Max)?);
        }
        if min_ratio >= 2.0 {
            let mut c4: f64 = 1.0;
            for &r in radii {
                let up = ratio(n_iter, r, Extremum::Max)?;
                let lo = ratio(n_iter, r, Extremum::Min)?;
                c4 = c4.max(up / lo);
            }
            return Ok(ExpansionConstants { n_iter, c3: max_ratio, c4, eta_at_1 });
        }
    }
    Err(Error::NotExpanding { tested: EXPANSION_POWER_CAP })
}

/// Measured M(t, phi^m) / m(s, phi^m). Conformal families give exactly t/s
/// for every m; the spread above that is the distortion the iterates
/// accumulate.
pub fn qs_ratio(phi: &MapSpec, s: f64, t: f64, m: u32) -> Result<f64> {
    if !(s > 0.0) || !(t >= s) || !t.is_finite() {
        return Err(Error::invalid(format!("need 0 < s <= t, got s={s}, t={t}")));
    }
    if m == 0 {
        return Err(Error::invalid("iterate count must be at least 1"));
    }
    let it = Iterate { map: phi, times: m };
    let ln_up = ln_extremal_modulus(&it, t.ln(), MODULUS_SAMPLES, Extremum::Max)?;
    let ln_lo = ln_extremal_modulus(&it, s.ln(), MODULUS_SAMPLES, Extremum::Min)?;
    Ok((ln_up - ln_lo).exp())
}

/// One sandwich measurement: ln of both claimed bounds and of the actual
/// iterate magnitude.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SandwichReport {
    pub j: u32,
    pub ln_lower: f64,
    pub ln_value: f64,
    pub ln_upper: f64,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.ln_lower <= self.ln_value && self.ln_value <= self.ln_upper
    }

    /// ln |f^j(x)| minus ln of the lower bound; negative when that side fails.
    pub fn lower_slack_ln(&self) -> f64 {
        self.ln_value - self.ln_lower
    }

    /// ln of the upper bound minus ln |f^j(x)|; negative when that side fails.
    pub fn upper_slack_ln(&self) -> f64 {
        self.ln_upper - self.ln_value
    }

    pub fn failing_side(&self) -> Option<&'static str> {
        if self.ln_value < self.ln_lower {
            Some("lower")
        } else if self.ln_value > self.ln_upper {
            Some("upper")
        } else {
            None
        }
    }
}

/// Check the iterate sandwich at a single point: the j-th iterate magnitude
/// against the claimed two-sided polynomial-type bounds. A violated bound
/// comes back as a failed report, not an error.
pub fn sandwich_check(
    map: &MapSpec,
    consts: &GrowthConstants,
    x: Point,
    j: u32,
) -> Result<SandwichReport> {
    if j == 0 {
        return Err(Error::invalid("sandwich needs j >= 1"));
    }
    let r = x.norm();
    if !(r > consts.r0) {
        return Err(Error::invalid(format!(
            "sandwich point must satisfy |x| > R0 = {}, got {r}",
            consts.r0
        )));
    }
    let dir = x.scale(1.0 / r);
    let mut cur = (r.ln(), dir);
    for _ in 0..j {
        cur = map.apply_log_radial(cur.0, cur.1)?;
    }
    let root_exp = 1.0 / (consts.n as f64 - 1.0);
    let dk_lower = (consts.d as f64 / consts.k).powf(root_exp);
    let dk_upper = (consts.d as f64 * consts.k).powf(root_exp);
    let ln_lower = q_poly(j, dk_lower) * consts.c1.ln() + dk_lower.powi(j as i32) * r.ln();
    let ln_upper = q_poly(j, dk_upper) * consts.c2.ln() + dk_upper.powi(j as i32) * r.ln();
    Ok(SandwichReport { j, ln_lower, ln_value: cur.0, ln_upper })
}

/// One regularity measurement of the linearizer's max modulus under c3-fold
/// radius scaling.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReggrowthReport {
    pub m: u32,
    pub ln_lhs: f64,
    pub ln_rhs: f64,
    pub samples_used: usize,
}

impl ReggrowthReport {
    pub fn passed(&self) -> bool {
        self.ln_lhs >= self.ln_rhs
    }

    /// Measured left side minus the claimed right side, in ln scale.
    pub fn slack(&self) -> f64 {
        self.ln_lhs - self.ln_rhs
    }
}

/// Verify that log M(c3^m r, L) dominates
/// log M(r, L) * prod_{i=1}^{m-1} ((d/K)^{1/(n-1)} + log c1 / log M(c3^i r, L))
/// with every modulus measured. At m = 1 the product is empty and the check
/// reduces to monotonicity of M.
pub fn reggrowth_check(
    model: &LinearizerModel,
    c3: f64,
    c1: f64,
    r: f64,
    m: u32,
    policy: &SamplePolicy,
) -> Result<ReggrowthReport> {
    if m == 0 {
        return Err(Error::invalid("regularity check needs m >= 1"));
    }
    if !(c3 > 1.0) || !(c1 > 0.0) || !(r > 0.0) {
        return Err(Error::invalid(format!(
            "need c3 > 1, c1 > 0, r > 0, got c3={c3}, c1={c1}, r={r}"
        )));
    }
    if r <= model.radius() {
        return Err(Error::invalid(format!(
            "radius {r} sits inside the linearization disc (rho = {}), below the growth regime",
            model.radius()
        )));
    }
    let map = model.map();
    let d = map.degree() as f64;
    let k = map
        .declared_k()
        .ok_or_else(|| Error::invalid("regularity check needs a declared dilatation"))?;
    let n = map.dim().as_u8() as f64;
    let root = (d / k).powf(1.0 / (n - 1.0));
    let mut ln_m = Vec::with_capacity(m as usize + 1);
    let mut samples_used = 0usize;
    for i in 0..=m {
        let ln_r = r.ln() + i as f64 * c3.ln();
        let step = refined_ln_extremal(model, ln_r, policy, Extremum::Max)?;
        if step.ln_value <= 0.0 {
            return Err(Error::invalid(format!(
                "radius {r} sits below the growth region, M(c3^{i} r, L) <= 1"
            )));
        }
        samples_used = samples_used.max(step.samples_used);
        ln_m.push(step.ln_value);
    }
    let mut rhs = ln_m[0];
    for i in 1..m as usize {
        rhs *= root + c1.ln() / ln_m[i];
    }
    Ok(ReggrowthReport { m, ln_lhs: ln_m[m as usize], ln_rhs: rhs, samples_used })
}

/// The radius sequence r_m = c3^m M^m(R, L), kept in log scale.
#[derive(Debug, Clone, Serialize)]
pub struct RmSequence {
    pub ln_values: Vec<f64>,
    pub c3: f64,
    /// True when the tower left even the log-representable range before
    /// `count` levels; `ln_values` holds the levels that fit.
    pub truncated: bool,
}

impl RmSequence {
    /// Plain-scale radii; +inf where the value exceeds f64.
    pub fn values(&self) -> Vec<f64> {
        self.ln_values.iter().map(|ln| ln.exp()).collect()
    }
}

/// r_m = c3^m M^m(R, map) for m = 1..=count. The max-modulus tower is
/// measured level by level; if a level's evaluation overflows even in log
/// form, the list truncates there and says so.
pub fn rm_sequence(
    map: &(impl ModulusMap + ?Sized),
    c3: f64,
    big_r: f64,
    count: u32,
    policy: &SamplePolicy,
) -> Result<RmSequence> {
    if !(c3 > 1.0) || !(big_r > 0.0) || !big_r.is_finite() {
        return Err(Error::invalid(format!("need c3 > 1 and R > 0, got c3={c3}, R={big_r}")));
    }
    let mut ln_values = Vec::with_capacity(count as usize);
    let mut truncated = false;
    let mut ln_cur = big_r.ln();
    for level in 1..=count {
        let step = match refined_ln_extremal(&map, ln_cur, policy, Extremum::Max) {
            Ok(s) => s,
            Err(Error::LogOverflow) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e),
        };
        if step.ln_value <= ln_cur {
            return Err(Error::ThresholdTooSmall {
                r: ln_cur.exp(),
                max_mod: step.ln_value.exp(),
            });
        }
        ln_cur = step.ln_value;
        ln_values.push(level as f64 * c3.ln() + ln_cur);
    }
    Ok(RmSequence { ln_values, c3, truncated })
}

/// Distortion of the m-th iterate centred at x0: the ratio of the farthest
/// to the nearest image of the delta-sphere around x0, both measured from
/// the image of x0. The iterate must be injective near x0; antipodal image
/// collapses on the sampled sphere are rejected.
pub fn centered_distortion(
    map: &(impl ModulusMap + ?Sized),
    x0: Point,
    delta: f64,
    m: u32,
) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("sphere radius must be positive, got {delta}")));
    }
    if m == 0 {
        return Err(Error::invalid("distortion needs m >= 1"));
    }
    let it = Iterate { map, times: m };
    let center = it.apply(x0)?;
    let dirs = match x0.dim() {
        crate::geom::point::Dim::Two => circle_directions(1024),
        crate::geom::point::Dim::Three => sphere_directions(1024),
    };
    let images = dirs
        .par_iter()
        .map(|d| {
            let a = it.apply(x0.add(d.scale(delta)))?;
            let b = it.apply(x0.add(d.scale(-delta)))?;
            Ok((a, b))
        })
        .collect::<Result<Vec<(Point, Point)>>>()?;
    let mut far: f64 = 0.0;
    let mut near = f64::INFINITY;
    for (a, b) in &images {
        let (da, db) = (a.dist(center), b.dist(center));
        if a.dist(*b) <= 1e-12 * (da + db + delta) {
            return Err(Error::invalid(
                "iterate collapses antipodal sphere points, not injective near x0",
            ));
        }
        far = far.max(da).max(db);
        near = near.min(da).min(db);
    }
    if !(near > 0.0) {
        return Err(Error::invalid(
            "iterate maps a sphere point onto the centre image, not injective near x0",
        ));
    }
    Ok(far / near)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::point::Dim;
    use crate::geom::vec3::Mat3;
    use num_complex::Complex64;

    fn shifted_model() -> LinearizerModel {
        LinearizerModel::planar(
            MapSpec::quadratic(Complex64::new(-6.0, 0.0)),
            Complex64::new(3.0, 0.0),
            Complex64::new(6.0, 0.0),
            None,
        )
        .unwrap()
    }

    #[test]
    fn q_poly_oracles() {
        assert_eq!(q_poly(3, 2.0), 7.0);
        assert_eq!(q_poly(1, 5.0), 1.0);
        assert_eq!(q_poly(4, 3.0), 40.0);
    }

    #[test]
    fn q_poly_telescopes() {
        for j in 1..10u32 {
            let y = 1.7f64;
            let lhs = q_poly(j, y) * (y - 1.0);
            let rhs = y.powi(j as i32) - 1.0;
            assert!((lhs - rhs).abs() < 1e-9 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn mu_threshold_oracles() {
        let t = mu_threshold(2, 1.0, 6.0).unwrap();
        assert!((t.mu_min - 6f64.ln() / 2f64.ln()).abs() < 1e-12);
        assert!((t.mu_min - 2.584_962_500_721_156).abs() < 1e-12);
        assert!((t.chosen_mu - 1.05 * t.mu_min).abs() < 1e-12);

        let t = mu_threshold(2, 1.0, 2.0).unwrap();
        assert!((t.mu_min - 1.0).abs() < 1e-12);

        assert!(matches!(mu_threshold(2, 2.0, 2.0), Err(Error::NoValidMu { .. })));
    }

    #[test]
    fn mu_threshold_monotonicity() {
        let base = mu_threshold(3, 1.5, 4.0).unwrap().mu_min;
        assert!(mu_threshold(3, 1.5, 8.0).unwrap().mu_min > base);
        assert!(mu_threshold(3, 2.0, 4.0).unwrap().mu_min > base);
        assert!(mu_threshold(5, 1.5, 4.0).unwrap().mu_min < base);
    }

    #[test]
    fn expansion_of_similarities() {
        let radii = [0.5, 1.0, 4.0];
        let six = MapSpec::similarity(6.0, Mat3::identity(), [0.0, 0.0, 0.0]).unwrap();
        let e = expansion_constants(&six, &radii).unwrap();
        assert_eq!(e.n_iter, 1);
        assert!((e.c3 - 6.0).abs() < 1e-9);
        assert!((e.c4 - 1.0).abs() < 1e-9);
        assert!((e.eta_at_1 - 1.0).abs() < 1e-9);

        let slow = MapSpec::similarity(1.2, Mat3::identity(), [0.0, 0.0, 0.0]).unwrap();
        let e = expansion_constants(&slow, &radii).unwrap();
        assert_eq!(e.n_iter, 4);
        assert!((e.c3 - 1.2f64.powi(4)).abs() < 1e-9);

        let contracting = MapSpec::similarity(0.5, Mat3::identity(), [0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            expansion_constants(&contracting, &radii),
            Err(Error::NotExpanding { tested: 64 })
        ));
    }

    #[test]
    fn expansion_rejects_noninjective_maps() {
        let quad = MapSpec::quadratic(Complex64::new(-6.0, 0.0));
        assert!(expansion_constants(&quad, &[1.0]).is_err());
    }

    #[test]
    fn twisted_doubling_expands_with_distortion() {
        // Conjugate to doubling through a bounded warp, so some power
        // doubles every radius even though single steps can contract.
        let f = MapSpec::twisted_doubling();
        let e = expansion_constants(&f, &[0.5, 1.0, 2.0]).unwrap();
        assert!(e.n_iter <= 8, "doubling power N = {}", e.n_iter);
        assert!(e.c3 >= 2.0);
        assert!(e.eta_at_1 >= 1.0);
        assert!(e.c4 >= 1.0);
    }

    #[test]
    fn qs_ratio_of_conformal_maps_is_t_over_s() {
        let double = MapSpec::similarity(2.0, Mat3::identity(), [0.0, 0.0, 0.0]).unwrap();
        for m in [1u32, 3, 7] {
            let q = qs_ratio(&double, 1.0, 3.0, m).unwrap();
            assert!((q - 3.0).abs() < 1e-10, "m={m}: {q}");
        }
        let six = MapSpec::similarity(6.0, Mat3::identity(), [0.0, 0.0, 0.0]).unwrap();
        assert!((qs_ratio(&six, 2.0, 2.0, 7).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn qs_ratio_of_the_twisted_example_stays_finite() {
        let f = MapSpec::twisted_doubling();
        let q = qs_ratio(&f, 1.0, 2.0, 1).unwrap();
        assert!(q.is_finite() && q >= 2.0, "ratio {q}");
    }

    #[test]
    fn qs_ratio_rejects_bad_windows() {
        let double = MapSpec::similarity(2.0, Mat3::identity(), [0.0, 0.0, 0.0]).unwrap();
        assert!(qs_ratio(&double, 3.0, 1.0, 1).is_err());
        assert!(qs_ratio(&double, 1.0, 3.0, 0).is_err());
    }

    #[test]
    fn sandwich_oracle_first_iterate() {
        // f(10) = 94 against bounds 0.5 * 100 and 2 * 100.
        let map = MapSpec::quadratic(Complex64::new(-6.0, 0.0));
        let consts = GrowthConstants::new(0.5, 2.0, 4.0, 2, 1.0, 2).unwrap();
        let rep = sandwich_check(&map, &consts, Point::planar(10.0, 0.0), 1).unwrap();
        assert!(rep.passed());
        assert!((rep.ln_value - 94f64.ln()).abs() < 1e-9);
        assert!((rep.ln_lower - 50f64.ln()).abs() < 1e-12);
        assert!((rep.ln_upper - 200f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn sandwich_oracle_second_iterate() {
        // f^2(10) = 8830 against 0.5^3 * 10^4 and 2^3 * 10^4.
        let map = MapSpec::quadratic(Complex64::new(-6.0, 0.0));
        let consts = GrowthConstants::new(0.5, 2.0, 4.0, 2, 1.0, 2).unwrap();
        let rep = sandwich_check(&map, &consts, Point::planar(10.0, 0.0), 2).unwrap();
        assert!(rep.passed());
        assert!((rep.ln_value - 8830f64.ln()).abs() < 1e-9);
        assert!((rep.ln_lower - 1250f64.ln()).abs() < 1e-12);
        assert!((rep.ln_upper - 80000f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn sandwich_catches_a_wrong_degree_claim() {
        // A linear map claimed as degree 2: 2^j |x| cannot keep up with the
        // |x|^{2^j} floor, so the lower bound must fail once j grows.
        let map = MapSpec::polynomial(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(2.0, 0.0),
        ])
        .unwrap();
        let consts = GrowthConstants::new(0.5, 2.0, 4.0, 2, 1.0, 2).unwrap();
        let rep = sandwich_check(&map, &consts, Point::planar(10.0, 0.0), 4).unwrap();
        assert!(!rep.passed());
        assert_eq!(rep.failing_side(), Some("lower"));
        assert!(rep.lower_slack_ln() < 0.0);
    }

    #[test]
    fn sandwich_rejects_points_inside_r0() {
        let map = MapSpec::quadratic(Complex64::new(-6.0, 0.0));
        let consts = GrowthConstants::new(0.5, 2.0, 4.0, 2, 1.0, 2).unwrap();
        assert!(sandwich_check(&map, &consts, Point::planar(3.0, 0.0), 1).is_err());
    }

    #[test]
    fn reggrowth_holds_for_the_shifted_model() {
        let model = shifted_model();
        let policy = SamplePolicy::with_samples(256);
        let rep = reggrowth_check(&model, 6.0, 0.5, 20.0, 2, &policy).unwrap();
        assert!(rep.passed(), "lhs {} vs rhs {}", rep.ln_lhs, rep.ln_rhs);
        assert!(rep.slack() > 0.0);
    }

    #[test]
    fn reggrowth_at_m_one_is_monotonicity() {
        let model = shifted_model();
        let policy = SamplePolicy::with_samples(256);
        let rep = reggrowth_check(&model, 6.0, 0.5, 20.0, 1, &policy).unwrap();
        assert!(rep.passed());
    }

    #[test]
    fn reggrowth_rejects_radii_below_growth() {
        let model = shifted_model();
        let policy = SamplePolicy::with_samples(64);
        assert!(reggrowth_check(&model, 6.0, 0.5, 0.2, 2, &policy).is_err());
    }

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
            let c = dir.coords();
            let theta = c[1].atan2(c[0]);
            let (s, co) = (2.0 * theta).sin_cos();
            Ok((2.0 * ln_r, Point::planar(co, s)))
        }
    }

    #[test]
    fn rm_sequence_squaring_oracle() {
        // M(r) = r^2 exactly: r_1 = 2 * 4 = 8, r_2 = 4 * 16 = 64.
        let policy = SamplePolicy::with_samples(32);
        let seq = rm_sequence(&Squarer, 2.0, 2.0, 2, &policy).unwrap();
        assert!(!seq.truncated);
        let v = seq.values();
        assert!((v[0] - 8.0).abs() < 1e-9);
        assert!((v[1] - 64.0).abs() < 1e-9);
    }

    #[test]
    fn rm_sequence_empty_and_preconditions() {
        let policy = SamplePolicy::with_samples(32);
        let seq = rm_sequence(&Squarer, 2.0, 2.0, 0, &policy).unwrap();
        assert!(seq.ln_values.is_empty());
        // Inside the unit circle squaring contracts, so the tower refuses.
        assert!(matches!(
            rm_sequence(&Squarer, 2.0, 0.5, 1, &policy),
            Err(Error::ThresholdTooSmall { .. })
        ));
        assert!(rm_sequence(&Squarer, 0.5, 2.0, 1, &policy).is_err());
    }

    #[test]
    fn rm_sequence_of_the_shifted_model_grows() {
        let model = shifted_model();
        let policy = SamplePolicy::with_samples(128);
        let seq = rm_sequence(&model, 6.0, 20.0, 3, &policy).unwrap();
        assert!(!seq.truncated);
        assert_eq!(seq.ln_values.len(), 3);
        for w in seq.ln_values.windows(2) {
            assert!(w[1] > w[0] + 6f64.ln(), "r_{{m+1}} > c3 r_m violated: {w:?}");
        }
    }

    struct Squish;

    impl ModulusMap for Squish {
        fn dim(&self) -> Dim {
            Dim::Two
        }
        fn apply(&self, p: Point) -> Result<Point> {
            let c = p.coords();
            let x = if c[0] < 0.0 { c[0] / 10.0 } else { c[0] };
            Ok(Point::planar(x, c[1]))
        }
    }

    #[test]
    fn distortion_of_the_half_plane_squish_is_ten() {
        let r = centered_distortion(&Squish, Point::planar(0.0, 0.0), 1.0, 1).unwrap();
        assert!((r - 10.0).abs() < 0.05, "ratio {r}");
    }

    #[test]
    fn distortion_of_conformal_maps() {
        let double = MapSpec::similarity(2.0, Mat3::identity(), [0.0, 0.0, 0.0]).unwrap();
        let r = centered_distortion(&double, Point::spatial(1.0, 2.0, 0.0), 0.3, 3).unwrap();
        assert!((r - 1.0).abs() < 1e-12);

        let quad = MapSpec::quadratic(Complex64::new(-6.0, 0.0));
        let r = centered_distortion(&quad, Point::planar(3.0, 0.0), 1e-4, 1).unwrap();
        assert!(r < 1.01, "ratio {r}");
    }

    #[test]
    fn distortion_rejects_antipodal_collapse() {
        let pure_square = MapSpec::quadratic(Complex64::new(0.0, 0.0));
        let err = centered_distortion(&pure_square, Point::planar(0.0, 0.0), 1.0, 1);
        assert!(err.is_err());
    }

    #[test]
    fn growth_constants_validation() {
        assert!(GrowthConstants::new(0.5, 2.0, 4.0, 2, 1.0, 2).is_ok());
        assert!(GrowthConstants::new(2.0, 0.5, 4.0, 2, 1.0, 2).is_err());
        assert!(GrowthConstants::new(0.5, 2.0, 4.0, 2, 2.0, 2).is_err());
        assert!(GrowthConstants::new(0.5, 2.0, 4.0, 2, 1.0, 4).is_err());
    }
}
