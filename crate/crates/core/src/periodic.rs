//! Periodic cycles of planar quadratics z^2 + c: enumeration through
//! simultaneous root refinement of the iterate fixed-point equation,
//! multiplier classification, and density of the cycles inside an
//! inverse-iteration sample of the Julia set.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::logspace::LogComplex;
use crate::geom::point::Point;
use crate::maps::roots::aberth_from;

/// |f^q(z) - z| below this is accepted as period q when assigning
/// primitive periods.
const CYCLE_TOL: f64 = 1e-8;

/// Width of the bands around |multiplier| = 0 and = 1.
const NEUTRAL_BAND: f64 = 1e-12;

const MAX_PERIOD: u32 = 12;

/// Periods up to here solve the composed fixed-point equation for all
/// 2^p roots at once; beyond, Newton from backward-orbit seeds.
const SIMULTANEOUS_LIMIT: u32 = 10;

const ROOT_TOL: f64 = 1e-12;

/// Two candidate roots closer than this (relative) are the same root.
const DEDUP_TOL: f64 = 1e-10;

/// Burn-in steps before inverse-iteration points are kept.
const BURN_IN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Repelling,
    Attracting,
    Neutral,
    Superattracting,
}

impl Classification {
    /// Bands: |m| within 1e-12 of 0 is superattracting, within 1e-12 of 1
    /// is neutral; otherwise the unit circle separates attracting from
    /// repelling.
    pub fn from_modulus(m: f64) -> Self {
        if m <= NEUTRAL_BAND {
            Classification::Superattracting
        } else if (m - 1.0).abs() <= NEUTRAL_BAND {
            Classification::Neutral
        } else if m < 1.0 {
            Classification::Attracting
        } else {
            Classification::Repelling
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Classification::Repelling => "repelling",
            Classification::Attracting => "attracting",
            Classification::Neutral => "neutral",
            Classification::Superattracting => "superattracting",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One cycle: its primitive period, the cycle points in orbit order, and
/// the multiplier (product of 2z over the cycle).
#[derive(Debug, Clone, Serialize)]
pub struct PeriodicPointRecord {
    pub period: u32,
    pub cycle: Vec<Point>,
    pub multiplier: Complex64,
    pub modulus: f64,
    pub classification: Classification,
}

pub fn classify(record: &PeriodicPointRecord) -> Classification {
    Classification::from_modulus(record.modulus)
}

/// Inverse-iteration sample of the Julia set.
#[derive(Debug, Clone, Serialize)]
pub struct JuliaSample {
    pub c: Complex64,
    pub points: Vec<Point>,
    pub method: &'static str,
    pub seed: u64,
}

/// Radius beyond which orbits of z^2 + c grow monotonically: the positive
/// root of r^2 - r = |c|.
pub fn escape_radius(c: Complex64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * c.norm()).sqrt())
}

/// (f^p(z) - z, (f^p)'(z) - 1) for f = z^2 + c, evaluated by composition.
/// Once the orbit leaves the plain f64 range the tail switches to log
/// bookkeeping and both components are rescaled by a common factor, which
/// leaves the Newton correction untouched.
fn composed_eval(c: Complex64, p: u32, z: Complex64) -> (Complex64, Complex64) {
    let mut w = z;
    let mut d = Complex64::new(1.0, 0.0);
    for step in 0..p {
        let nd = 2.0 * w * d;
        let nw = w * w + c;
        if !nd.is_finite() || !nw.is_finite() || nw.norm_sqr() > 1e200 || nd.norm_sqr() > 1e200
        {
            let (Some(mut lw), Some(mut ld)) =
                (LogComplex::from_complex(w), LogComplex::from_complex(d))
            else {
                // A zero factor together with overflow: the correction is
                // astronomically large either way; let the driver reseed.
                let inf = Complex64::new(f64::INFINITY, 0.0);
                return (inf, inf);
            };
            for _ in step..p {
                ld = ld.mul(lw.scale_ln(std::f64::consts::LN_2));
                // At |w| this large the +c term is far below one ulp.
                lw = lw.mul(lw);
            }
            let shift = lw.ln_abs.max(ld.ln_abs) - 200.0;
            let k = (-shift).exp();
            let pw = lw.scale_ln(-shift).to_complex() - z * k;
            let pd = ld.scale_ln(-shift).to_complex() - k;
            return (pw, pd);
        }
        d = nd;
        w = nw;
    }
    (w - z, d - 1.0)
}

fn accept_root(c: Complex64, p: u32, z: Complex64) -> Option<Complex64> {
    let (res, dres) = composed_eval(c, p, z);
    (res.norm() <= 1e-9 * dres.norm().max(1.0)).then_some(z)
}

/// Newton on the composed fixed-point equation; None when the run leaves
/// the basin or the endpoint fails the residual check.
fn newton_converge(c: Complex64, p: u32, seed: Complex64) -> Option<Complex64> {
    let mut z = seed;
    for _ in 0..80 {
        let (pv, dv) = composed_eval(c, p, z);
        if !pv.is_finite() || !dv.is_finite() || dv.norm() == 0.0 {
            return None;
        }
        let step = pv / dv;
        z -= step;
        if !z.is_finite() {
            return None;
        }
        if step.norm() <= 1e-14 * (1.0 + z.norm()) {
            let settled = accept_root(c, p, z);
            if settled.is_some() && dv.norm() < 1e-5 * (1.0 + z.norm()) {
                // A vanishing derivative at the root means a multiplicity
                // cluster; rounding can freeze the iterate anywhere in a
                // wide noise ball (the residual even evaluates to exact
                // zero off the true root). The derivative's own root is
                // cleanly conditioned there, so prefer it when it passes.
                return polish_on_derivative(c, p, z).or(settled);
            }
            return settled;
        }
    }
    // Never settled: near a multiple root the residual drowns in rounding
    // noise at distances where the derivative is still cleanly computable,
    // so refine on the derivative's root and let the residual arbitrate.
    polish_on_derivative(c, p, z)
}

/// Secant iteration on (f^p)'(z) - 1 = 0. At a double fixed point this
/// recovers the root to full precision where Newton on the function value
/// wanders in a noise ball; anywhere else the residual check rejects the
/// critical point it lands on.
fn polish_on_derivative(c: Complex64, p: u32, z0: Complex64) -> Option<Complex64> {
    let mut a = z0;
    let mut b = z0 + Complex64::new(1e-7, 1e-7);
    let mut fa = composed_eval(c, p, a).1;
    for _ in 0..60 {
        let fb = composed_eval(c, p, b).1;
        if !fa.is_finite() || !fb.is_finite() {
            return None;
        }
        let denom = fb - fa;
        if denom.norm() == 0.0 {
            break;
        }
        let next = b - fb * (b - a) / denom;
        if !next.is_finite() {
            return None;
        }
        let moved = (next - b).norm();
        a = b;
        fa = fb;
        b = next;
        if moved <= 1e-15 * (1.0 + b.norm()) {
            break;
        }
    }
    accept_root(c, p, b)
}

fn dedup_roots(mut roots: Vec<Complex64>) -> Vec<Complex64> {
    roots.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    let mut out: Vec<Complex64> = Vec::with_capacity(roots.len());
    for r in roots {
        let dup = out
            .iter()
            .rev()
            .take_while(|q| r.re - q.re <= DEDUP_TOL * (1.0 + r.re.abs()))
            .any(|q| (r - q).norm() <= DEDUP_TOL * (1.0 + r.norm()));
        if !dup {
            out.push(r);
        }
    }
    out
}

/// All 2^p roots at once from perturbed-circle guesses, polished point by
/// point afterwards so cycle bookkeeping sees full f64 accuracy.
fn simultaneous_roots(c: Complex64, p: u32) -> Result<Vec<Complex64>> {
    let degree = 1usize << p;
    // Just outside the escape circle: every root lies inside it, and the
    // doubly exponential growth beyond makes corrections from farther out
    // crawl at |z| / degree per round.
    let radius = escape_radius(c) + 0.2;
    let eval = |z: Complex64| composed_eval(c, p, z);
    let raw = match aberth_from(&eval, degree, radius, ROOT_TOL, 0) {
        Ok(r) => r,
        // One retry from a rotated seed pattern before giving up.
        Err(_) => aberth_from(&eval, degree, radius, ROOT_TOL, 1)?,
    };
    let polished: Vec<Complex64> = raw
        .par_iter()
        .map(|&r| newton_converge(c, p, r).unwrap_or(r))
        .collect();
    Ok(dedup_roots(polished))
}

/// Roots for the periods whose composed equation is too stiff for the
/// all-at-once approach: Newton runs seeded with backward-orbit points,
/// which concentrate on the Julia set where every cycle lives.
fn backward_seeded_roots(c: Complex64, p: u32) -> Result<Vec<Complex64>> {
    let degree = 1usize << p;
    let mut found: Vec<Complex64> = Vec::new();
    for batch in 0u64..4 {
        let sample = julia_sample(c, 16 * degree, 0xC1C1_E500 + 1000 * batch + p as u64);
        let mut fresh: Vec<Complex64> = sample
            .points
            .par_iter()
            .filter_map(|pt| {
                let z = pt.to_complex().ok()?;
                newton_converge(c, p, z)
            })
            .collect();
        found.append(&mut fresh);
        found = dedup_roots(found);
        if found.len() >= degree {
            break;
        }
    }
    if found.len() < degree {
        return Err(Error::RootRefinement { failed: degree - found.len(), total: degree });
    }
    Ok(found)
}

fn divisors(p: u32) -> Vec<u32> {
    (1..=p).filter(|q| p % q == 0).collect()
}

fn primitive_period(c: Complex64, z: Complex64, p: u32) -> u32 {
    let mut w = z;
    let mut at = 0u32;
    for q in divisors(p) {
        while at < q {
            w = w * w + c;
            at += 1;
        }
        if (w - z).norm() < CYCLE_TOL {
            return q;
        }
    }
    p
}

fn nearest_root(roots: &[Complex64], w: Complex64) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (j, r) in roots.iter().enumerate() {
        let d = (w - r).norm();
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Every fixed point of the p-th iterate of z^2 + c, grouped into cycles
/// with primitive periods and multipliers. 1 <= p <= 12.
pub fn periodic_points(c: Complex64, p: u32) -> Result<Vec<PeriodicPointRecord>> {
    if p == 0 || p > MAX_PERIOD {
        return Err(Error::invalid(format!(
            "period must be between 1 and {MAX_PERIOD}, got {p}"
        )));
    }
    let roots = if p <= SIMULTANEOUS_LIMIT {
        simultaneous_roots(c, p)?
    } else {
        backward_seeded_roots(c, p)?
    };
    let mut used = vec![false; roots.len()];
    let mut records = Vec::new();
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let z0 = roots[i];
        let q = primitive_period(c, z0, p);
        let mut cycle_idx = vec![i];
        used[i] = true;
        let mut w = z0;
        for _ in 1..q {
            w = w * w + c;
            let (j, dist) = nearest_root(&roots, w);
            if dist > 1e-5 * (1.0 + w.norm()) || used[j] {
                return Err(Error::invalid(format!(
                    "cycle walk from {z0} lost the root set at {w} (nearest {dist:.3e})"
                )));
            }
            used[j] = true;
            cycle_idx.push(j);
        }
        let multiplier = cycle_idx
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &j| acc * 2.0 * roots[j]);
        let modulus = multiplier.norm();
        records.push(PeriodicPointRecord {
            period: q,
            cycle: cycle_idx.iter().map(|&j| Point::from_complex(roots[j])).collect(),
            multiplier,
            modulus,
            classification: Classification::from_modulus(modulus),
        });
    }
    Ok(records)
}

/// Random backward orbit z -> +/- sqrt(z - c) started at the distinguished
/// fixed point, burn-in 50 steps, `count` points kept. Deterministic for a
/// given seed.
pub fn julia_sample(c: Complex64, count: usize, seed: u64) -> JuliaSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // The fixed point (1 + sqrt(1 - 4c))/2 repels, so it lies in the Julia
    // set and the backward orbit never leaves it.
    let mut z = 0.5 * (1.0 + (Complex64::new(1.0, 0.0) - 4.0 * c).sqrt());
    let mut points = Vec::with_capacity(count);
    for k in 0..BURN_IN + count {
        let root = (z - c).sqrt();
        z = if rng.gen::<bool>() { root } else { -root };
        if k >= BURN_IN {
            points.push(Point::from_complex(z));
        }
    }
    JuliaSample { c, points, method: "inverse-iteration", seed }
}

/// One-sided Hausdorff distance: how far the worst sample point sits from
/// the nearest known cycle point.
pub fn density_gap(records: &[PeriodicPointRecord], sample: &JuliaSample) -> Result<f64> {
    if records.is_empty() || sample.points.is_empty() {
        return Err(Error::EmptySet);
    }
    let cycle_points: Vec<Point> =
        records.iter().flat_map(|r| r.cycle.iter().copied()).collect();
    let gap = sample
        .points
        .par_iter()
        .map(|s| {
            cycle_points
                .iter()
                .map(|q| s.dist(*q))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max);
    Ok(gap)
}

/// CSV rows, one per cycle point: period, re, im, |multiplier|,
/// classification.
pub fn csv_rows(records: &[PeriodicPointRecord]) -> String {
    let mut out = String::from("period,re,im,multiplier_modulus,classification\n");
    for rec in records {
        for pt in &rec.cycle {
            let c = pt.coords();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                rec.period,
                c[0],
                c[1],
                rec.modulus,
                rec.classification
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn total_points(records: &[PeriodicPointRecord]) -> usize {
        records.iter().map(|r| r.cycle.len()).sum()
    }

    #[test]
    fn classification_bands() {
        use Classification::*;
        assert_eq!(Classification::from_modulus(6.0), Repelling);
        assert_eq!(Classification::from_modulus(0.0), Superattracting);
        assert_eq!(Classification::from_modulus(1e-13), Superattracting);
        assert_eq!(Classification::from_modulus(0.5), Attracting);
        assert_eq!(Classification::from_modulus(1.0), Neutral);
        assert_eq!(Classification::from_modulus(1.0 + 5e-13), Neutral);
        assert_eq!(Classification::from_modulus(1.0 + 1e-9), Repelling);
    }

    #[test]
    fn fixed_points_of_the_shifted_quadratic() {
        let recs = periodic_points(re(-6.0), 1).unwrap();
        assert_eq!(recs.len(), 2);
        let mut mults: Vec<f64> = recs.iter().map(|r| r.multiplier.re).collect();
        mults.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((mults[0] + 4.0).abs() < 1e-9);
        assert!((mults[1] - 6.0).abs() < 1e-9);
        for r in &recs {
            assert_eq!(r.period, 1);
            assert_eq!(r.classification, Classification::Repelling);
        }
    }

    #[test]
    fn primitive_two_cycle_multiplier() {
        let recs = periodic_points(re(-6.0), 2).unwrap();
        assert_eq!(total_points(&recs), 4);
        let two: Vec<&PeriodicPointRecord> =
            recs.iter().filter(|r| r.period == 2).collect();
        assert_eq!(two.len(), 1);
        let rec = two[0];
        assert_eq!(rec.cycle.len(), 2);
        // The cycle solves z^2 + z - 5 = 0, so the points multiply to -5
        // and the multiplier 4 z1 z2 is -20.
        assert!((rec.multiplier.re + 20.0).abs() < 1e-8, "multiplier {}", rec.multiplier);
        assert!(rec.multiplier.im.abs() < 1e-8);
        let sqrt21 = 21f64.sqrt();
        let mut res: Vec<f64> = rec.cycle.iter().map(|p| p.coords()[0]).collect();
        res.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((res[0] - (-1.0 - sqrt21) / 2.0).abs() < 1e-9);
        assert!((res[1] - (-1.0 + sqrt21) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn classical_parabola_fixed_points() {
        let recs = periodic_points(re(0.0), 1).unwrap();
        assert_eq!(recs.len(), 2);
        for r in &recs {
            let z = r.cycle[0].coords()[0];
            if z.abs() < 1e-9 {
                assert_eq!(r.classification, Classification::Superattracting);
            } else {
                assert!((z - 1.0).abs() < 1e-9);
                assert_eq!(r.classification, Classification::Repelling);
                assert!((r.modulus - 2.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn parabolic_fixed_point_is_neutral() {
        // z^2 + 1/4 has the double fixed point 1/2 with multiplier exactly 1.
        let recs = periodic_points(re(0.25), 1).unwrap();
        assert_eq!(recs.len(), 1);
        let rec = &recs[0];
        assert!((rec.cycle[0].coords()[0] - 0.5).abs() < 1e-10);
        assert_eq!(rec.classification, Classification::Neutral);
        assert_eq!(classify(rec), Classification::Neutral);
    }

    #[test]
    fn period_bounds_are_enforced() {
        assert!(periodic_points(re(-6.0), 0).is_err());
        assert!(periodic_points(re(-6.0), 13).is_err());
    }

    #[test]
    fn backward_sample_of_the_real_cantor_case() {
        let s = julia_sample(re(-6.0), 400, 7);
        assert_eq!(s.points.len(), 400);
        assert_eq!(s.method, "inverse-iteration");
        let r_esc = escape_radius(re(-6.0));
        assert!((r_esc - 3.0).abs() < 1e-12);
        for p in &s.points {
            let c = p.coords();
            assert!(c[1].abs() < 1e-9, "imaginary leak {}", c[1]);
            assert!(c[0].abs() <= 3.0 + 1e-9, "outside [-3,3]: {}", c[0]);
        }
        // Consecutive points satisfy the backward relation f(next) = prev.
        for w in s.points.windows(2) {
            let prev = w[0].to_complex().unwrap();
            let next = w[1].to_complex().unwrap();
            assert!((next * next - 6.0 - prev).norm() < 1e-6);
        }
    }

    #[test]
    fn backward_sample_of_the_unit_circle() {
        let s = julia_sample(re(0.0), 300, 3);
        for p in &s.points {
            let z = p.to_complex().unwrap();
            assert!((z.norm() - 1.0).abs() < 1e-9, "off the circle: {z}");
        }
    }

    #[test]
    fn backward_sample_corner_cases() {
        assert!(julia_sample(re(-6.0), 0, 1).points.is_empty());
        let a = julia_sample(re(-6.0), 50, 9);
        let b = julia_sample(re(-6.0), 50, 9);
        for (x, y) in a.points.iter().zip(&b.points) {
            assert_eq!(x.coords(), y.coords());
        }
        let c = julia_sample(re(-6.0), 50, 10);
        assert!(a.points.iter().zip(&c.points).any(|(x, y)| x.coords() != y.coords()));
    }

    #[test]
    fn gap_of_a_covering_record_set_is_zero() {
        let sample = julia_sample(re(-6.0), 64, 5);
        let records = vec![PeriodicPointRecord {
            period: 1,
            cycle: sample.points.clone(),
            multiplier: re(6.0),
            modulus: 6.0,
            classification: Classification::Repelling,
        }];
        assert_eq!(density_gap(&records, &sample).unwrap(), 0.0);
    }

    #[test]
    fn gap_of_a_single_distant_record() {
        let sample = JuliaSample {
            c: re(-6.0),
            points: vec![Point::planar(0.0, 0.0)],
            method: "inverse-iteration",
            seed: 0,
        };
        let records = vec![PeriodicPointRecord {
            period: 1,
            cycle: vec![Point::planar(10.0, 0.0)],
            multiplier: re(20.0),
            modulus: 20.0,
            classification: Classification::Repelling,
        }];
        assert!((density_gap(&records, &sample).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn gap_rejects_empty_inputs() {
        let sample = julia_sample(re(-6.0), 10, 1);
        assert!(matches!(density_gap(&[], &sample), Err(Error::EmptySet)));
        let empty = JuliaSample {
            c: re(-6.0),
            points: vec![],
            method: "inverse-iteration",
            seed: 0,
        };
        let records = periodic_points(re(-6.0), 1).unwrap();
        assert!(matches!(density_gap(&records, &empty), Err(Error::EmptySet)));
    }

    #[test]
    fn csv_has_one_row_per_cycle_point() {
        let recs = periodic_points(re(-6.0), 2).unwrap();
        let csv = csv_rows(&recs);
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines[0], "period,re,im,multiplier_modulus,classification");
        assert_eq!(lines.len(), 1 + total_points(&recs));
        for line in &lines[1..] {
            assert_eq!(line.split(',').count(), 5);
        }
        assert!(lines[1..].iter().all(|l| l.ends_with("repelling")));
    }
}
