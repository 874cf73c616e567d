//! Catalog of the concrete dynamical maps the toolkit works with, plus
//! numerical dilatation estimation.
//!
//! Four families: complex polynomials in the plane, the twisted-doubling
//! quasiconformal example, expanding conformal similarities of 3-space
//! fixing the origin (loxodromic type), and general similarities
//! x -> s A x + t used as iterated-function-system pieces.

pub mod dilatation;
pub mod roots;
pub mod twisted_doubling;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geom::logspace::{LogComplex, LN_PLAIN_EVAL};
use crate::geom::point::{Dim, Point};
use crate::geom::vec3::{self, Mat3, V3};
use crate::geom::ModulusMap;

pub use dilatation::{estimate_dilatation, DilatationEstimate};

/// Anchor exponent for homogeneous rescaling of the twisted-doubling map:
/// far beyond any region boundary, comfortably inside f64 range.
const TWISTED_ANCHOR_LN: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub enum MapSpec {
    /// a_0 + a_1 z + ... + a_d z^d in the plane, a_d != 0, d >= 1.
    Polynomial { coeffs: Vec<Complex64> },
    /// The quasiconformal conjugate of z -> 2z from `twisted_doubling`.
    TwistedDoubling,
    /// x -> s A x in R^3 with s > 1: expanding conformal, fixes 0 only.
    Loxodromic { scale: f64, rotation: Mat3 },
    /// x -> s A x + t in R^3 with s > 0.
    Similarity { scale: f64, rotation: Mat3, translation: V3 },
}

fn check_orthonormal(m: &Mat3) -> Result<()> {
    let p = m.transpose().mul(m);
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 1.0 } else { 0.0 };
            if (p.0[i][j] - want).abs() > 1e-12 {
                return Err(Error::invalid("rotation matrix is not orthonormal"));
            }
        }
    }
    Ok(())
}

impl MapSpec {
    pub fn polynomial(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::invalid("polynomial needs degree >= 1"));
        }
        let lead = coeffs[coeffs.len() - 1];
        if lead == Complex64::new(0.0, 0.0) {
            return Err(Error::invalid("polynomial leading coefficient must be nonzero"));
        }
        if coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("polynomial coefficients must be finite"));
        }
        Ok(MapSpec::Polynomial { coeffs })
    }

    /// z^2 + c.
    pub fn quadratic(c: Complex64) -> Self {
        MapSpec::Polynomial {
            coeffs: vec![c, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        }
    }

    /// z -> c z in the plane.
    pub fn planar_linear(c: Complex64) -> Result<Self> {
        Self::polynomial(vec![Complex64::new(0.0, 0.0), c])
    }

    pub fn twisted_doubling() -> Self {
        MapSpec::TwistedDoubling
    }

    pub fn loxodromic(scale: f64, rotation: Mat3) -> Result<Self> {
        if !(scale > 1.0) || !scale.is_finite() {
            return Err(Error::invalid(format!(
                "loxodromic scale must exceed 1, got {scale}"
            )));
        }
        check_orthonormal(&rotation)?;
        Ok(MapSpec::Loxodromic { scale, rotation })
    }

    pub fn similarity(scale: f64, rotation: Mat3, translation: V3) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::invalid(format!(
                "similarity scale must be positive, got {scale}"
            )));
        }
        check_orthonormal(&rotation)?;
        if translation.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("similarity translation must be finite"));
        }
        Ok(MapSpec::Similarity { scale, rotation, translation })
    }

    /// x -> s x in R^3.
    pub fn scaling3(scale: f64) -> Result<Self> {
        Self::similarity(scale, Mat3::identity(), [0.0, 0.0, 0.0])
    }

    pub fn dim(&self) -> Dim {
        match self {
            MapSpec::Polynomial { .. } | MapSpec::TwistedDoubling => Dim::Two,
            MapSpec::Loxodromic { .. } | MapSpec::Similarity { .. } => Dim::Three,
        }
    }

    /// Topological degree; algebraic degree for polynomials, 1 for the
    /// injective families.
    pub fn degree(&self) -> u32 {
        match self {
            MapSpec::Polynomial { coeffs } => (coeffs.len() - 1) as u32,
            _ => 1,
        }
    }

    /// Coefficients (ascending powers) when the map is a polynomial.
    pub fn polynomial_coeffs(&self) -> Option<&[Complex64]> {
        match self {
            MapSpec::Polynomial { coeffs } => Some(coeffs),
            _ => None,
        }
    }

    /// Critical points of a polynomial (roots of the derivative); empty for
    /// degree 1, None for families without a complex derivative.
    pub fn critical_points(&self) -> Option<Result<Vec<Complex64>>> {
        let coeffs = self.polynomial_coeffs()?;
        if coeffs.len() == 2 {
            return Some(Ok(Vec::new()));
        }
        Some(roots::polynomial_roots(&roots::derivative_coeffs(coeffs), 1e-12))
    }

    /// Distortion bound known a priori: 1 for conformal families, unknown
    /// (measured at runtime) for the twisted-doubling example.
    pub fn declared_k(&self) -> Option<f64> {
        match self {
            MapSpec::Polynomial { .. } => Some(1.0),
            MapSpec::TwistedDoubling => None,
            MapSpec::Loxodromic { .. } | MapSpec::Similarity { .. } => Some(1.0),
        }
    }

    pub fn is_injective(&self) -> bool {
        match self {
            MapSpec::Polynomial { coeffs } => coeffs.len() == 2,
            _ => true,
        }
    }

    /// Evaluate at a planar point. Overflow is not an error: the result may
    /// carry infinities, which escape tests treat as escaped and modulus
    /// reductions reject.
    pub fn evaluate_c(&self, z: Complex64) -> Result<Complex64> {
        match self {
            MapSpec::Polynomial { coeffs } => Ok(horner(coeffs, z)),
            MapSpec::TwistedDoubling => Ok(twisted_doubling::twisted_doubling(z)),
            _ => Err(Error::DimensionMismatch { map_dim: 3, point_dim: 2 }),
        }
    }

    pub fn evaluate(&self, x: Point) -> Result<Point> {
        match self {
            MapSpec::Polynomial { .. } | MapSpec::TwistedDoubling => {
                let z = x.to_complex()?;
                Ok(Point::from_complex(self.evaluate_c(z)?))
            }
            MapSpec::Loxodromic { scale, rotation } => {
                if x.dim() != Dim::Three {
                    return Err(Error::DimensionMismatch { map_dim: 3, point_dim: 2 });
                }
                let v = rotation.apply(x.raw());
                Ok(Point::spatial(scale * v[0], scale * v[1], scale * v[2]))
            }
            MapSpec::Similarity { scale, rotation, translation } => {
                if x.dim() != Dim::Three {
                    return Err(Error::DimensionMismatch { map_dim: 3, point_dim: 2 });
                }
                let v = rotation.apply(x.raw());
                Ok(Point::spatial(
                    scale * v[0] + translation[0],
                    scale * v[1] + translation[1],
                    scale * v[2] + translation[2],
                ))
            }
        }
    }

    /// Log-polar evaluation for the planar families; exact at magnitudes no
    /// f64 can hold.
    pub fn apply_ln(&self, z: LogComplex) -> Result<LogComplex> {
        match self {
            MapSpec::Polynomial { coeffs } => poly_apply_ln(coeffs, z),
            MapSpec::TwistedDoubling => {
                if z.ln_abs <= 2.0 * TWISTED_ANCHOR_LN {
                    let w = twisted_doubling::twisted_doubling(z.to_complex());
                    LogComplex::from_complex(w).ok_or(Error::EvaluationFailure([
                        z.ln_abs, z.arg, f64::NAN,
                    ]))
                } else {
                    // Positively homogeneous beyond |z| = 2: rescale to an
                    // anchor radius, evaluate, scale back in log space.
                    let anchor = LogComplex::new(TWISTED_ANCHOR_LN, z.arg);
                    let w = twisted_doubling::twisted_doubling(anchor.to_complex());
                    let lw = LogComplex::from_complex(w).ok_or(Error::EvaluationFailure([
                        z.ln_abs, z.arg, f64::NAN,
                    ]))?;
                    Ok(lw.scale_ln(z.ln_abs - TWISTED_ANCHOR_LN))
                }
            }
            _ => Err(Error::DimensionMismatch { map_dim: 3, point_dim: 2 }),
        }
    }

    /// Derivative as a complex number, where one exists (holomorphic
    /// families only).
    pub fn complex_derivative(&self, z: Complex64) -> Option<Complex64> {
        match self {
            MapSpec::Polynomial { coeffs } => {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in (1..coeffs.len()).rev() {
                    acc = acc * z + coeffs[k] * k as f64;
                }
                Some(acc)
            }
            _ => None,
        }
    }

    /// Round-trippable textual form used by the config file format.
    pub fn config_string(&self) -> String {
        match self {
            MapSpec::Polynomial { coeffs } => {
                let parts: Vec<String> = coeffs.iter().map(format_complex).collect();
                format!("poly:{}", parts.join(","))
            }
            MapSpec::TwistedDoubling => "twisted-doubling".to_string(),
            MapSpec::Loxodromic { scale, rotation } => {
                let (axis, angle) = rotation
                    .axis_angle()
                    .expect("loxodromic rotations are proper by construction");
                format!("lox:{scale},{},{},{},{angle}", axis[0], axis[1], axis[2])
            }
            MapSpec::Similarity { scale, rotation, translation } => {
                let (axis, angle) = rotation
                    .axis_angle()
                    .expect("similarity rotations are proper by construction");
                format!(
                    "similarity:{scale},{},{},{},{angle},{},{},{}",
                    axis[0], axis[1], axis[2], translation[0], translation[1], translation[2]
                )
            }
        }
    }

    /// Parse the config syntax produced by `config_string`, plus the sugar
    /// forms `quadratic:<c>` (z^2+c), `linear:<c>` (z -> cz) and
    /// `scale3:<s>`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "twisted-doubling" {
            return Ok(MapSpec::TwistedDoubling);
        }
        let (head, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("unrecognized map spec '{s}'")))?;
        match head {
            "poly" => {
                let coeffs = rest
                    .split(',')
                    .map(parse_complex)
                    .collect::<Result<Vec<_>>>()?;
                Self::polynomial(coeffs)
            }
            "quadratic" => Ok(Self::quadratic(parse_complex(rest)?)),
            "linear" => Self::planar_linear(parse_complex(rest)?),
            "scale3" => Self::scaling3(parse_real(rest)?),
            "lox" => {
                let v = parse_reals(rest)?;
                match v.as_slice() {
                    [s] => Self::loxodromic(*s, Mat3::identity()),
                    [s, ax, ay, az, angle] => {
                        Self::loxodromic(*s, Mat3::rotation([*ax, *ay, *az], *angle))
                    }
                    _ => Err(Error::Config(format!(
                        "lox wants 1 or 5 numbers, got {}",
                        v.len()
                    ))),
                }
            }
            "similarity" => {
                let v = parse_reals(rest)?;
                match v.as_slice() {
                    [s, ax, ay, az, angle, tx, ty, tz] => Self::similarity(
                        *s,
                        Mat3::rotation([*ax, *ay, *az], *angle),
                        [*tx, *ty, *tz],
                    ),
                    [s, tx, ty, tz] => Self::similarity(*s, Mat3::identity(), [*tx, *ty, *tz]),
                    _ => Err(Error::Config(format!(
                        "similarity wants 4 or 8 numbers, got {}",
                        v.len()
                    ))),
                }
            }
            _ => Err(Error::Config(format!("unrecognized map family '{head}'"))),
        }
    }
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for a in coeffs.iter().rev() {
        acc = acc * z + *a;
    }
    acc
}

/// ln(1+c) for complex c as (d ln|.|, d arg), accurate for tiny c.
fn ln1p_complex(c: Complex64) -> (f64, f64) {
    if c.norm() < 1e-8 {
        let corr = c - c * c * 0.5;
        (corr.re, corr.im)
    } else {
        let w = Complex64::new(1.0, 0.0) + c;
        (w.norm().ln(), w.arg())
    }
}

fn poly_apply_ln(coeffs: &[Complex64], z: LogComplex) -> Result<LogComplex> {
    let d = coeffs.len() - 1;
    let sum_abs: f64 = coeffs.iter().map(|a| a.norm()).sum();
    if (d as f64) * z.ln_abs.max(0.0) + sum_abs.ln() < 690.0 {
        let w = horner(coeffs, z.to_complex());
        return LogComplex::from_complex(w).ok_or(Error::EvaluationFailure([
            z.ln_abs,
            z.arg,
            f64::NAN,
        ]));
    }
    // Asymptotic form f(z) = a_d z^d (1 + c) with c the tail correction;
    // each tail term carries e^{(k-d) ln|z|} which only underflows.
    let lead = coeffs[d];
    let mut c = Complex64::new(0.0, 0.0);
    for (k, a) in coeffs.iter().enumerate().take(d) {
        if a.re == 0.0 && a.im == 0.0 {
            continue;
        }
        let pw = LogComplex::new((k as f64 - d as f64) * z.ln_abs, (k as f64 - d as f64) * z.arg);
        c += (a / lead) * pw.to_complex();
    }
    if !(c.norm() < 0.5) {
        return Err(Error::invalid(
            "radius too small for asymptotic polynomial evaluation",
        ));
    }
    let (dln, darg) = ln1p_complex(c);
    Ok(LogComplex::new(
        lead.norm().ln() + d as f64 * z.ln_abs + dln,
        lead.arg() + d as f64 * z.arg + darg,
    ))
}

fn format_complex(a: &Complex64) -> String {
    if a.im == 0.0 {
        format!("{}", a.re)
    } else if a.im >= 0.0 {
        format!("{}+{}i", a.re, a.im)
    } else {
        format!("{}{}i", a.re, a.im)
    }
}

fn parse_real(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("expected a number, got '{s}'")))
}

fn parse_reals(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_real).collect()
}

fn parse_complex(s: &str) -> Result<Complex64> {
    let t = s.trim();
    if let Some(body) = t.strip_suffix('i') {
        // re+imi or re-imi: split at the sign of the imaginary part,
        // skipping a leading sign and exponent signs.
        let bytes = body.as_bytes();
        let mut split = None;
        for idx in (1..bytes.len()).rev() {
            let b = bytes[idx];
            if (b == b'+' || b == b'-') && !matches!(bytes[idx - 1], b'e' | b'E') {
                split = Some(idx);
                break;
            }
        }
        let idx = split.ok_or_else(|| Error::Config(format!("bad complex literal '{s}'")))?;
        let re = parse_real(&body[..idx])?;
        let im_str = &body[idx..];
        let im = if im_str == "+" {
            1.0
        } else if im_str == "-" {
            -1.0
        } else {
            parse_real(im_str)?
        };
        Ok(Complex64::new(re, im))
    } else {
        Ok(Complex64::new(parse_real(t)?, 0.0))
    }
}

impl ModulusMap for MapSpec {
    fn dim(&self) -> Dim {
        MapSpec::dim(self)
    }

    fn apply(&self, p: Point) -> Result<Point> {
        self.evaluate(p)
    }

    fn apply_log_radial(&self, ln_r: f64, dir: Point) -> Result<(f64, Point)> {
        match self {
            MapSpec::Polynomial { .. } | MapSpec::TwistedDoubling => {
                let c = dir.coords();
                let theta = c[1].atan2(c[0]);
                let out = self.apply_ln(LogComplex::new(ln_r, theta))?;
                let (s, co) = out.arg.sin_cos();
                Ok((out.ln_abs, Point::planar(co, s)))
            }
            MapSpec::Loxodromic { scale, rotation } => {
                let v = rotation.apply(dir.raw());
                Ok((ln_r + scale.ln(), Point::spatial(v[0], v[1], v[2])))
            }
            MapSpec::Similarity { scale, rotation, translation } => {
                if ln_r < LN_PLAIN_EVAL {
                    let q = self.evaluate(dir.scale(ln_r.exp()))?;
                    let n = q.norm();
                    if n == 0.0 || !n.is_finite() {
                        return Err(Error::EvaluationFailure(q.raw()));
                    }
                    return Ok((n.ln(), q.scale(1.0 / n)));
                }
                // Far out the translation is a relative perturbation of
                // order e^{-ln_r}; fold it in before taking logs.
                let u = rotation.apply(dir.raw());
                let eps = (-ln_r).exp() / scale;
                let v = vec3::add(u, vec3::scale(*translation, eps));
                let n = vec3::norm(v);
                Ok((
                    scale.ln() + ln_r + n.ln(),
                    Point::spatial(v[0] / n, v[1] / n, v[2] / n),
                ))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{max_modulus, min_modulus};

    #[test]
    fn quadratic_values() {
        let f = MapSpec::quadratic(Complex64::new(-6.0, 0.0));
        let v = f.evaluate_c(Complex64::new(10.0, 0.0)).unwrap();
        assert_eq!(v, Complex64::new(94.0, 0.0));
        assert_eq!(f.degree(), 2);
    }

    #[test]
    fn polynomial_rejects_zero_lead() {
        let r = MapSpec::polynomial(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        assert!(r.is_err());
    }

    #[test]
    fn quadratic_moduli_match_closed_form() {
        let f = MapSpec::quadratic(Complex64::new(-6.0, 0.0));
        // On |z| = r the extreme values of |z^2 - 6| are r^2 + 6 (at +-ir)
        // and |r^2 - 6| (at +-r) for r^2 > 6... for r = 2, min is 2 at +-2.
        let hi = max_modulus(&f, 2.0, 4096).unwrap();
        assert!((hi - 10.0).abs() < 1e-6, "hi = {hi}");
        let lo = min_modulus(&f, 2.0, 4096).unwrap();
        assert!((lo - 2.0).abs() < 1e-4, "lo = {lo}");
        let hi10 = max_modulus(&f, 10.0, 4096).unwrap();
        assert!((hi10 - 106.0).abs() < 1e-5, "hi10 = {hi10}");
    }

    #[test]
    fn log_path_agrees_with_plain_at_moderate_radius() {
        let f = MapSpec::quadratic(Complex64::new(-6.0, 0.0));
        for k in 0..64 {
            let theta = 0.098 * k as f64;
            let z = Complex64::from_polar(40.0_f64.exp(), theta);
            let plain = horner(
                match &f {
                    MapSpec::Polynomial { coeffs } => coeffs,
                    _ => unreachable!(),
                },
                z,
            );
            let vialn = f.apply_ln(LogComplex::new(40.0, theta)).unwrap();
            let want = LogComplex::from_complex(plain).unwrap();
            assert!(vialn_close(vialn, want), "{vialn:?} vs {want:?}");
        }
        // Force the asymptotic branch and check the exact doubling law.
        let out = f.apply_ln(LogComplex::new(5000.0, 0.3)).unwrap();
        assert!((out.ln_abs - 10000.0).abs() < 1e-9);
        assert!((out.arg - crate::geom::wrap_angle(0.6)).abs() < 1e-12);
    }

    fn vialn_close(a: LogComplex, b: LogComplex) -> bool {
        (a.ln_abs - b.ln_abs).abs() < 1e-10 && (a.arg - b.arg).abs() < 1e-10
    }

    #[test]
    fn twisted_doubling_log_path_homogeneous() {
        let f = MapSpec::twisted_doubling();
        let out = f.apply_ln(LogComplex::new(500.0, 2.5)).unwrap();
        let base = f.apply_ln(LogComplex::new(100.0, 2.5)).unwrap();
        assert!((out.ln_abs - (base.ln_abs + 400.0)).abs() < 1e-9);
        assert!((out.arg - base.arg).abs() < 1e-12);
    }

    #[test]
    fn loxodromic_is_exact_in_log_space() {
        let rot = Mat3::rotation([0.0, 0.0, 1.0], 0.7);
        let f = MapSpec::loxodromic(2.0, rot).unwrap();
        let (ln_out, dir) = f
            .apply_log_radial(1.0e6, Point::spatial(1.0, 0.0, 0.0))
            .unwrap();
        assert!((ln_out - (1.0e6 + 2.0_f64.ln())).abs() < 1e-6);
        assert!((dir.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn similarity_translation_matters_only_near_origin() {
        let f = MapSpec::similarity(2.0, Mat3::identity(), [5.0, 0.0, 0.0]).unwrap();
        let v = f.evaluate(Point::spatial(1.0, 1.0, 0.0)).unwrap();
        assert_eq!(v, Point::spatial(7.0, 2.0, 0.0));
        let (ln_out, _) = f
            .apply_log_radial(400.0, Point::spatial(0.0, 1.0, 0.0))
            .unwrap();
        assert!((ln_out - (400.0 + 2.0_f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn config_round_trip() {
        let specs = vec![
            MapSpec::quadratic(Complex64::new(-6.0, 0.0)),
            MapSpec::twisted_doubling(),
            MapSpec::polynomial(vec![
                Complex64::new(1.0, -2.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.5, 1.0),
            ])
            .unwrap(),
            MapSpec::loxodromic(3.0, Mat3::rotation([0.0, 1.0, 0.0], 0.4)).unwrap(),
            MapSpec::scaling3(0.25).unwrap(),
        ];
        for m in specs {
            let s = m.config_string();
            let back = MapSpec::parse(&s).unwrap();
            match (&m, &back) {
                (MapSpec::Polynomial { coeffs: a }, MapSpec::Polynomial { coeffs: b }) => {
                    assert_eq!(a, b)
                }
                (MapSpec::TwistedDoubling, MapSpec::TwistedDoubling) => {}
                (
                    MapSpec::Loxodromic { scale: s1, rotation: r1 },
                    MapSpec::Loxodromic { scale: s2, rotation: r2 },
                ) => {
                    assert_eq!(s1, s2);
                    for i in 0..3 {
                        for j in 0..3 {
                            assert!((r1.0[i][j] - r2.0[i][j]).abs() < 1e-12);
                        }
                    }
                }
                (
                    MapSpec::Similarity { scale: s1, translation: t1, .. },
                    MapSpec::Similarity { scale: s2, translation: t2, .. },
                ) => {
                    assert_eq!(s1, s2);
                    assert_eq!(t1, t2);
                }
                other => panic!("family changed in round trip: {other:?}"),
            }
        }
        assert!(MapSpec::parse("quadratic:-6").is_ok());
        assert!(MapSpec::parse("linear:2").is_ok());
        assert!(MapSpec::parse("mystery:1").is_err());
    }

    #[test]
    fn parse_complex_forms() {
        assert_eq!(parse_complex("3").unwrap(), Complex64::new(3.0, 0.0));
        assert_eq!(parse_complex("-1.5+2i").unwrap(), Complex64::new(-1.5, 2.0));
        assert_eq!(parse_complex("1e-3-2e2i").unwrap(), Complex64::new(1e-3, -200.0));
        assert!(parse_complex("i").is_err());
    }
}
