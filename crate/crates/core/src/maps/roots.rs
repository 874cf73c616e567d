//! Simultaneous polynomial root finding (Aberth-Ehrlich).
//!
//! The driver is generic over the evaluation backend: explicit coefficients
//! use Horner, while callers solving f^p(z) = z pass a closure that
//! evaluates the composition and its derivative by the chain rule, which
//! stays accurate where expanded coefficients would be catastrophically
//! ill-conditioned.
//!
//! Multiple roots converge only linearly here; the families this crate
//! solves (derivatives of quadratics, iterate fixed-point equations away
//! from bifurcation parameters) have simple roots.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::sample::GOLDEN_FRAC;

// Compositions of quadratics make far-field corrections as small as
// |z| / degree, so high-degree systems need room to walk in from the
// seed circle.
const MAX_ITER: usize = 1500;

enum Step {
    Keep,
    Move { to: Complex64, settled: bool },
    Reseed,
}

/// All roots of a degree-`degree` equation P(z) = 0, found simultaneously.
/// `eval` returns (P(z), P'(z)). Deterministic: seeds lie on a circle of
/// radius `seed_radius` with a fixed asymmetric phase pattern.
pub fn aberth<F>(
    eval: &F,
    degree: usize,
    seed_radius: f64,
    tol: f64,
) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> (Complex64, Complex64) + Sync,
{
    aberth_from(eval, degree, seed_radius, tol, 0)
}

/// Same driver with the seed pattern rotated by `salt`, for retries after a
/// stalled run. Updates happen in synchronized rounds: every correction is
/// computed from the same snapshot, in parallel, then applied at once, so
/// results do not depend on worker scheduling.
pub fn aberth_from<F>(
    eval: &F,
    degree: usize,
    seed_radius: f64,
    tol: f64,
    salt: u64,
) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> (Complex64, Complex64) + Sync,
{
    if degree == 0 {
        return Err(Error::invalid("root search needs degree at least 1"));
    }
    let mut z: Vec<Complex64> =
        (0..degree).map(|k| seed(k, degree, seed_radius, salt)).collect();
    let mut stale = vec![0usize; degree];

    for _ in 0..MAX_ITER {
        let steps: Vec<Step> = z
            .par_iter()
            .enumerate()
            .map(|(i, &zi)| {
                let (p, dp) = eval(zi);
                if !p.is_finite() || !dp.is_finite() {
                    // Escaped the useful region; pull back towards the seed circle.
                    return Step::Reseed;
                }
                if p.norm() == 0.0 {
                    return Step::Keep;
                }
                let w = if dp.norm() == 0.0 {
                    // Stationary point of P; step off it.
                    Complex64::new(tol.max(1e-12), tol.max(1e-12))
                } else {
                    p / dp
                };
                let mut s = Complex64::new(0.0, 0.0);
                for (j, &zj) in z.iter().enumerate() {
                    if j != i {
                        let d = zi - zj;
                        if d.norm() > 0.0 {
                            s += 1.0 / d;
                        }
                    }
                }
                let denom = Complex64::new(1.0, 0.0) - w * s;
                let dz = if denom.norm() < 1e-14 { w } else { w / denom };
                let to = zi - dz;
                if !to.is_finite() {
                    Step::Reseed
                } else {
                    Step::Move { to, settled: dz.norm() <= tol * (1.0 + to.norm()) }
                }
            })
            .collect();
        let mut moved = 0usize;
        for (i, step) in steps.into_iter().enumerate() {
            match step {
                Step::Keep => {}
                Step::Move { to, settled } => {
                    z[i] = to;
                    if !settled {
                        moved += 1;
                    }
                }
                Step::Reseed => {
                    stale[i] += 1;
                    z[i] = seed(i + stale[i] * degree, degree, seed_radius, salt);
                    moved += 1;
                }
            }
        }
        if moved == 0 {
            return Ok(z);
        }
    }
    let failed = z
        .iter()
        .filter(|zi| {
            let (p, dp) = eval(**zi);
            let scale = dp.norm().max(1.0);
            !(p.norm() <= 1e3 * tol * scale * (1.0 + zi.norm()))
        })
        .count();
    if failed == 0 {
        // Cluster chatter: every point sits on a root but the last digits
        // keep toggling. Accept.
        return Ok(z);
    }
    Err(Error::RootRefinement { failed, total: degree })
}

fn seed(k: usize, degree: usize, radius: f64, salt: u64) -> Complex64 {
    // Off-axis phases and slightly uneven radii break the symmetries that
    // stall simultaneous iterations on real-coefficient polynomials.
    let tau = std::f64::consts::TAU;
    let phase = tau * (k as f64 + 0.25) / degree as f64 + 0.3 + 0.61 * salt as f64;
    let wobble = 1.0 + 0.12 * ((k as f64 * GOLDEN_FRAC + 0.37 * salt as f64).fract() - 0.5);
    Complex64::from_polar(radius * wobble, phase)
}

/// Roots of the polynomial with coefficients `coeffs` (ascending powers,
/// nonzero leading coefficient).
pub fn polynomial_roots(coeffs: &[Complex64], tol: f64) -> Result<Vec<Complex64>> {
    if coeffs.len() < 2 {
        return Err(Error::invalid("constant polynomials have no roots to find"));
    }
    let lead = coeffs[coeffs.len() - 1];
    if lead.norm() == 0.0 {
        return Err(Error::invalid("leading coefficient must be nonzero"));
    }
    if coeffs.len() == 2 {
        return Ok(vec![-coeffs[0] / coeffs[1]]);
    }
    // Cauchy bound: all roots lie within 1 + max |a_k / a_d|.
    let bound = 1.0
        + coeffs[..coeffs.len() - 1]
            .iter()
            .map(|a| a.norm() / lead.norm())
            .fold(0.0f64, f64::max);
    let eval = |z: Complex64| horner_with_derivative(coeffs, z);
    aberth(&eval, coeffs.len() - 1, bound, tol)
}

/// Coefficients of the derivative polynomial (ascending powers).
pub fn derivative_coeffs(coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, a)| a * k as f64)
        .collect()
}

/// (P(z), P'(z)) in one Horner pass.
pub fn horner_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for a in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}
