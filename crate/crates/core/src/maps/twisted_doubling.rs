//! An expanding quasiconformal map conjugate to doubling.
//!
//! The building block is the piecewise-linear homeomorphism `squish` that
//! compresses the left half-plane tenfold along the real axis. Composing a
//! rotation ramp with `squish` gives a global homeomorphism `warp` of the
//! plane, and the map of interest is
//!
//!   f(z) = warp(2 * warp_inv(z)),
//!
//! a quasiconformal conjugate of z -> 2z. Every orbit escapes and the map
//! fixes 0, yet f(1) = -1/5: the minimum modulus on the unit circle drops
//! far below the radius, which is exactly the behavior this family exists
//! to exhibit (expansion only after several iterates, never pointwise).
//!
//! All pieces are positively homogeneous outside |z| = 2, so the map
//! commutes with positive scaling far from the origin; the log-radial
//! evaluation path in the catalog relies on that.

use num_complex::Complex64;

/// Tenfold compression of the left half-plane along the real axis.
pub fn squish(z: Complex64) -> Complex64 {
    if z.re >= 0.0 {
        z
    } else {
        Complex64::new(z.re / 10.0, z.im)
    }
}

/// Inverse of `squish`.
pub fn squish_inv(w: Complex64) -> Complex64 {
    if w.re >= 0.0 {
        w
    } else {
        Complex64::new(10.0 * w.re, w.im)
    }
}

/// `squish` composed with the antipodal map: flip_squish(z) = squish(-z).
///
/// Written out per half-plane rather than delegating, so the formula under
/// test is independent of `squish`; their agreement is asserted in tests.
pub fn flip_squish(z: Complex64) -> Complex64 {
    if z.re >= 0.0 {
        Complex64::new(-z.re / 10.0, -z.im)
    } else {
        Complex64::new(-z.re, -z.im)
    }
}

/// Rotation angle of the interpolation band at radius r: ramps from 0 at
/// r <= 1 to a half turn at r >= 2.
fn band_angle(r: f64) -> f64 {
    std::f64::consts::PI * (r - 1.0).clamp(0.0, 1.0)
}

/// Global homeomorphism: `squish` inside the unit circle, flip_squish
/// outside radius 2, joined by a radial half-turn ramp in between.
///
/// Since flip_squish(z) = squish(-z) and squish is positively homogeneous,
/// the single formula squish(z * e^{i pi clamp(|z|-1, 0, 1)}) covers all
/// three regions exactly.
pub fn warp(z: Complex64) -> Complex64 {
    if z.re == 0.0 && z.im == 0.0 {
        return z;
    }
    squish(z * Complex64::from_polar(1.0, band_angle(z.norm())))
}

/// Closed-form inverse of `warp`. The pre-rotation radius equals
/// |squish_inv(w)| because the band rotation preserves modulus.
pub fn warp_inv(w: Complex64) -> Complex64 {
    if w.re == 0.0 && w.im == 0.0 {
        return w;
    }
    let zeta = squish_inv(w);
    zeta * Complex64::from_polar(1.0, -band_angle(zeta.norm()))
}

/// The conjugated doubling map f(z) = warp(2 * warp_inv(z)).
pub fn twisted_doubling(z: Complex64) -> Complex64 {
    warp(2.0 * warp_inv(z))
}
