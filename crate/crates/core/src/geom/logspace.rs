//! Log-polar representation of nonzero complex values.
//!
//! Iterated maximum-modulus towers leave plain f64 range after a handful of
//! levels (squaring doubles the exponent), so every comparison downstream of
//! an orbit or a modulus tower is done on (ln|z|, arg z) pairs. Conversions
//! back to plain complex values are provided for the representable range.

use num_complex::Complex64;

/// Natural log of the largest finite f64, minus a little headroom.
pub const LN_F64_MAX: f64 = 709.0;

/// Values with ln|z| below this are routed through plain complex arithmetic.
pub const LN_PLAIN_EVAL: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LogComplex {
    pub ln_abs: f64,
    pub arg: f64,
}

impl LogComplex {
    pub fn new(ln_abs: f64, arg: f64) -> Self {
        LogComplex { ln_abs, arg: wrap_angle(arg) }
    }

    /// None for zero or non-finite input.
    pub fn from_complex(z: Complex64) -> Option<Self> {
        if !z.is_finite() || (z.re == 0.0 && z.im == 0.0) {
            return None;
        }
        Some(LogComplex { ln_abs: z.norm().ln(), arg: z.arg() })
    }

    /// Lossy for very large or very small magnitudes (inf / 0).
    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.ln_abs.exp(), self.arg)
    }

    pub fn is_plain_representable(self) -> bool {
        self.ln_abs < LN_F64_MAX
    }

    pub fn mul(self, other: LogComplex) -> LogComplex {
        LogComplex::new(self.ln_abs + other.ln_abs, self.arg + other.arg)
    }

    pub fn div(self, other: LogComplex) -> LogComplex {
        LogComplex::new(self.ln_abs - other.ln_abs, self.arg - other.arg)
    }

    pub fn scale_ln(self, delta_ln: f64) -> LogComplex {
        LogComplex { ln_abs: self.ln_abs + delta_ln, arg: self.arg }
    }

    pub fn powi(self, k: i32) -> LogComplex {
        LogComplex::new(self.ln_abs * k as f64, self.arg * k as f64)
    }

    /// |self / other| as a plain ratio; saturates to +inf on overflow.
    pub fn abs_ratio(self, other: LogComplex) -> f64 {
        (self.ln_abs - other.ln_abs).exp()
    }

    /// Relative difference |a - b| / |b|, stable for huge magnitudes.
    ///
    /// Writes a = b * e^w with w = (dln, dtheta); the relative difference is
    /// |e^w - 1|, computed without leaving log range when w is small.
    pub fn rel_diff(self, other: LogComplex) -> f64 {
        let dln = self.ln_abs - other.ln_abs;
        let dth = wrap_angle(self.arg - other.arg);
        if dln.abs() > 1.0 {
            // Far apart in magnitude; the exact value does not matter, only
            // that it is large. exp saturates to +inf harmlessly.
            return dln.abs().exp();
        }
        let w = Complex64::new(dln, dth);
        (w.exp() - Complex64::new(1.0, 0.0)).norm()
    }
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    if theta.abs() <= std::f64::consts::PI {
        return theta;
    }
    let tau = std::f64::consts::TAU;
    let mut t = theta % tau;
    if t > std::f64::consts::PI {
        t -= tau;
    } else if t <= -std::f64::consts::PI {
        t += tau;
    }
    t
}
