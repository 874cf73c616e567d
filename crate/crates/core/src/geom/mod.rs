//! Shared geometric substrate: points, log-scale scalars, deterministic
//! sphere sampling, and extremal-modulus functionals.

pub mod logspace;
pub mod modulus;
pub mod point;
pub mod sample;
pub mod vec3;

pub use logspace::{wrap_angle, LogComplex, LN_F64_MAX, LN_PLAIN_EVAL};
pub use modulus::{
    extremal_modulus, iterated_max_modulus, ln_extremal_modulus, ln_max_modulus_tower,
    max_modulus, min_modulus, modulus_on_set, refined_ln_extremal, ClosedCurve, Extremum,
    ModulusMap, RefinedExtremum, Ring,
};
pub use point::{Dim, Point};
pub use sample::{circle_directions, golden_angle, sphere_directions, SamplePolicy, SphereSample};
