//! Numerical toolkit for expanding uniformly quasiregular dynamics.
//!
//! The crate verifies, by computation, the structures that organize the
//! escaping set of an expanding uniformly quasiregular map: growth of the
//! iterated maximum modulus, Poincare linearizers at repelling fixed points,
//! spiders' web certificates for the fast escaping set, and the linked-tori
//! Cantor sets that realize tame and wild Julia sets in 3-space.
//!
//! Layout:
//! * [`geom`]: points, log-scale complex scalars, sphere sampling, extremal
//!   modulus functionals.
//! * [`maps`]: the catalog of concrete map families and their dilatation.
//! * [`linearizer`]: Poincare linearizer evaluation near a repelling fixed
//!   point and its local inverse.
//! * [`growth`]: growth and expansion diagnostics (thresholds, sandwich
//!   bounds, distortion).
//! * [`periodic`]: periodic points, multipliers, and Julia-set sampling.
//! * [`web`]: curves, winding numbers, fast-escape tests, and the spiders'
//!   web certificate.
//! * [`cantor`]: linked-tori (necklace) constructions in 3-space with
//!   stage verification, linking numbers, and meshes.
//! * [`report`]: run configuration parsing and the JSON report envelope.

pub mod cantor;
pub mod error;
pub mod geom;
pub mod growth;
pub mod linearizer;
pub mod maps;
pub mod periodic;
pub mod web;

pub use error::{Error, Result};
