//! Points of the plane or of 3-space under one type.
//!
//! Most of the crate works in the plane (as Complex64) but the linked-tori
//! construction and the loxodromic family live in R^3. A Point carries its
//! dimension so map application can reject mismatches instead of silently
//! reading a junk coordinate.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn as_u8(self) -> u8 {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Point {
    coords: [f64; 3],
    dim: Dim,
}

impl Point {
    pub fn planar(x: f64, y: f64) -> Self {
        Point { coords: [x, y, 0.0], dim: Dim::Two }
    }

    pub fn spatial(x: f64, y: f64, z: f64) -> Self {
        Point { coords: [x, y, z], dim: Dim::Three }
    }

    pub fn from_complex(z: Complex64) -> Self {
        Point::planar(z.re, z.im)
    }

    pub fn to_complex(self) -> Result<Complex64> {
        match self.dim {
            Dim::Two => Ok(Complex64::new(self.coords[0], self.coords[1])),
            Dim::Three => Err(Error::DimensionMismatch { map_dim: 2, point_dim: 3 }),
        }
    }

    pub fn dim(self) -> Dim {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim.as_u8() as usize]
    }

    pub fn raw(self) -> [f64; 3] {
        self.coords
    }

    pub fn norm(self) -> f64 {
        let [x, y, z] = self.coords;
        (x * x + y * y + z * z).sqrt()
    }

    pub fn dist(self, other: Point) -> f64 {
        let a = self.coords;
        let b = other.coords;
        let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    pub fn add(self, other: Point) -> Point {
        let a = self.coords;
        let b = other.coords;
        Point { coords: [a[0] + b[0], a[1] + b[1], a[2] + b[2]], dim: self.dim }
    }

    pub fn sub(self, other: Point) -> Point {
        let a = self.coords;
        let b = other.coords;
        Point { coords: [a[0] - b[0], a[1] - b[1], a[2] - b[2]], dim: self.dim }
    }

    pub fn scale(self, s: f64) -> Point {
        let [x, y, z] = self.coords;
        Point { coords: [s * x, s * y, s * z], dim: self.dim }
    }

    /// Unit vector in the same direction; errors on the zero point.
    pub fn normalized(self) -> Result<Point> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::invalid("cannot normalize a zero or non-finite point"));
        }
        Ok(self.scale(1.0 / n))
    }
}
