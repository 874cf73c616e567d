//! Minimal fixed-size linear algebra for the 3-D constructions.
//!
//! Just enough for rigid frames, similarity maps and the Gauss linking
//! integral; pulling in a full linear algebra crate for 3x3 products would be
//! overkill.

pub type V3 = [f64; 3];

pub fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: V3) -> V3 {
    let n = norm(a);
    assert!(n > 0.0, "normalize of zero vector");
    scale(a, 1.0 / n)
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub fn identity() -> Self {
        Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn from_cols(c0: V3, c1: V3, c2: V3) -> Self {
        Mat3([
            [c0[0], c1[0], c2[0]],
            [c0[1], c1[1], c2[1]],
            [c0[2], c1[2], c2[2]],
        ])
    }

    pub fn col(&self, j: usize) -> V3 {
        [self.0[0][j], self.0[1][j], self.0[2][j]]
    }

    pub fn apply(&self, v: V3) -> V3 {
        [
            dot(self.0[0], v),
            dot(self.0[1], v),
            dot(self.0[2], v),
        ]
    }

    pub fn mul(&self, other: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = dot(self.0[i], other.col(j));
            }
        }
        Mat3(out)
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Rotation by `angle` about the given axis (need not be unit).
    pub fn rotation(axis: V3, angle: f64) -> Self {
        let u = normalize(axis);
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let (x, y, z) = (u[0], u[1], u[2]);
        Mat3([
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ])
    }

    /// Recover (axis, angle) from a proper rotation; None for det < 0 or a
    /// matrix too far from orthonormal.
    pub fn axis_angle(&self) -> Option<(V3, f64)> {
        if self.det() < 0.0 {
            return None;
        }
        let m = &self.0;
        let tr = m[0][0] + m[1][1] + m[2][2];
        let cos_t = ((tr - 1.0) / 2.0).clamp(-1.0, 1.0);
        let angle = cos_t.acos();
        if angle < 1e-9 {
            return Some(([0.0, 0.0, 1.0], 0.0));
        }
        if (std::f64::consts::PI - angle) > 1e-6 {
            let ax = [
                m[2][1] - m[1][2],
                m[0][2] - m[2][0],
                m[1][0] - m[0][1],
            ];
            return Some((normalize(ax), angle));
        }
        // Near a half turn the skew part vanishes; read the axis from the
        // dominant diagonal of (M + I)/2 = axis axis^T.
        let q = [
            ((m[0][0] + 1.0) / 2.0).max(0.0).sqrt(),
            ((m[1][1] + 1.0) / 2.0).max(0.0).sqrt(),
            ((m[2][2] + 1.0) / 2.0).max(0.0).sqrt(),
        ];
        let k = if q[0] >= q[1] && q[0] >= q[2] {
            0
        } else if q[1] >= q[2] {
            1
        } else {
            2
        };
        let mut ax = [0.0; 3];
        ax[k] = q[k];
        for i in 0..3 {
            if i != k {
                ax[i] = (m[i][k] + m[k][i]) / (4.0 * q[k]);
            }
        }
        Some((normalize(ax), angle))
    }

    /// An orthonormal frame whose third column is the unit normal `n`.
    pub fn frame_from_normal(n: V3) -> Self {
        let w = normalize(n);
        // Pick the coordinate axis least aligned with w to seed u.
        let seed = if w[0].abs() <= w[1].abs() && w[0].abs() <= w[2].abs() {
            [1.0, 0.0, 0.0]
        } else if w[1].abs() <= w[2].abs() {
            [0.0, 1.0, 0.0]
        } else {
            [0.0, 0.0, 1.0]
        };
        let u = normalize(cross(seed, w));
        let v = cross(w, u);
        Mat3::from_cols(u, v, w)
    }
}
