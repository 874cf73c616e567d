//! Numerical dilatation of a map over a ring region.
//!
//! Per grid cell: central-difference Jacobian, singular values, Jacobian
//! determinant; the outer dilatation is max sigma_max^n / |J| and the inner
//! is max |J| / sigma_min^n over the cells. Values are measurements, not
//! certificates: the note field records grid and degeneracy counts.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::point::{Dim, Point};
use crate::geom::{ModulusMap, Ring};

#[derive(Debug, Clone, serde::Serialize)]
pub struct DilatationEstimate {
    pub k_o: f64,
    pub k_i: f64,
    pub k: f64,
    pub grid_resolution: usize,
    pub cells_used: usize,
    pub cells_degenerate: usize,
    pub confidence_note: String,
}

/// Relative finite-difference step per cell.
const FD_STEP: f64 = 1e-5;

/// Fraction of degenerate cells above which the estimate is rejected.
const DEGENERATE_LIMIT: f64 = 0.01;

pub fn estimate_dilatation<M: ModulusMap + ?Sized>(
    map: &M,
    region: &Ring,
    grid: usize,
) -> Result<DilatationEstimate> {
    if grid < 2 {
        return Err(Error::invalid("dilatation grid must be at least 2"));
    }
    if map.dim() != region.center.dim() {
        return Err(Error::DimensionMismatch {
            map_dim: map.dim().as_u8(),
            point_dim: region.center.dim().as_u8(),
        });
    }
    let centers = cell_centers(region, grid);
    if centers.is_empty() {
        return Err(Error::EmptySet);
    }
    let cell = 2.0 * region.outer / grid as f64;
    let h = FD_STEP * cell;

    let per_cell: Vec<Option<(f64, f64)>> = centers
        .par_iter()
        .map(|x| cell_dilatation(map, *x, h))
        .collect::<Result<Vec<_>>>()?;

    let total = per_cell.len();
    let degenerate = per_cell.iter().filter(|c| c.is_none()).count();
    if (degenerate as f64) > DEGENERATE_LIMIT * total as f64 {
        return Err(Error::UnreliableEstimate { degenerate, total });
    }
    let mut k_o: f64 = 1.0;
    let mut k_i: f64 = 1.0;
    for pair in per_cell.into_iter().flatten() {
        k_o = k_o.max(pair.0);
        k_i = k_i.max(pair.1);
    }
    Ok(DilatationEstimate {
        k_o,
        k_i,
        k: k_o.max(k_i),
        grid_resolution: grid,
        cells_used: total - degenerate,
        cells_degenerate: degenerate,
        confidence_note: format!(
            "finite differences, step {h:.3e}, {total} cells in ring ({degenerate} degenerate skipped)"
        ),
    })
}

fn cell_centers(region: &Ring, grid: usize) -> Vec<Point> {
    let c = region.center;
    let lo = -region.outer;
    let step = 2.0 * region.outer / grid as f64;
    let mut out = Vec::new();
    match c.dim() {
        Dim::Two => {
            for i in 0..grid {
                for j in 0..grid {
                    let p = Point::planar(
                        c.coords()[0] + lo + (i as f64 + 0.5) * step,
                        c.coords()[1] + lo + (j as f64 + 0.5) * step,
                    );
                    if region.contains(p) {
                        out.push(p);
                    }
                }
            }
        }
        Dim::Three => {
            for i in 0..grid {
                for j in 0..grid {
                    for k in 0..grid {
                        let p = Point::spatial(
                            c.coords()[0] + lo + (i as f64 + 0.5) * step,
                            c.coords()[1] + lo + (j as f64 + 0.5) * step,
                            c.coords()[2] + lo + (k as f64 + 0.5) * step,
                        );
                        if region.contains(p) {
                            out.push(p);
                        }
                    }
                }
            }
        }
    }
    out
}

/// (K_O, K_I) contribution of one cell, None when the Jacobian there is
/// numerically degenerate.
fn cell_dilatation<M: ModulusMap + ?Sized>(
    map: &M,
    x: Point,
    h: f64,
) -> Result<Option<(f64, f64)>> {
    let n = x.dim().as_u8() as usize;
    let mut jac = [[0.0f64; 3]; 3];
    for col in 0..n {
        let mut dp = [0.0; 3];
        dp[col] = h;
        let step = match x.dim() {
            Dim::Two => Point::planar(dp[0], dp[1]),
            Dim::Three => Point::spatial(dp[0], dp[1], dp[2]),
        };
        let fp = map.apply(x.add(step))?;
        let fm = map.apply(x.sub(step))?;
        for row in 0..n {
            let d = (fp.coords()[row] - fm.coords()[row]) / (2.0 * h);
            if !d.is_finite() {
                return Err(Error::EvaluationFailure(x.raw()));
            }
            jac[row][col] = d;
        }
    }
    let (sigma_max, sigma_min, det) = match n {
        2 => svd2(jac[0][0], jac[0][1], jac[1][0], jac[1][1]),
        _ => svd3(&jac),
    };
    let det_abs = det.abs();
    if det_abs < 1e-14 * sigma_max.powi(n as i32) || sigma_min <= 0.0 {
        return Ok(None);
    }
    let k_o = (sigma_max.powi(n as i32) / det_abs).max(1.0);
    let k_i = (det_abs / sigma_min.powi(n as i32)).max(1.0);
    Ok(Some((k_o, k_i)))
}

/// Closed-form singular values and determinant of [[a, b], [c, d]].
fn svd2(a: f64, b: f64, c: f64, d: f64) -> (f64, f64, f64) {
    let e = (a + d) / 2.0;
    let f = (a - d) / 2.0;
    let g = (c + b) / 2.0;
    let h = (c - b) / 2.0;
    let q = (e * e + h * h).sqrt();
    let r = (f * f + g * g).sqrt();
    (q + r, (q - r).abs(), a * d - b * c)
}

/// Singular values and determinant of a 3x3 matrix via Jacobi eigenvalue
/// iteration on J^T J.
fn svd3(j: &[[f64; 3]; 3]) -> (f64, f64, f64) {
    let mut a = [[0.0f64; 3]; 3];
    for (r, row) in a.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| j[k][r] * j[k][c]).sum();
        }
    }
    // Cyclic Jacobi sweeps; a 3x3 symmetric matrix converges in a handful.
    for _ in 0..32 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off < 1e-30 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q].abs() < 1e-300 {
                continue;
            }
            let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let app = a[p][p];
            let aqq = a[q][q];
            let apq = a[p][q];
            a[p][p] = app - t * apq;
            a[q][q] = aqq + t * apq;
            a[p][q] = 0.0;
            a[q][p] = 0.0;
            let r = 3 - p - q;
            let arp = a[r][p];
            let arq = a[r][q];
            a[r][p] = c * arp - s * arq;
            a[p][r] = a[r][p];
            a[r][q] = s * arp + c * arq;
            a[q][r] = a[r][q];
        }
    }
    let mut eig = [a[0][0].max(0.0), a[1][1].max(0.0), a[2][2].max(0.0)];
    eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
        - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
        + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
    (eig[0].sqrt(), eig[2].sqrt(), det)
}
