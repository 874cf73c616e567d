//! Spiders'-web certificates for the fast escaping set.
//!
//! The construction runs in one direction: a closed curve around a
//! repelling fixed point, tight enough to sit inside the escaping basin,
//! is pulled back through the linearizer to a loop around the origin and
//! pushed forward by powers of the multiplier into prescribed annuli
//! A(r_m, r_m^mu). Each level is then checked as a measured object: the
//! loop must swallow the ball of the iterated max-modulus tower, the map
//! must carry its boundary strictly past the next loop, and the image must
//! wind around every probe point of the next level. A verdict that fails
//! is data, not an error; errors are reserved for inputs the construction
//! cannot even start from.
//!
//! Membership of individual orbits in the fast escaping set is tested
//! against the same tower, with and without the uniform offset.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::logspace::{wrap_angle, LogComplex, LN_PLAIN_EVAL};
use crate::geom::modulus::{ln_max_modulus_tower, ClosedCurve, ModulusMap};
use crate::geom::point::{Dim, Point};
use crate::geom::sample::SamplePolicy;
use crate::growth::{mu_threshold, rm_sequence};
use crate::linearizer::LinearizerModel;
use crate::maps::MapSpec;
use crate::periodic::escape_radius;

/// Relative band around a curve inside which winding numbers are refused.
const ON_CURVE_TOL: f64 = 1e-9;

/// Margin added to the escape radius for the degenerate depth-0 circle.
const BASE_MARGIN: f64 = 1e-3;

/// Vertex count of the degenerate depth-0 circle.
const BASE_VERTICES: usize = 256;

/// Relative threshold margin for grid-extracted level curves. The contour
/// passes the fixed point at roughly (T - R_esc) / |(f^k)'(x0)|, so a
/// hairline margin would park it within one vertex-placement error of the
/// point the winding checks pivot on; a tenth of the radius keeps the
/// clearance two orders above the placement error.
const LEVEL_MARGIN: f64 = 0.1;

/// Initial marching-squares resolution, in cells per window side.
const GRID_RESOLUTION: usize = 128;

/// Resolution doublings offered to an ambiguous contour.
const GRID_DOUBLINGS: u32 = 3;

/// Window growths offered to a contour that crosses the window edge.
const WINDOW_GROWTHS: u32 = 5;

/// Iteration budget on top of the depth when confirming vertices escape.
const ESCAPE_CONFIRM: u32 = 80;

/// Relative slack for ln-scale comparisons against measured quantities.
fn ln_slack(ln: f64) -> f64 {
    1e-9 * (1.0 + ln.abs())
}

// ---------------------------------------------------------------------------
// winding numbers and curve export

/// Distance from `p` to the segment [a, b].
fn seg_distance(a: Complex64, b: Complex64, p: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a).re * ab.re + (p - a).im * ab.im) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Signed turn count of a vertex list around `p`. Exact for polylines as
/// long as no edge passes through `p`; callers rule that out first.
fn winding_turns(vertices: &[Complex64], p: Complex64) -> f64 {
    let mut total = 0.0;
    let mut prev = vertices[vertices.len() - 1] - p;
    for v in vertices {
        let cur = v - p;
        total += wrap_angle(cur.arg() - prev.arg());
        prev = cur;
    }
    total / std::f64::consts::TAU
}

fn complex_vertices(curve: &ClosedCurve) -> Result<Vec<Complex64>> {
    curve.vertices().iter().map(|v| v.to_complex()).collect()
}

/// Winding number of a closed polyline about a point, by summed signed
/// angles. Points within a relative tolerance band of the curve are
/// refused: there the winding number is not defined and a single edge can
/// sweep a straight angle either way.
pub fn winding_number(curve: &ClosedCurve, point: Point) -> Result<i64> {
    if curve.dim() != Dim::Two {
        return Err(Error::invalid("winding numbers are planar"));
    }
    let p = point.to_complex()?;
    let vs = complex_vertices(curve)?;
    let tol = ON_CURVE_TOL * curve.max_norm().max(p.norm());
    for i in 0..vs.len() {
        let j = (i + 1) % vs.len();
        if seg_distance(vs[i], vs[j], p) <= tol {
            return Err(Error::invalid(format!(
                "point ({}, {}) lies within {tol:.3e} of the curve; winding is undefined there",
                p.re, p.im
            )));
        }
    }
    Ok(winding_turns(&vs, p).round() as i64)
}

/// CSV rows (header `x,y`, one vertex per line) for external plotting.
pub fn curve_csv(curve: &ClosedCurve) -> Result<String> {
    if curve.dim() != Dim::Two {
        return Err(Error::invalid("curve export is planar"));
    }
    let mut out = String::from("x,y\n");
    for v in curve.vertices() {
        let c = v.coords();
        writeln!(out, "{},{}", c[0], c[1]).expect("string write");
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// orbit-versus-tower membership

/// Orbit-versus-tower evidence for one starting point.
///
/// The tower is ln M^m(R, f); membership without offset demands the orbit
/// stay at or above it from the first step, membership with offset P
/// compares |f^(m+P)(x)| against M^m(R, f) instead.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FastEscapeReport {
    pub point: Point,
    pub threshold_r: f64,
    /// Least offset that keeps the whole tail above the tower, if any.
    pub offset_p: Option<u32>,
    /// ln |f^m(x)| for m = 0..=horizon.
    pub ln_orbit_norms: Vec<f64>,
    /// ln M^m(R, f) for m = 1..=horizon.
    pub ln_tower: Vec<f64>,
    /// Membership with no offset allowed.
    pub member_a_r: bool,
    /// Membership with some offset within the budget.
    pub member_a: bool,
    /// True when membership was not established and offsets at or past the
    /// horizon had no comparisons left to rule them out.
    pub undecided: bool,
}

/// ln |f^m(x)| for m = 0..=steps. The orbit runs in plain coordinates
/// until one more application could leave comfortable range, then switches
/// to log-radial stepping for good.
fn ln_orbit(map: &MapSpec, x: Point, steps: u32) -> Result<Vec<f64>> {
    enum State {
        Plain(Point),
        Log(f64, Point),
    }
    let ln_switch = 200.0 / map.degree().max(1) as f64;
    let mut out = Vec::with_capacity(steps as usize + 1);
    out.push(x.norm().ln());
    let mut state = State::Plain(x);
    for _ in 0..steps {
        state = match state {
            State::Plain(p) => {
                let n = p.norm();
                if n > 0.0 && n.ln() > ln_switch {
                    let dir = p.scale(1.0 / n);
                    let (ln, d) = map.apply_log_radial(n.ln(), dir)?;
                    State::Log(ln, d)
                } else {
                    let q = map.apply(p)?;
                    if !q.norm().is_finite() {
                        return Err(Error::EvaluationFailure(q.raw()));
                    }
                    State::Plain(q)
                }
            }
            State::Log(ln, d) => {
                let (ln2, d2) = map.apply_log_radial(ln, d)?;
                State::Log(ln2, d2)
            }
        };
        out.push(match &state {
            State::Plain(p) => p.norm().ln(),
            State::Log(ln, _) => *ln,
        });
    }
    Ok(out)
}

/// Compare an orbit against the iterated max-modulus tower over `horizon`
/// levels, trying offsets 0..=max_p in order. Comparisons run on ln values
/// with a relative slack, so towers the orbit matches exactly (linear
/// maps) still count as membership. A threshold whose tower fails to grow
/// is reported as the underlying error.
pub fn fast_escape_test(
    map: &MapSpec,
    x: Point,
    r: f64,
    horizon: u32,
    max_p: u32,
) -> Result<FastEscapeReport> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::invalid(format!("threshold must be positive, got {r}")));
    }
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    if x.dim() != map.dim() {
        return Err(Error::DimensionMismatch {
            map_dim: map.dim().as_u8(),
            point_dim: x.dim().as_u8(),
        });
    }
    let ln_tower = ln_max_modulus_tower(map, r.ln(), horizon, &SamplePolicy::default())?;
    let ln_orbit_norms = ln_orbit(map, x, horizon)?;
    let above = |lo: f64, lt: f64| lo >= lt - ln_slack(lt);
    let mut offset_p = None;
    let mut undecided = false;
    for p in 0..=max_p {
        if p >= horizon {
            undecided = offset_p.is_none();
            break;
        }
        let tail_ok = (1..=(horizon - p) as usize)
            .all(|m| above(ln_orbit_norms[m + p as usize], ln_tower[m - 1]));
        if tail_ok {
            offset_p = Some(p);
            break;
        }
    }
    Ok(FastEscapeReport {
        point: x,
        threshold_r: r,
        offset_p,
        ln_orbit_norms,
        ln_tower,
        member_a_r: offset_p == Some(0),
        member_a: offset_p.is_some(),
        undecided,
    })
}

// ---------------------------------------------------------------------------
// enclosing curves around a repelling fixed point

fn circle_polygon(center: Complex64, radius: f64, n: usize) -> Result<ClosedCurve> {
    let pts = (0..n)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / n as f64;
            Point::from_complex(center + Complex64::from_polar(radius, theta))
        })
        .collect();
    ClosedCurve::new(pts)
}

/// Twice the signed area of a vertex loop; positive for counter-clockwise.
fn shoelace(pts: &[Complex64]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        s += a.re * b.im - b.re * a.im;
    }
    s
}

enum Extraction {
    /// The contour crossed the window edge; the window must grow.
    Clipped,
    /// A cell saw four sign changes, or the loop around the centre stayed
    /// unresolved; the grid must refine.
    Ambiguous,
    Loops(Vec<Vec<Complex64>>),
}

/// Kind (horizontal/vertical) plus the lattice coordinates of the lower
/// or left node; exact keys make the loop tracing free of tolerance.
type EdgeKey = (u8, usize, usize);

/// March the zero level of `field` over the square window of half-width
/// `half` around `center`, on an n-by-n cell grid. Vertices sit on cell
/// edges by linear interpolation; cells whose corners alternate in sign
/// are ambiguous at this resolution, and chains that reach the window
/// boundary mean the level set is clipped.
fn extract_level_loops<F>(field: &F, center: Complex64, half: f64, n: usize) -> Result<Extraction>
where
    F: Fn(Complex64) -> f64 + Sync,
{
    let step = 2.0 * half / n as f64;
    let node = |i: usize, j: usize| {
        Complex64::new(
            center.re - half + step * i as f64,
            center.im - half + step * j as f64,
        )
    };
    let vals: Vec<Vec<f64>> = (0..=n)
        .into_par_iter()
        .map(|i| (0..=n).map(|j| field(node(i, j))).collect())
        .collect();
    for row in &vals {
        for v in row {
            if !v.is_finite() {
                return Err(Error::EvaluationFailure([center.re, center.im, *v]));
            }
        }
    }
    let inside = |i: usize, j: usize| vals[i][j] < 0.0;

    // interpolated vertex on a sign-changing edge
    let edge_point = |key: EdgeKey| -> Complex64 {
        let (kind, i, j) = key;
        let (a, b) = if kind == 0 {
            ((i, j), (i + 1, j))
        } else {
            ((i, j), (i, j + 1))
        };
        let va = vals[a.0][a.1];
        let vb = vals[b.0][b.1];
        let t = va / (va - vb);
        let pa = node(a.0, a.1);
        let pb = node(b.0, b.1);
        pa + (pb - pa) * t
    };

    // one segment per cell with exactly two crossed edges
    let mut segs: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let mut crossed: Vec<EdgeKey> = Vec::with_capacity(4);
            if inside(i, j) != inside(i + 1, j) {
                crossed.push((0, i, j));
            }
            if inside(i + 1, j) != inside(i + 1, j + 1) {
                crossed.push((1, i + 1, j));
            }
            if inside(i, j + 1) != inside(i + 1, j + 1) {
                crossed.push((0, i, j + 1));
            }
            if inside(i, j) != inside(i, j + 1) {
                crossed.push((1, i, j));
            }
            match crossed.len() {
                0 => {}
                2 => segs.push((crossed[0], crossed[1])),
                _ => return Ok(Extraction::Ambiguous),
            }
        }
    }
    if segs.is_empty() {
        // the window is entirely on one side of the level set
        return Ok(Extraction::Clipped);
    }

    let mut adjacency: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (idx, (a, b)) in segs.iter().enumerate() {
        adjacency.entry(*a).or_default().push(idx);
        adjacency.entry(*b).or_default().push(idx);
    }
    for list in adjacency.values() {
        match list.len() {
            2 => {}
            // a contour edge with one neighbour sits on the window boundary
            1 => return Ok(Extraction::Clipped),
            _ => return Ok(Extraction::Ambiguous),
        }
    }

    // every edge now has exactly two incident segments: walk the cycles
    let mut visited = vec![false; segs.len()];
    let mut loops = Vec::new();
    for start in 0..segs.len() {
        if visited[start] {
            continue;
        }
        let first_edge = segs[start].0;
        let mut chain = Vec::new();
        let mut cur = start;
        let mut entry = first_edge;
        loop {
            visited[cur] = true;
            chain.push(edge_point(entry));
            let exit = if segs[cur].0 == entry { segs[cur].1 } else { segs[cur].0 };
            if exit == first_edge {
                break;
            }
            let nbrs = &adjacency[&exit];
            cur = if nbrs[0] == cur { nbrs[1] } else { nbrs[0] };
            entry = exit;
        }
        loops.push(chain);
    }
    Ok(Extraction::Loops(loops))
}

/// A closed curve inside the escaping basin that encircles the repelling
/// fixed point `x0` of z^2 + c: the level curve |f^k| = T, extracted by
/// marching squares on a window around x0. Deeper k hugs the boundary of
/// the basin harder and the curve diameter shrinks geometrically with the
/// inverse-branch contraction.
///
/// Only parameters whose filled-in set carries no interior are accepted
/// (real c at or below -2, or |c| above 2), so the level curve is the
/// whole obstruction. Depth 0 degenerates to the circle just outside the
/// escape radius.
pub fn julia_enclosing_curve(c: Complex64, k: u32, x0: Point) -> Result<ClosedCurve> {
    let cantor_regime = (c.im == 0.0 && c.re <= -2.0) || c.norm() > 2.0;
    if !cantor_regime {
        return Err(Error::OutsideRegion(format!(
            "parameter {c} needs real part <= -2 on the real axis or modulus above 2"
        )));
    }
    let z0 = x0.to_complex()?;
    let fix_residual = (z0 * z0 + c - z0).norm();
    if fix_residual > 1e-8 * (1.0 + z0.norm_sqr()) {
        return Err(Error::invalid(format!(
            "x0 is not fixed under z^2 + c: residual {fix_residual:.3e}"
        )));
    }
    if 2.0 * z0.norm() <= 1.0 {
        return Err(Error::invalid("the fixed point must be repelling"));
    }
    let r_esc = escape_radius(c);
    if k == 0 {
        return circle_polygon(Complex64::new(0.0, 0.0), r_esc + BASE_MARGIN, BASE_VERTICES);
    }

    let t = r_esc * (1.0 + LEVEL_MARGIN);
    let ln_t = t.ln();
    let field = move |z: Complex64| -> f64 {
        let mut w = z;
        for _ in 0..k {
            w = w * w + c;
            if w.norm_sqr() > 1e120 {
                // escaped far beyond the threshold scale mid-iteration
                return 200.0;
            }
        }
        let n2 = w.norm_sqr();
        if n2 == 0.0 {
            -800.0
        } else {
            0.5 * n2.ln() - ln_t
        }
    };

    let contraction = (1.0 / (2.0 * (c.norm() - t).max(1e-2).sqrt())).min(0.95);
    let mut half = (2.4 * t * contraction.powi(k as i32)).max(0.02);
    let mut n = GRID_RESOLUTION;
    let mut grows = 0;
    let mut doublings = 0;
    let mut raw: Vec<Complex64> = loop {
        let mut unresolved = false;
        match extract_level_loops(&field, z0, half, n)? {
            Extraction::Clipped => {
                grows += 1;
                if grows > WINDOW_GROWTHS {
                    return Err(Error::invalid(
                        "the level curve kept crossing the search window",
                    ));
                }
                half *= 1.6;
            }
            Extraction::Ambiguous => unresolved = true,
            Extraction::Loops(all) => {
                // innermost loop that winds the fixed point once
                let mut best: Option<Vec<Complex64>> = None;
                let mut best_reach = f64::INFINITY;
                for lp in all {
                    if lp.len() < 3 || winding_turns(&lp, z0).round().abs() != 1.0 {
                        continue;
                    }
                    let reach = lp.iter().map(|p| (p - z0).norm()).fold(0.0, f64::max);
                    if reach < best_reach {
                        best_reach = reach;
                        best = Some(lp);
                    }
                }
                match best {
                    Some(lp) => break lp,
                    None => unresolved = true,
                }
            }
        }
        if unresolved {
            doublings += 1;
            if doublings > GRID_DOUBLINGS {
                return Err(Error::RefineGrid { resolution: n, suggested: 2 * n });
            }
            n *= 2;
        }
    };
    if shoelace(&raw) < 0.0 {
        raw.reverse();
    }

    let escape_bound = 2.0 * r_esc + 1.0;
    let all_escape = raw.par_iter().all(|v| {
        let mut w = *v;
        for _ in 0..(k + ESCAPE_CONFIRM) {
            if w.norm() > escape_bound {
                return true;
            }
            w = w * w + c;
            if !w.re.is_finite() || !w.im.is_finite() {
                return true;
            }
        }
        false
    });
    if !all_escape {
        return Err(Error::invalid(
            "a vertex of the extracted curve failed to escape; the threshold margin is too tight",
        ));
    }

    let curve = ClosedCurve::new(raw.into_iter().map(Point::from_complex).collect())?;
    match winding_number(&curve, x0)? {
        1 => Ok(curve),
        w => Err(Error::invalid(format!(
            "extracted curve winds {w} times around the fixed point, expected once"
        ))),
    }
}

// ---------------------------------------------------------------------------
// pull-back through the linearizer

/// Pull a curve in the range of the linearizer back through its local
/// inverse. Each vertex is seeded from the previous result, which keeps
/// the whole chain on one inverse branch; a vertex that cannot continue
/// the chain, or jumps by more than half the chart radius, breaks it. The
/// result is normalized counter-clockwise and must wind once around 0.
pub fn pull_back_curve(l: &LinearizerModel, gamma: &ClosedCurve) -> Result<ClosedCurve> {
    if l.multiplier_scalar().is_none() || gamma.dim() != Dim::Two {
        return Err(Error::invalid("curve pull-back needs the planar conformal model"));
    }
    let mut pulled: Vec<Point> = Vec::with_capacity(gamma.vertex_count());
    let mut prev: Option<Complex64> = None;
    for (i, v) in gamma.vertices().iter().enumerate() {
        let w = v.to_complex()?;
        let z = match prev {
            None => l.local_inverse_c(w)?,
            Some(seed) => l
                .local_inverse_seeded_c(w, seed)
                .map_err(|_| Error::SeedChainBreak { index: i })?,
        };
        if let Some(seed) = prev {
            if (z - seed).norm() > 0.5 * l.radius() {
                return Err(Error::SeedChainBreak { index: i });
            }
        }
        pulled.push(Point::from_complex(z));
        prev = Some(z);
    }
    let mut curve = ClosedCurve::new(pulled)?;
    match winding_number(&curve, Point::planar(0.0, 0.0))? {
        1 => {}
        -1 => {
            let mut vs = curve.vertices().to_vec();
            vs.reverse();
            curve = ClosedCurve::new(vs)?;
        }
        w => {
            return Err(Error::invalid(format!(
                "pulled-back curve winds {w} times around 0, expected once"
            )))
        }
    }
    Ok(curve)
}

// ---------------------------------------------------------------------------
// push-forward by multiplier powers

/// A curve scaled by lambda^p. The stored polygon always carries the
/// rotation; when the scaled magnitudes would leave comfortable plain
/// range the modulus factor is deferred, so true coordinates are the
/// stored ones times e^ln_rescale.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ScaledCurve {
    curve: ClosedCurve,
    ln_rescale: f64,
}

impl ScaledCurve {
    /// Stored polygon; true coordinates differ by e^ln_rescale.
    pub fn stored(&self) -> &ClosedCurve {
        &self.curve
    }

    /// True when the modulus factor is deferred.
    pub fn is_log_scaled(&self) -> bool {
        self.ln_rescale != 0.0
    }

    pub fn ln_rescale(&self) -> f64 {
        self.ln_rescale
    }

    /// ln of the true maximum vertex norm.
    pub fn ln_max_norm(&self) -> f64 {
        self.curve.max_norm().ln() + self.ln_rescale
    }

    /// ln of the true minimum vertex norm.
    pub fn ln_min_norm(&self) -> f64 {
        self.curve.min_norm().ln() + self.ln_rescale
    }

    /// The plain polygon, if plain coordinates represent it.
    pub fn into_plain(self) -> Result<ClosedCurve> {
        if self.is_log_scaled() {
            Err(Error::LogOverflow)
        } else {
            Ok(self.curve)
        }
    }
}

/// Vertex-wise multiplication by lambda^p.
pub fn scale_curve(curve: &ClosedCurve, lambda: Complex64, p: u32) -> Result<ScaledCurve> {
    if curve.dim() != Dim::Two {
        return Err(Error::invalid("curve scaling is planar"));
    }
    if !(lambda.norm() > 0.0) || !lambda.norm().is_finite() {
        return Err(Error::invalid("the multiplier must be nonzero and finite"));
    }
    let ln_mag = p as f64 * lambda.norm().ln();
    let phase = wrap_angle(p as f64 * lambda.arg());
    let ln_peak = ln_mag + curve.max_norm().ln();
    let (factor, ln_rescale) = if ln_peak.abs() > LN_PLAIN_EVAL {
        (Complex64::from_polar(1.0, phase), ln_mag)
    } else {
        (Complex64::from_polar(ln_mag.exp(), phase), 0.0)
    };
    let vs = complex_vertices(curve)?;
    let scaled = vs.into_iter().map(|z| Point::from_complex(z * factor)).collect();
    Ok(ScaledCurve { curve: ClosedCurve::new(scaled)?, ln_rescale })
}

// ---------------------------------------------------------------------------
// exponent bracketing

/// Integer strictly above x. Values within a relative hair of an integer
/// snap to it first, so a ratio that is an integer up to float noise is
/// treated as exactly on the boundary and excluded.
fn strict_above(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as i64 + 1
    } else {
        x.ceil() as i64
    }
}

/// Integer strictly below x, with the same snapping.
fn strict_below(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as i64 - 1
    } else {
        x.floor() as i64
    }
}

fn bracket_from_lns(ln_min: f64, ln_max: f64, ln_lam: f64, ln_r: f64, mu: f64) -> Result<(u32, u32)> {
    let p1 = strict_above((ln_r - ln_min) / ln_lam).max(0);
    let p2 = strict_below((mu * ln_r - ln_max) / ln_lam);
    if p2 < p1 {
        // sufficient cure: a ring so wide that consecutive powers cannot
        // straddle it even against the curve's radial spread
        let min_r = ((ln_lam + (ln_max - ln_min)) / (mu - 1.0)).exp();
        return Err(Error::RingTooThin { min_r });
    }
    Ok((p1 as u32, p2 as u32))
}

/// The minimal and maximal powers of the multiplier that place the scaled
/// curve strictly inside the annulus A(r, r^mu), by ln arithmetic on the
/// curve's extreme vertex norms. Near-integer ratios snap and are then
/// excluded by strictness, which can only under-report the bracket.
pub fn bracket_exponents(
    curve: &ClosedCurve,
    lambda: Complex64,
    r: f64,
    mu: f64,
) -> Result<(u32, u32)> {
    if curve.dim() != Dim::Two {
        return Err(Error::invalid("exponent bracketing is planar"));
    }
    if !(r > 0.0) || !r.is_finite() || !(mu > 1.0) || !mu.is_finite() {
        return Err(Error::invalid(format!("need r > 0 and mu > 1, got r = {r}, mu = {mu}")));
    }
    if !(lambda.norm() > 1.0) {
        return Err(Error::invalid("the multiplier must be expanding"));
    }
    let a = curve.min_norm();
    if !(a > 0.0) {
        return Err(Error::invalid("the curve passes through the origin"));
    }
    bracket_from_lns(a.ln(), curve.max_norm().ln(), lambda.norm().ln(), r.ln(), mu)
}

// ---------------------------------------------------------------------------
// the certificate

/// Knobs for certificate construction. Defaults match the acceptance runs;
/// doubling any budget may only sharpen the measured extrema.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CertifyOptions {
    /// Depth of the enclosing curve around the fixed point.
    pub curve_depth: u32,
    /// Probe points on each tower ball when checking containment.
    pub ball_samples: usize,
    /// Next-boundary probe points for the image-winding check.
    pub image_samples: usize,
    /// Sampling policy for the max-modulus tower behind the r_m heights.
    pub tower: SamplePolicy,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            curve_depth: 3,
            ball_samples: 128,
            image_samples: 16,
            tower: SamplePolicy::with_samples(512),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Verdict {
    Pass,
    Fail,
}

/// One certified annulus level.
#[derive(Debug, Clone, serde::Serialize)]
pub struct WebLevel {
    pub m: u32,
    /// ln r_m, where r_m is the tower height scaled by the m-th power of
    /// the multiplier magnitude.
    pub ln_r_m: f64,
    /// Plain-scale r_m; infinite where it exceeds f64 range.
    pub r_m: f64,
    /// Stored boundary polygon; true coordinates are the stored ones times
    /// e^ln_boundary_rescale.
    pub boundary: ClosedCurve,
    pub ln_boundary_rescale: f64,
    /// The multiplier power that produced this boundary.
    pub p_exponent: u32,
    /// ln of the measured minimum of |L| over the boundary vertices.
    pub ln_min_image_modulus: f64,
    /// ln of the next boundary's maximum vertex norm.
    pub ln_next_max_norm: f64,
    /// The tower ball and its centre lie inside the boundary loop.
    pub ball_containment: bool,
    /// The image of the boundary stays strictly beyond the next boundary.
    pub separation: bool,
    /// The image of the boundary winds around every next-level probe.
    pub image_winding_nonzero: bool,
    /// No self-intersections at polyline resolution. One result shared by
    /// all levels: the boundaries are similarity images of one curve.
    pub jordan: bool,
}

impl WebLevel {
    pub fn passed(&self) -> bool {
        self.ball_containment && self.separation && self.image_winding_nonzero && self.jordan
    }
}

/// Echo of the sampling choices a certificate was produced with, plus the
/// standing caveat on what polyline sampling can and cannot see.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PolicyEcho {
    pub options: CertifyOptions,
    pub curve_depth_used: u32,
    pub boundary_vertices: usize,
    pub caveat: &'static str,
}

const RESOLUTION_CAVEAT: &str = "simple-curve validation runs at polyline resolution; \
     self-intersections below the vertex spacing are not excluded";

/// A level-by-level record of the annulus chain. `Pass` means every level
/// passed all four checks; `Fail` names the first level that did not.
#[derive(Debug, Clone, serde::Serialize)]
pub struct WebCertificate {
    pub threshold_r: f64,
    pub mu: f64,
    pub levels: Vec<WebLevel>,
    pub verdict: Verdict,
    pub offending_level: Option<u32>,
    pub sample_policy: PolicyEcho,
}

impl WebCertificate {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::invalid(format!("certificate serialization failed: {e}")))
    }
}

/// No self-intersections at polyline resolution: every pair of
/// nonadjacent segments is disjoint and no vertex folds straight back.
fn is_simple_polyline(curve: &ClosedCurve) -> Result<bool> {
    let vs = complex_vertices(curve)?;
    let n = vs.len();
    let orient = |a: Complex64, b: Complex64, c: Complex64| -> f64 {
        (b - a).re * (c - a).im - (b - a).im * (c - a).re
    };
    let between = |a: Complex64, b: Complex64, p: Complex64| -> bool {
        p.re >= a.re.min(b.re)
            && p.re <= a.re.max(b.re)
            && p.im >= a.im.min(b.im)
            && p.im <= a.im.max(b.im)
    };
    for i in 0..n {
        let a = vs[i];
        let b = vs[(i + 1) % n];
        let c = vs[(i + 2) % n];
        let spike = orient(a, b, c) == 0.0
            && ((b - a).re * (c - b).re + (b - a).im * (c - b).im) < 0.0;
        if spike {
            return Ok(false);
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (a, b) = (vs[i], vs[(i + 1) % n]);
            let (c, d) = (vs[j], vs[(j + 1) % n]);
            let d1 = orient(c, d, a);
            let d2 = orient(c, d, b);
            let d3 = orient(a, b, c);
            let d4 = orient(a, b, d);
            let proper = ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
                && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0));
            let touching = (d1 == 0.0 && between(c, d, a))
                || (d2 == 0.0 && between(c, d, b))
                || (d3 == 0.0 && between(a, b, c))
                || (d4 == 0.0 && between(a, b, d));
            if proper || touching {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Winding of the boundary about the ball centre and about probe points
/// on the ball's circle, all in stored coordinates. A probe touching the
/// curve counts as failed containment rather than an error.
fn ball_inside(stored: &ClosedCurve, ln_rescale: f64, ln_ball: f64, samples: usize) -> Result<bool> {
    let radius = (ln_ball - ln_rescale).exp();
    if !radius.is_finite() {
        return Ok(false);
    }
    let n = samples.max(8);
    let mut probes: Vec<Point> = (0..n)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / n as f64;
            Point::from_complex(Complex64::from_polar(radius, theta))
        })
        .collect();
    probes.push(Point::planar(0.0, 0.0));
    for p in probes {
        match winding_number(stored, p) {
            Ok(1) => {}
            Ok(_) | Err(_) => return Ok(false),
        }
    }
    Ok(true)
}

/// ln of the minimum of |L| over the true-coordinate boundary vertices.
fn min_image_ln(l: &LinearizerModel, boundary: &ScaledCurve) -> Result<f64> {
    let rescale = boundary.ln_rescale();
    let values = boundary
        .stored()
        .vertices()
        .par_iter()
        .map(|v| {
            let z = v.to_complex()?;
            let lz = LogComplex::new(z.norm().ln() + rescale, z.arg());
            Ok(l.linearize_log(lz)?.ln_abs)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(values.into_iter().fold(f64::INFINITY, f64::min))
}

/// p inverse steps of z^2 + c from a possibly log-scale start, toward the
/// fixed point. While the magnitude is far beyond plain range the
/// subtraction of c is below f64 resolution and the principal square root
/// just halves the log; once plain, each step picks the root nearer x0.
fn backward_toward(c: Complex64, x0: Complex64, start: LogComplex, p: u32) -> Option<Complex64> {
    enum State {
        Log(LogComplex),
        Plain(Complex64),
    }
    let mut state = if start.ln_abs < LN_PLAIN_EVAL {
        State::Plain(start.to_complex())
    } else {
        State::Log(start)
    };
    for _ in 0..p {
        state = match state {
            State::Log(w) => {
                let half = LogComplex::new(0.5 * w.ln_abs, wrap_angle(0.5 * w.arg));
                if half.ln_abs < LN_PLAIN_EVAL {
                    State::Plain(half.to_complex())
                } else {
                    State::Log(half)
                }
            }
            State::Plain(w) => {
                let root = (w - c).sqrt();
                if !root.re.is_finite() || !root.im.is_finite() {
                    return None;
                }
                let z = if (root - x0).norm() <= (-root - x0).norm() { root } else { -root };
                State::Plain(z)
            }
        };
    }
    match state {
        State::Plain(w) => Some(w),
        State::Log(_) => None,
    }
}

/// The image of a level boundary under L winds around every probe point of
/// the next boundary. L carries lambda^p u to f^p(L(u)), so the image of
/// the scaled curve is the p-fold push-forward of the enclosing curve, and
/// its winding about a probe counts the probe's f^(-p) preimages inside
/// the enclosing curve. Pulling the probe back along the branch toward the
/// fixed point and landing inside certifies the count is at least one.
fn image_winding(
    c: Complex64,
    x0: Complex64,
    gamma: &[Complex64],
    next: &ScaledCurve,
    p: u32,
    samples: usize,
) -> Result<bool> {
    let vs = next.stored().vertices();
    let stride = (vs.len() / samples.max(1)).max(1);
    let rescale = next.ln_rescale();
    for v in vs.iter().step_by(stride) {
        let z = v.to_complex()?;
        let probe = LogComplex::new(z.norm().ln() + rescale, z.arg());
        let Some(end) = backward_toward(c, x0, probe, p) else {
            return Ok(false);
        };
        if winding_turns(gamma, end).round() as i64 != 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn certify_web(l: &LinearizerModel, big_r: f64, mu: f64, levels: u32) -> Result<WebCertificate> {
    certify_web_with(l, big_r, mu, levels, &CertifyOptions::default())
}

/// Build and check the annulus chain for the planar quadratic model.
///
/// Heights come from the measured max-modulus tower of L scaled by powers
/// of the multiplier magnitude; the level boundaries are one pulled-back
/// enclosing curve pushed forward by the maximal admissible power for each
/// annulus. Checks per level: tower-ball containment, strict separation of
/// the boundary's image beyond the next boundary, image winding about the
/// next level's probes, and simplicity of the (shared) boundary polygon.
/// The threshold R must already show growth at the first tower level.
pub fn certify_web_with(
    l: &LinearizerModel,
    big_r: f64,
    mu: f64,
    levels: u32,
    opts: &CertifyOptions,
) -> Result<WebCertificate> {
    let lambda = l
        .multiplier_scalar()
        .ok_or_else(|| Error::invalid("web certificates need the planar conformal model"))?;
    let c3 = lambda.norm();
    if c3 < 2.0 {
        return Err(Error::invalid(format!(
            "multiplier magnitude {c3:.6} is below 2; the annulus spacing takes one \
             multiplier step per tower level and needs that much expansion"
        )));
    }
    if !(big_r > 0.0) || !big_r.is_finite() {
        return Err(Error::invalid(format!("threshold must be positive, got {big_r}")));
    }
    if !(mu > 1.0) || !mu.is_finite() {
        return Err(Error::invalid(format!("the annulus exponent must exceed 1, got {mu}")));
    }

    let rm = rm_sequence(l, c3, big_r, levels + 1, &opts.tower)?;
    let ln_r = big_r.ln();
    let first_gain = rm.ln_values.first().map(|v| v - c3.ln() - ln_r);
    match first_gain {
        Some(gain) if gain > ln_slack(ln_r) => {}
        Some(gain) => {
            return Err(Error::ThresholdTooSmall {
                r: big_r,
                max_mod: (gain + ln_r).exp(),
            })
        }
        None => return Err(Error::LogOverflow),
    }
    if levels == 0 {
        return Ok(WebCertificate {
            threshold_r: big_r,
            mu,
            levels: Vec::new(),
            verdict: Verdict::Pass,
            offending_level: None,
            sample_policy: PolicyEcho {
                options: *opts,
                curve_depth_used: 0,
                boundary_vertices: 0,
                caveat: RESOLUTION_CAVEAT,
            },
        });
    }
    if rm.truncated || rm.ln_values.len() < (levels + 1) as usize {
        return Err(Error::LogOverflow);
    }

    let degree = l.map().degree();
    let dilatation = l.map().declared_k().unwrap_or(1.0);
    let threshold = mu_threshold(degree, dilatation, c3)?;
    if mu <= threshold.mu_min {
        return Err(Error::invalid(format!(
            "mu = {mu} does not exceed the admissible minimum {:.6} for degree {degree}",
            threshold.mu_min
        )));
    }

    let coeffs = l
        .map()
        .polynomial_coeffs()
        .ok_or_else(|| Error::invalid("web certificates cover polynomial models"))?;
    let quadratic_like = coeffs.len() == 3
        && coeffs[1].norm() <= 1e-12
        && (coeffs[2] - 1.0).norm() <= 1e-12;
    if !quadratic_like {
        return Err(Error::invalid("web certificates cover maps of the form z^2 + c"));
    }
    let c = coeffs[0];
    let x0 = l.fixed_point();

    // enclosing curve, deepened until it sits well inside the chart
    let mut depth = opts.curve_depth;
    let gamma = loop {
        let g = julia_enclosing_curve(c, depth, x0)?;
        if g.diameter() <= 0.35 * l.radius() || depth >= opts.curve_depth + 4 {
            break g;
        }
        depth += 1;
    };
    let gamma_vs = complex_vertices(&gamma)?;
    let gamma_delta = pull_back_curve(l, &gamma)?;
    let jordan = is_simple_polyline(&gamma_delta)?;

    let ln_min = gamma_delta.min_norm().ln();
    let ln_max = gamma_delta.max_norm().ln();
    let ln_lam = c3.ln();
    let x0c = x0.to_complex()?;

    struct Built {
        scaled: ScaledCurve,
        p2: u32,
    }
    let mut built: Vec<Built> = Vec::with_capacity(levels as usize + 1);
    for m in 1..=(levels + 1) {
        let ln_r_m = rm.ln_values[(m - 1) as usize];
        let (_, p2) = bracket_from_lns(ln_min, ln_max, ln_lam, ln_r_m, mu)?;
        let scaled = scale_curve(&gamma_delta, lambda, p2)?;
        built.push(Built { scaled, p2 });
    }

    let mut reports = Vec::with_capacity(levels as usize);
    let mut offending = None;
    for m in 1..=levels {
        let cur = &built[(m - 1) as usize];
        let next = &built[m as usize];
        let ln_r_m = rm.ln_values[(m - 1) as usize];
        // the tower height itself, with the multiplier powers stripped
        let ln_ball = ln_r_m - m as f64 * ln_lam;
        let ball_containment =
            ball_inside(cur.scaled.stored(), cur.scaled.ln_rescale(), ln_ball, opts.ball_samples)?;
        let ln_min_image = min_image_ln(l, &cur.scaled)?;
        let ln_next_max = next.scaled.ln_max_norm();
        let separation = ln_min_image > ln_next_max + ln_slack(ln_next_max);
        let image_winding_nonzero =
            image_winding(c, x0c, &gamma_vs, &next.scaled, cur.p2, opts.image_samples)?;
        let record = WebLevel {
            m,
            ln_r_m,
            r_m: ln_r_m.exp(),
            boundary: cur.scaled.stored().clone(),
            ln_boundary_rescale: cur.scaled.ln_rescale(),
            p_exponent: cur.p2,
            ln_min_image_modulus: ln_min_image,
            ln_next_max_norm: ln_next_max,
            ball_containment,
            separation,
            image_winding_nonzero,
            jordan,
        };
        if !record.passed() && offending.is_none() {
            offending = Some(m);
        }
        reports.push(record);
    }

    Ok(WebCertificate {
        threshold_r: big_r,
        mu,
        levels: reports,
        verdict: if offending.is_none() { Verdict::Pass } else { Verdict::Fail },
        offending_level: offending,
        sample_policy: PolicyEcho {
            options: *opts,
            curve_depth_used: depth,
            boundary_vertices: gamma_delta.vertex_count(),
            caveat: RESOLUTION_CAVEAT,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn circle(center: Complex64, radius: f64, n: usize) -> ClosedCurve {
        circle_polygon(center, radius, n).unwrap()
    }

    fn quad(c: f64) -> MapSpec {
        MapSpec::quadratic(Complex64::new(c, 0.0))
    }

    fn flagship_model() -> LinearizerModel {
        LinearizerModel::planar(
            quad(-6.0),
            Complex64::new(3.0, 0.0),
            Complex64::new(6.0, 0.0),
            None,
        )
        .unwrap()
    }

    #[test]
    fn winding_counts_circle_oracles() {
        let unit = circle(Complex64::new(0.0, 0.0), 1.0, 64);
        assert_eq!(winding_number(&unit, Point::planar(0.0, 0.0)).unwrap(), 1);
        assert_eq!(winding_number(&unit, Point::planar(0.3, -0.4)).unwrap(), 1);
        assert_eq!(winding_number(&unit, Point::planar(2.0, 0.0)).unwrap(), 0);

        let mut cw = unit.vertices().to_vec();
        cw.reverse();
        let cw = ClosedCurve::new(cw).unwrap();
        assert_eq!(winding_number(&cw, Point::planar(0.0, 0.0)).unwrap(), -1);
    }

    #[test]
    fn winding_counts_retraced_loop_twice() {
        let mut vs = Vec::new();
        for pass in 0..2 {
            let _ = pass;
            for k in 0..32 {
                let theta = std::f64::consts::TAU * k as f64 / 32.0;
                vs.push(Point::from_complex(Complex64::from_polar(1.0, theta)));
            }
        }
        let doubled = ClosedCurve::new(vs).unwrap();
        assert_eq!(winding_number(&doubled, Point::planar(0.0, 0.0)).unwrap(), 2);
    }

    #[test]
    fn winding_refuses_points_on_the_curve() {
        let unit = circle(Complex64::new(0.0, 0.0), 1.0, 64);
        assert!(winding_number(&unit, Point::planar(1.0, 0.0)).is_err());
    }

    #[test]
    fn csv_has_header_and_one_row_per_vertex() {
        let unit = circle(Complex64::new(0.0, 0.0), 1.0, 16);
        let csv = curve_csv(&unit).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 17);
        assert_eq!(lines[0], "x,y");
        assert!(lines[1].starts_with("1,"));
    }

    #[test]
    fn far_point_is_member_without_offset() {
        let report =
            fast_escape_test(&quad(-6.0), Point::planar(10.0, 0.0), 4.0, 20, 3).unwrap();
        assert!(report.member_a_r);
        assert!(report.member_a);
        assert_eq!(report.offset_p, Some(0));
        assert!(!report.undecided);
        // max of |z^2 - 6| over |z| = 4 is 22, at z = 4i
        assert!((report.ln_tower[0] - 22f64.ln()).abs() < 1e-4);
        assert!((report.ln_orbit_norms[1] - 94f64.ln()).abs() < 1e-12);
        assert_eq!(report.ln_orbit_norms.len(), 21);
        assert_eq!(report.ln_tower.len(), 20);
    }

    #[test]
    fn origin_rejoins_with_offset_one() {
        let report = fast_escape_test(&quad(-6.0), Point::planar(0.0, 0.0), 4.0, 20, 3).unwrap();
        assert!(!report.member_a_r);
        assert!(report.member_a);
        assert_eq!(report.offset_p, Some(1));
        // the first orbit step, |f(0)| = 6, sits below the tower's 22
        assert!(report.ln_orbit_norms[1] < report.ln_tower[0]);
        // shifted by one the orbit clears it: 30 over 22
        assert!(report.ln_orbit_norms[2] > report.ln_tower[0]);
    }

    #[test]
    fn exact_equality_with_the_tower_is_membership() {
        let map = MapSpec::planar_linear(Complex64::new(2.0, 0.0)).unwrap();
        let report = fast_escape_test(&map, Point::planar(1.0, 0.0), 1.0, 20, 0).unwrap();
        assert!(report.member_a_r);
        assert_eq!(report.offset_p, Some(0));
    }

    #[test]
    fn contracting_map_has_no_tower() {
        let map = MapSpec::planar_linear(Complex64::new(0.5, 0.0)).unwrap();
        let err = fast_escape_test(&map, Point::planar(1.0, 0.0), 1.0, 5, 0).unwrap_err();
        assert!(matches!(err, Error::ThresholdTooSmall { .. }));
    }

    #[test]
    fn short_horizon_leaves_slow_points_undecided() {
        let report = fast_escape_test(&quad(-6.0), Point::planar(0.0, 0.0), 4.0, 1, 2).unwrap();
        assert!(!report.member_a);
        assert!(report.undecided);
    }

    #[test]
    fn depth_zero_curve_is_the_escape_circle() {
        let curve = julia_enclosing_curve(Complex64::new(-6.0, 0.0), 0, Point::planar(3.0, 0.0))
            .unwrap();
        assert_eq!(curve.vertex_count(), BASE_VERTICES);
        for v in curve.vertices() {
            assert!((v.norm() - 3.001).abs() < 1e-9);
        }
        assert_eq!(winding_number(&curve, Point::planar(3.0, 0.0)).unwrap(), 1);
    }

    #[test]
    fn connected_regime_parameters_are_rejected() {
        let x0 = Point::planar(3.0, 0.0);
        assert!(matches!(
            julia_enclosing_curve(Complex64::new(0.0, 0.0), 0, x0),
            Err(Error::OutsideRegion(_))
        ));
        assert!(matches!(
            julia_enclosing_curve(Complex64::new(-1.0, 0.0), 0, x0),
            Err(Error::OutsideRegion(_))
        ));
    }

    #[test]
    fn non_fixed_base_points_are_rejected() {
        let err = julia_enclosing_curve(Complex64::new(-6.0, 0.0), 0, Point::planar(2.0, 0.0))
            .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn depth_three_curve_encloses_the_fixed_point_tightly() {
        let curve = julia_enclosing_curve(Complex64::new(-6.0, 0.0), 3, Point::planar(3.0, 0.0))
            .unwrap();
        assert_eq!(winding_number(&curve, Point::planar(3.0, 0.0)).unwrap(), 1);
        let diam = curve.diameter();
        assert!(diam < 0.5, "diameter {diam} too large for depth 3");
        assert!(diam > 0.005, "diameter {diam} suspiciously small");
        for v in curve.vertices() {
            assert!(v.norm() < 3.3);
        }
    }

    #[test]
    fn pull_back_inverts_the_forward_curve() {
        let l = flagship_model();
        let original: Vec<Complex64> = (0..48)
            .map(|k| Complex64::from_polar(1e-3, std::f64::consts::TAU * k as f64 / 48.0))
            .collect();
        let forward: Vec<Point> = original
            .iter()
            .map(|z| Point::from_complex(l.linearize_c(*z).unwrap()))
            .collect();
        let gamma = ClosedCurve::new(forward).unwrap();
        let pulled = pull_back_curve(&l, &gamma).unwrap();
        for (z, v) in original.iter().zip(pulled.vertices()) {
            assert!((v.to_complex().unwrap() - z).norm() < 1e-8);
        }
    }

    #[test]
    fn pull_back_matches_the_exponential_linearizer() {
        // z^2 at the fixed point 1 linearizes as L(z) = e^z exactly
        let l = LinearizerModel::planar(
            MapSpec::quadratic(Complex64::new(0.0, 0.0)),
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            None,
        )
        .unwrap();
        let original: Vec<Complex64> = (0..48)
            .map(|k| Complex64::from_polar(0.3, std::f64::consts::TAU * k as f64 / 48.0))
            .collect();
        let gamma =
            ClosedCurve::new(original.iter().map(|z| Point::from_complex(z.exp())).collect())
                .unwrap();
        let pulled = pull_back_curve(&l, &gamma).unwrap();
        for (z, v) in original.iter().zip(pulled.vertices()) {
            assert!((v.to_complex().unwrap() - z).norm() < 1e-6);
        }
    }

    #[test]
    fn pull_back_outside_the_chart_fails() {
        let l = flagship_model();
        let gamma = circle(Complex64::new(3.0, 0.0), 4.0, 32);
        assert!(pull_back_curve(&l, &gamma).is_err());
    }

    #[test]
    fn scaling_by_the_zeroth_power_is_the_identity() {
        let curve = circle(Complex64::new(0.3, -0.1), 1.25, 16);
        let scaled = scale_curve(&curve, Complex64::new(2.0, 1.0), 0).unwrap();
        assert!(!scaled.is_log_scaled());
        for (a, b) in curve.vertices().iter().zip(scaled.stored().vertices()) {
            assert_eq!(a.coords(), b.coords());
        }
    }

    #[test]
    fn plain_scaling_rotates_and_stretches() {
        let curve = circle(Complex64::new(0.0, 0.0), 1.0, 32);
        // (2i)^2 = -4: stretch by 4, rotate by pi
        let scaled = scale_curve(&curve, Complex64::new(0.0, 2.0), 2).unwrap();
        assert!(!scaled.is_log_scaled());
        for v in scaled.stored().vertices() {
            assert!((v.norm() - 4.0).abs() < 1e-9);
        }
        let first = scaled.stored().vertices()[0].to_complex().unwrap();
        assert!((first - Complex64::new(-4.0, 0.0)).norm() < 1e-9);
        let diam_ratio = scaled.stored().diameter() / curve.diameter();
        assert!((diam_ratio - 4.0).abs() < 1e-9);
    }

    #[test]
    fn huge_powers_defer_the_magnitude() {
        let curve = circle(Complex64::new(0.0, 0.0), 1.0, 16);
        let scaled = scale_curve(&curve, Complex64::new(10.0, 0.0), 200).unwrap();
        assert!(scaled.is_log_scaled());
        assert!((scaled.ln_rescale() - 200.0 * 10f64.ln()).abs() < 1e-9);
        assert!((scaled.ln_max_norm() - 200.0 * 10f64.ln()).abs() < 1e-6);
        assert!((scaled.stored().max_norm() - 1.0).abs() < 1e-12);
        assert!(matches!(scaled.into_plain(), Err(Error::LogOverflow)));
    }

    #[test]
    fn bracket_on_the_unit_circle_snaps_boundaries() {
        let unit = circle(Complex64::new(0.0, 0.0), 1.0, 16);
        let (p1, p2) =
            bracket_exponents(&unit, Complex64::new(2.0, 0.0), 4.0, 3.0).unwrap();
        // powers 2 and 6 land exactly on the annulus edges and are excluded
        assert_eq!((p1, p2), (3, 5));
    }

    #[test]
    fn curves_already_inside_the_ring_start_at_zero() {
        let big = circle(Complex64::new(0.0, 0.0), 10.0, 16);
        let (p1, p2) = bracket_exponents(&big, Complex64::new(2.0, 0.0), 4.0, 3.0).unwrap();
        assert_eq!((p1, p2), (0, 2));
    }

    #[test]
    fn thin_rings_are_rejected_with_a_cure() {
        let unit = circle(Complex64::new(0.0, 0.0), 1.0, 16);
        let lambda = Complex64::new(2.0, 0.0);
        let err = bracket_exponents(&unit, lambda, 1.5, 1.01).unwrap_err();
        let Error::RingTooThin { min_r } = err else {
            panic!("expected the thin-ring rejection, got {err:?}");
        };
        assert!(min_r > 1e29);
        // the suggested radius is actually wide enough
        assert!(bracket_exponents(&unit, lambda, min_r * 10.0, 1.01).is_ok());
    }

    #[test]
    fn certificate_with_no_levels_is_a_vacuous_pass() {
        let cert = certify_web(&flagship_model(), 20.0, 2.72, 0).unwrap();
        assert!(cert.passed());
        assert!(cert.levels.is_empty());
        assert_eq!(cert.offending_level, None);
    }

    #[test]
    fn linear_models_fail_the_growth_precondition() {
        let l = LinearizerModel::planar(
            MapSpec::planar_linear(Complex64::new(2.0, 0.0)).unwrap(),
            Complex64::new(0.0, 0.0),
            Complex64::new(2.0, 0.0),
            None,
        )
        .unwrap();
        let err = certify_web(&l, 5.0, 3.0, 2).unwrap_err();
        assert!(matches!(err, Error::ThresholdTooSmall { .. }));
    }

    #[test]
    fn small_multipliers_are_rejected() {
        // fixed point 0.6 of z^2 + 0.24 has multiplier 1.2
        let l = LinearizerModel::planar(
            MapSpec::quadratic(Complex64::new(0.24, 0.0)),
            Complex64::new(0.6, 0.0),
            Complex64::new(1.2, 0.0),
            None,
        )
        .unwrap();
        let err = certify_web(&l, 4.0, 3.0, 1).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn inadmissible_exponents_are_rejected() {
        // the admissible minimum for degree 2 with spacing 6 is log2(6)
        let err = certify_web(&flagship_model(), 20.0, 2.0, 1).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn simple_polyline_check_sees_a_figure_eight() {
        let unit = circle(Complex64::new(0.0, 0.0), 1.0, 64);
        assert!(is_simple_polyline(&unit).unwrap());
        let eight = ClosedCurve::new(vec![
            Point::planar(-1.0, -1.0),
            Point::planar(1.0, 1.0),
            Point::planar(1.0, -1.0),
            Point::planar(-1.0, 1.0),
        ])
        .unwrap();
        assert!(!is_simple_polyline(&eight).unwrap());
    }

    #[test]
    fn backward_chain_lands_by_the_fixed_point() {
        let c = Complex64::new(-6.0, 0.0);
        let x0 = Complex64::new(3.0, 0.0);
        // a plain start two squarings above the escape radius
        let start = LogComplex::from_complex(Complex64::new(100.0, 40.0)).unwrap();
        let end = backward_toward(c, x0, start, 12).unwrap();
        assert!((end - x0).norm() < 1e-3);
        // a log-scale start halves its way down first
        let huge = LogComplex::new(5000.0, 1.0);
        let end = backward_toward(c, x0, huge, 60).unwrap();
        assert!((end - x0).norm() < 1e-6);
        // too few steps to leave log scale is a refusal, not a value
        assert!(backward_toward(c, x0, huge, 2).is_none());
    }
}
