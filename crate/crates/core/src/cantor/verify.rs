//! Measured certificates for defining-sequence stages.
//!
//! Every bound reported here is certified in the conservative direction:
//! sampled extrema carry an explicit Lipschitz penalty for the sample
//! spacing, exact closed forms are used wherever one exists (point to core
//! circle, ball to ball), and a check that cannot be trusted is reported as
//! its own failure kind rather than silently passed. Failed checks are data
//! in the report, not errors; errors are reserved for malformed inputs.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use super::{DefiningSequenceStage, PieceShape, TorusFrame};
use crate::error::{Error, Result};
use crate::geom::vec3::{self, V3};
use crate::geom::{ClosedCurve, Dim, Point};

/// Core-circle samples per torus in distance certificates.
pub(crate) const CORE_SAMPLES: usize = 512;
/// Gauss quadrature segments per curve inside `verify_stage`.
pub(crate) const VERIFY_QUADRATURE: usize = 192;
/// A linking integral farther than this from its nearest integer is
/// reported as a residual failure.
pub const LINK_RESIDUAL_GATE: f64 = 0.05;
/// Curves whose certified gap falls at or below this are refused as
/// ill-conditioned for the linking quadrature.
const GAP_FLOOR: f64 = 1e-6;

/// Boundary sample grid for clopen-neighbourhood separation checks.
const SURFACE_GRID_U: usize = 96;
const SURFACE_GRID_V: usize = 24;

fn half_arc(t: &TorusFrame, samples: usize) -> f64 {
    PI * t.major / samples as f64
}

/// Lower bound on the distance from `a`'s solid to `b`'s, sampling `a`'s
/// core and charging half an arc step for the gaps between samples.
fn directed_torus_gap(a: &TorusFrame, b: &TorusFrame) -> f64 {
    let mut dmin = f64::INFINITY;
    for k in 0..CORE_SAMPLES {
        let p = a.core_point(TAU * k as f64 / CORE_SAMPLES as f64);
        dmin = dmin.min(b.tube_coordinate(p));
    }
    dmin - half_arc(a, CORE_SAMPLES) - a.minor - b.minor
}

/// Certified lower bound on the distance between two solids. Pairs whose
/// bounding spheres already clear `near_cutoff` keep the cheap bound; close
/// pairs get the exact or sampled bound. May be negative, which certifies
/// nothing beyond "not provably disjoint at this sampling".
pub(crate) fn clearance_bound(a: &PieceShape, b: &PieceShape, near_cutoff: f64) -> f64 {
    let cheap = vec3::norm(vec3::sub(a.bounding_center(), b.bounding_center()))
        - a.bounding_radius()
        - b.bounding_radius();
    if cheap >= near_cutoff {
        return cheap;
    }
    match (a, b) {
        (PieceShape::Ball(x), PieceShape::Ball(y)) => {
            vec3::norm(vec3::sub(x.center, y.center)) - x.radius - y.radius
        }
        (PieceShape::Torus(t), PieceShape::Ball(x))
        | (PieceShape::Ball(x), PieceShape::Torus(t)) => {
            t.tube_coordinate(x.center) - t.minor - x.radius
        }
        (PieceShape::Torus(s), PieceShape::Torus(t)) => {
            cheap.max(directed_torus_gap(s, t)).max(directed_torus_gap(t, s))
        }
    }
}

/// Certified lower bound on how deep `child`'s solid sits inside `parent`'s;
/// non-positive means containment is not established.
pub(crate) fn containment_margin(child: &PieceShape, parent: &PieceShape) -> f64 {
    match (child, parent) {
        (PieceShape::Ball(c), PieceShape::Ball(p)) => {
            p.radius - vec3::norm(vec3::sub(c.center, p.center)) - c.radius
        }
        (PieceShape::Ball(c), PieceShape::Torus(p)) => {
            p.minor - p.tube_coordinate(c.center) - c.radius
        }
        (PieceShape::Torus(c), PieceShape::Ball(p)) => {
            // Farthest core point from the ball center, in closed form.
            let w = vec3::sub(p.center, c.center);
            let a1 = vec3::dot(w, c.orientation.col(0));
            let a2 = vec3::dot(w, c.orientation.col(1));
            let az = vec3::dot(w, c.orientation.col(2));
            let far = (a1.hypot(a2) + c.major).hypot(az);
            p.radius - far - c.minor
        }
        (PieceShape::Torus(c), PieceShape::Torus(p)) => {
            let mut dmax: f64 = 0.0;
            for k in 0..CORE_SAMPLES {
                let q = c.core_point(TAU * k as f64 / CORE_SAMPLES as f64);
                dmax = dmax.max(p.tube_coordinate(q));
            }
            p.minor - dmax - half_arc(c, CORE_SAMPLES) - c.minor
        }
    }
}

/// One Gauss linking integral between a pair of closed curves.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LinkingReport {
    /// Indices of the two pieces (or 0, 1 for a standalone pair).
    pub pair: (usize, usize),
    /// The quadrature value of the linking integral.
    pub gauss_value: f64,
    /// Nearest integer.
    pub rounded: i64,
    /// Distance from the quadrature value to that integer.
    pub residual: f64,
}

/// One failed check inside a stage report.
#[derive(Debug, Clone, Serialize)]
pub enum StageFailure {
    /// Two pieces could not be certified disjoint.
    Disjointness { a: usize, b: usize, clearance: f64 },
    /// A piece could not be certified inside its parent's interior.
    Containment { piece: usize, margin: f64 },
    /// A linking integral rounded to the wrong magnitude.
    LinkingValue { a: usize, b: usize, expected_magnitude: i64, rounded: i64 },
    /// A linking integral sat too far from every integer to trust.
    LinkingResidual { a: usize, b: usize, residual: f64 },
    /// Core curves too close for the linking quadrature.
    LinkingIllConditioned { a: usize, b: usize },
    /// A piece at least as large as its parent.
    DiameterOrder { piece: usize },
}

/// Everything `verify_stage` measured, failures included.
#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub depth: usize,
    pub piece_count: usize,
    /// Core samples per torus behind the distance bounds.
    pub core_samples: usize,
    /// Segments per curve in the linking integrals.
    pub quadrature: usize,
    /// Largest Lipschitz penalty charged for sample spacing.
    pub sampling_error: f64,
    /// Smallest certified gap between distinct pieces, if there are pairs.
    pub min_pair_clearance: Option<f64>,
    /// Smallest certified depth inside the parent, if pieces have parents.
    pub min_containment_margin: Option<f64>,
    /// All sibling-pair linking integrals, adjacent and not.
    pub linking: Vec<LinkingReport>,
    pub failures: Vec<StageFailure>,
}

impl StageReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn resample_closed(curve: &ClosedCurve, segments: usize) -> Result<Vec<V3>> {
    let verts: Vec<V3> = curve.vertices().iter().map(|p| p.raw()).collect();
    let n = verts.len();
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for i in 0..n {
        let step = vec3::norm(vec3::sub(verts[(i + 1) % n], verts[i]));
        cum.push(cum[i] + step);
    }
    let total = cum[n];
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::invalid("curve must have positive finite length"));
    }
    let mut out = Vec::with_capacity(segments);
    let mut seg = 0usize;
    for k in 0..segments {
        let target = total * k as f64 / segments as f64;
        while seg + 1 < n && cum[seg + 1] <= target {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let t = if span > 0.0 { (target - cum[seg]) / span } else { 0.0 };
        let a = verts[seg];
        let b = verts[(seg + 1) % n];
        out.push(vec3::add(a, vec3::scale(vec3::sub(b, a), t)));
    }
    Ok(out)
}

fn max_edge(poly: &[V3]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| vec3::norm(vec3::sub(poly[(i + 1) % n], poly[i])))
        .fold(0.0, f64::max)
}

fn gauss_integral(a: &[V3], b: &[V3]) -> f64 {
    let na = a.len();
    let nb = b.len();
    let mut mids_b = Vec::with_capacity(nb);
    let mut dirs_b = Vec::with_capacity(nb);
    for j in 0..nb {
        let q0 = b[j];
        let q1 = b[(j + 1) % nb];
        mids_b.push(vec3::scale(vec3::add(q0, q1), 0.5));
        dirs_b.push(vec3::sub(q1, q0));
    }
    let mut sum = 0.0;
    for i in 0..na {
        let p0 = a[i];
        let p1 = a[(i + 1) % na];
        let m = vec3::scale(vec3::add(p0, p1), 0.5);
        let d = vec3::sub(p1, p0);
        for j in 0..nb {
            let r = vec3::sub(m, mids_b[j]);
            let n2 = vec3::dot(r, r);
            sum += vec3::dot(r, vec3::cross(d, dirs_b[j])) / (n2 * n2.sqrt());
        }
    }
    sum / (4.0 * PI)
}

/// Gauss linking integral of two closed spatial curves, each resampled to
/// `quadrature` equal-arclength segments and summed with the midpoint rule.
/// Curves whose certified mutual gap is at or below 1e-6 are refused: the
/// integrand is near-singular there and the rounded value means nothing.
pub fn linking_number(a: &ClosedCurve, b: &ClosedCurve, quadrature: usize) -> Result<LinkingReport> {
    if a.dim() != Dim::Three || b.dim() != Dim::Three {
        return Err(Error::invalid("linking numbers are defined for spatial curves"));
    }
    if !(8..=65_536).contains(&quadrature) {
        return Err(Error::invalid(format!(
            "linking quadrature {quadrature} outside the supported 8..=65536"
        )));
    }
    let pa = resample_closed(a, quadrature)?;
    let pb = resample_closed(b, quadrature)?;
    let mut vertex_gap = f64::INFINITY;
    for p in &pa {
        for q in &pb {
            vertex_gap = vertex_gap.min(vec3::norm(vec3::sub(*p, *q)));
        }
    }
    let gap = vertex_gap - 0.5 * (max_edge(&pa) + max_edge(&pb));
    if gap <= GAP_FLOOR {
        return Err(Error::Infeasible(format!(
            "curves pass within {gap:.3e} of each other; the linking integrand is ill-conditioned"
        )));
    }
    let gauss_value = gauss_integral(&pa, &pb);
    let rounded = gauss_value.round() as i64;
    Ok(LinkingReport {
        pair: (0, 1),
        gauss_value,
        rounded,
        residual: (gauss_value - rounded as f64).abs(),
    })
}

/// Measures every stage invariant and returns the evidence: pairwise
/// disjointness with certified clearances, containment in parent interiors,
/// the diameter order, and per-sibling-group Gauss linking (consecutive
/// pieces should link once, the rest not at all). Pairs are checked in
/// parallel; every reported number is a deterministic function of the stage.
pub fn verify_stage(stage: &DefiningSequenceStage) -> StageReport {
    let n = stage.pieces.len();
    let shapes: Vec<&PieceShape> = stage.pieces.iter().map(|p| &p.shape).collect();
    let near_cutoff = stage.max_piece_diameter();
    let mut failures = Vec::new();

    let sampling_error = shapes
        .iter()
        .filter_map(|s| match s {
            PieceShape::Torus(t) => Some(half_arc(t, CORE_SAMPLES)),
            PieceShape::Ball(_) => None,
        })
        .fold(0.0, f64::max);

    // Disjointness over all unordered pairs.
    let mut pairs = Vec::with_capacity(n.saturating_sub(1) * n / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
        }
    }
    let clearances: Vec<(usize, usize, f64)> = pairs
        .par_iter()
        .map(|&(i, j)| (i, j, clearance_bound(shapes[i], shapes[j], near_cutoff)))
        .collect();
    let min_pair_clearance = clearances
        .iter()
        .map(|&(_, _, c)| c)
        .fold(f64::INFINITY, f64::min);
    for &(a, b, clearance) in &clearances {
        if clearance <= 0.0 {
            failures.push(StageFailure::Disjointness { a, b, clearance });
        }
    }

    // Containment and diameter order against the recorded parent shapes.
    let margins: Vec<(usize, f64, bool)> = stage
        .pieces
        .par_iter()
        .enumerate()
        .filter_map(|(i, piece)| {
            let pi = piece.parent_index?;
            let parent = stage.parent_shapes.get(pi)?;
            let margin = containment_margin(&piece.shape, parent);
            let diameter_ok = piece.shape.diameter() < parent.diameter();
            Some((i, margin, diameter_ok))
        })
        .collect();
    let min_containment_margin = margins
        .iter()
        .map(|&(_, m, _)| m)
        .fold(f64::INFINITY, f64::min);
    for &(piece, margin, diameter_ok) in &margins {
        if margin <= 0.0 {
            failures.push(StageFailure::Containment { piece, margin });
        }
        if !diameter_ok {
            failures.push(StageFailure::DiameterOrder { piece });
        }
    }

    // Linking inside each sibling group, in ring order.
    let mut groups: BTreeMap<Option<usize>, Vec<usize>> = BTreeMap::new();
    for (i, piece) in stage.pieces.iter().enumerate() {
        groups.entry(piece.parent_index).or_default().push(i);
    }
    let curves: Vec<Option<ClosedCurve>> = shapes
        .iter()
        .map(|s| match s {
            PieceShape::Torus(t) => t.core_polyline(VERIFY_QUADRATURE).ok(),
            PieceShape::Ball(_) => None,
        })
        .collect();
    let mut link_pairs: Vec<(usize, usize, i64)> = Vec::new();
    for members in groups.values() {
        let g = members.len();
        if g < 2 {
            continue;
        }
        for gi in 0..g {
            for gj in (gi + 1)..g {
                let (a, b) = (members[gi], members[gj]);
                if curves[a].is_none() || curves[b].is_none() {
                    continue;
                }
                let adjacent = gj - gi == 1 || (gi == 0 && gj == g - 1);
                link_pairs.push((a, b, if adjacent { 1 } else { 0 }));
            }
        }
    }
    let link_results: Vec<(usize, usize, i64, Result<LinkingReport>)> = link_pairs
        .par_iter()
        .map(|&(a, b, expected)| {
            let report = linking_number(
                curves[a].as_ref().unwrap(),
                curves[b].as_ref().unwrap(),
                VERIFY_QUADRATURE,
            )
            .map(|mut r| {
                r.pair = (a, b);
                r
            });
            (a, b, expected, report)
        })
        .collect();
    let mut linking = Vec::with_capacity(link_results.len());
    for (a, b, expected_magnitude, result) in link_results {
        match result {
            Err(_) => failures.push(StageFailure::LinkingIllConditioned { a, b }),
            Ok(report) => {
                if report.residual >= LINK_RESIDUAL_GATE {
                    failures.push(StageFailure::LinkingResidual { a, b, residual: report.residual });
                } else if report.rounded.abs() != expected_magnitude {
                    failures.push(StageFailure::LinkingValue {
                        a,
                        b,
                        expected_magnitude,
                        rounded: report.rounded,
                    });
                }
                linking.push(report);
            }
        }
    }

    StageReport {
        depth: stage.depth,
        piece_count: n,
        core_samples: CORE_SAMPLES,
        quadrature: VERIFY_QUADRATURE,
        sampling_error,
        min_pair_clearance: (!clearances.is_empty()).then_some(min_pair_clearance),
        min_containment_margin: (!margins.is_empty()).then_some(min_containment_margin),
        linking,
        failures,
    }
}

/// A clopen piece of the limit set: one stage piece whose intersection with
/// the set is both open and closed in it, with a certified gap between the
/// piece boundary and a deeper stage approximation.
#[derive(Debug, Clone, Serialize)]
pub struct ClopenNeighborhood {
    pub depth: usize,
    pub piece_index: usize,
    pub word: String,
    pub diameter: f64,
    /// Certified distance from the piece boundary to the approximation stage.
    pub boundary_clearance: f64,
    /// Depth of the stage the boundary was checked against.
    pub approximation_depth: usize,
}

fn boundary_samples(shape: &PieceShape) -> (Vec<V3>, f64) {
    match shape {
        PieceShape::Torus(t) => {
            let mut pts = Vec::with_capacity(SURFACE_GRID_U * SURFACE_GRID_V);
            for i in 0..SURFACE_GRID_U {
                let u = TAU * i as f64 / SURFACE_GRID_U as f64;
                for j in 0..SURFACE_GRID_V {
                    let v = TAU * j as f64 / SURFACE_GRID_V as f64;
                    pts.push(t.surface_point(u, v));
                }
            }
            let du = TAU * (t.major + t.minor) / SURFACE_GRID_U as f64;
            let dv = TAU * t.minor / SURFACE_GRID_V as f64;
            (pts, 0.5 * du.hypot(dv))
        }
        PieceShape::Ball(b) => {
            let slices = 2 * SURFACE_GRID_V;
            let stacks = SURFACE_GRID_V;
            let mut pts = Vec::with_capacity(slices * (stacks - 1) + 2);
            pts.push(vec3::add(b.center, [0.0, 0.0, b.radius]));
            pts.push(vec3::add(b.center, [0.0, 0.0, -b.radius]));
            for j in 1..stacks {
                let phi = PI * j as f64 / stacks as f64;
                let (sp, cp) = phi.sin_cos();
                for i in 0..slices {
                    let th = TAU * i as f64 / slices as f64;
                    let (st, ct) = th.sin_cos();
                    pts.push(vec3::add(
                        b.center,
                        [b.radius * sp * ct, b.radius * sp * st, b.radius * cp],
                    ));
                }
            }
            let du = TAU * b.radius / slices as f64;
            let dv = PI * b.radius / stacks as f64;
            (pts, 0.5 * du.hypot(dv))
        }
    }
}

/// The shallowest stage piece containing `x` with diameter at most `delta`,
/// certified clopen by measuring the gap between its boundary and a deeper
/// stage of the sequence (two deeper when available). Errors: `x` escaping
/// the sequence, `delta` finer than the deepest stage provides, or a
/// boundary gap within sampling error of zero.
pub fn clopen_neighborhood(
    stages: &[DefiningSequenceStage],
    x: Point,
    delta: f64,
) -> Result<ClopenNeighborhood> {
    if stages.is_empty() {
        return Err(Error::invalid("clopen neighbourhoods need at least one stage"));
    }
    for w in stages.windows(2) {
        if w[1].depth != w[0].depth + 1 {
            return Err(Error::invalid("stages must be consecutive depths"));
        }
    }
    if x.dim() != Dim::Three {
        return Err(Error::DimensionMismatch { map_dim: 3, point_dim: x.dim().as_u8() });
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("neighbourhood diameter {delta} must be positive")));
    }
    let xv = x.raw();
    let deepest = stages.last().unwrap().depth;

    // Track x through every stage; a point of the limit set never escapes.
    let mut containing = Vec::with_capacity(stages.len());
    for stage in stages {
        match stage.pieces.iter().position(|p| p.shape.solid_distance(xv) == 0.0) {
            Some(idx) => containing.push(idx),
            None => {
                return Err(Error::OutsideRegion(format!(
                    "point escapes the defining sequence at depth {}",
                    stage.depth
                )))
            }
        }
    }

    let chosen = match (0..stages.len())
        .find(|&k| stages[k].pieces[containing[k]].shape.diameter() <= delta)
    {
        Some(k) => k,
        None => return Err(Error::NeedDeeperStage { requested: delta, deepest }),
    };
    if chosen + 1 >= stages.len() {
        // No deeper stage left to certify the boundary gap against.
        return Err(Error::NeedDeeperStage { requested: delta, deepest });
    }
    let approx = (chosen + 2).min(stages.len() - 1);

    let piece = &stages[chosen].pieces[containing[chosen]];
    let (samples, penalty) = boundary_samples(&piece.shape);
    let approx_stage = &stages[approx];
    let min_gap = samples
        .par_iter()
        .map(|s| {
            approx_stage
                .pieces
                .iter()
                .map(|p| p.shape.solid_distance(*s))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    let boundary_clearance = min_gap - penalty;
    if boundary_clearance <= 0.0 {
        return Err(Error::Infeasible(format!(
            "piece boundary approaches the depth-{} approximation within sampling error \
             (certified clearance {boundary_clearance:.3e})",
            approx_stage.depth
        )));
    }

    Ok(ClopenNeighborhood {
        depth: stages[chosen].depth,
        piece_index: containing[chosen],
        word: piece.word.clone(),
        diameter: piece.shape.diameter(),
        boundary_clearance,
        approximation_depth: approx_stage.depth,
    })
}
