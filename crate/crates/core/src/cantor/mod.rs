//! Defining sequences for Cantor sets in 3-space.
//!
//! A stage is a finite union of placed solids (tori or balls); the next stage
//! is the image of the current one under a contracting iterated function
//! system. The construction side is deliberately thin bookkeeping: every
//! topological claim about a stage (pieces disjoint, nested in their parents,
//! consecutive cores Hopf linked) is measured by [`verify_stage`] and
//! reported as data, never assumed from the construction.
//!
//! Pieces are transported exactly: each piece stores the similarity word
//! that placed it, composed once and applied to the base solid, so stage
//! geometry carries no accumulated frame drift and the diameter law
//! `diam = scale^depth * diam(base)` holds to roundoff.

mod mesh;
mod verify;
mod voxel;

pub use mesh::{export_mesh, MeshStats, TORUS_MESH_MAJOR, TORUS_MESH_MINOR};
pub use verify::{
    clopen_neighborhood, linking_number, verify_stage, ClopenNeighborhood, LinkingReport,
    StageFailure, StageReport, LINK_RESIDUAL_GATE,
};
pub use voxel::voxel_complement_connected;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::geom::vec3::{self, Mat3, V3};
use crate::geom::{ClosedCurve, Dim, Point};

/// Hard ceiling on pieces per stage; `iterate_stage` refuses to cross it.
pub const PIECE_LIMIT: usize = 1_000_000;

fn check_unit_rows(m: &Mat3) -> Result<()> {
    let p = m.transpose().mul(m);
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 1.0 } else { 0.0 };
            if (p.0[i][j] - want).abs() > 1e-12 {
                return Err(Error::invalid("rotation matrix is not orthonormal"));
            }
        }
    }
    Ok(())
}

fn finite_v3(v: V3) -> bool {
    v.iter().all(|c| c.is_finite())
}

fn as_v3(p: Point) -> Result<V3> {
    if p.dim() != Dim::Three {
        return Err(Error::DimensionMismatch { map_dim: 3, point_dim: p.dim().as_u8() });
    }
    Ok(p.raw())
}

/// A solid torus of revolution: core circle of `major` radius around `center`
/// in the plane normal to `axis`, tube of `minor` radius. The stored
/// orientation fixes where angle zero sits on the core, which matters only
/// for meshing and for exact transport under similarities; `twist` records
/// the quarter-turn bookkeeping of chain constructions.
#[derive(Debug, Clone, Copy)]
pub struct TorusFrame {
    center: V3,
    /// Columns e1, e2, axis; right-handed orthonormal.
    orientation: Mat3,
    major: f64,
    minor: f64,
    twist: f64,
}

impl TorusFrame {
    /// Frame from center, axis direction and the two radii. The axis is
    /// normalized (zero or non-finite axes are rejected), so the unit-axis
    /// invariant holds by construction. Twist starts at zero.
    pub fn new(center: Point, axis: Point, major: f64, minor: f64) -> Result<Self> {
        let c = as_v3(center)?;
        let a = as_v3(axis)?;
        if !finite_v3(c) {
            return Err(Error::invalid("torus center must be finite"));
        }
        let n = vec3::norm(a);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::invalid("torus axis must be a nonzero finite vector"));
        }
        if !(major > 0.0) || !(minor > 0.0) || !major.is_finite() || !minor.is_finite() {
            return Err(Error::invalid("torus radii must be positive and finite"));
        }
        if minor >= major {
            return Err(Error::invalid(format!(
                "torus minor radius {minor} must be smaller than major radius {major}"
            )));
        }
        let unit = vec3::scale(a, 1.0 / n);
        Ok(TorusFrame {
            center: c,
            orientation: Mat3::frame_from_normal(unit),
            major,
            minor,
            twist: 0.0,
        })
    }

    fn from_parts(center: V3, orientation: Mat3, major: f64, minor: f64, twist: f64) -> Self {
        TorusFrame { center, orientation, major, minor, twist }
    }

    pub fn center(&self) -> Point {
        Point::spatial(self.center[0], self.center[1], self.center[2])
    }

    pub fn axis(&self) -> Point {
        let a = self.orientation.col(2);
        Point::spatial(a[0], a[1], a[2])
    }

    pub fn major_radius(&self) -> f64 {
        self.major
    }

    pub fn minor_radius(&self) -> f64 {
        self.minor
    }

    pub fn twist(&self) -> f64 {
        self.twist
    }

    /// Farthest surface point from the center.
    pub fn bounding_radius(&self) -> f64 {
        self.major + self.minor
    }

    pub fn diameter(&self) -> f64 {
        2.0 * (self.major + self.minor)
    }

    fn core_point(&self, angle: f64) -> V3 {
        let e1 = self.orientation.col(0);
        let e2 = self.orientation.col(1);
        let (s, c) = angle.sin_cos();
        vec3::add(self.center, vec3::add(vec3::scale(e1, self.major * c), vec3::scale(e2, self.major * s)))
    }

    /// The core circle as a closed polyline with `n` vertices.
    pub fn core_polyline(&self, n: usize) -> Result<ClosedCurve> {
        if n < 3 {
            return Err(Error::invalid(format!("core polyline needs >= 3 vertices, got {n}")));
        }
        let pts = (0..n)
            .map(|k| {
                let q = self.core_point(TAU * k as f64 / n as f64);
                Point::spatial(q[0], q[1], q[2])
            })
            .collect();
        ClosedCurve::new(pts)
    }

    /// Distance from `q` to the core circle; exact.
    pub fn tube_coordinate(&self, q: V3) -> f64 {
        let w = vec3::sub(q, self.center);
        let a1 = vec3::dot(w, self.orientation.col(0));
        let a2 = vec3::dot(w, self.orientation.col(1));
        let az = vec3::dot(w, self.orientation.col(2));
        let rho = a1.hypot(a2);
        (rho - self.major).hypot(az)
    }

    fn surface_point(&self, u: f64, v: f64) -> V3 {
        let e1 = self.orientation.col(0);
        let e2 = self.orientation.col(1);
        let ax = self.orientation.col(2);
        let (su, cu) = u.sin_cos();
        let (sv, cv) = v.sin_cos();
        let ring = self.major + self.minor * cv;
        let mut p = self.center;
        p = vec3::add(p, vec3::scale(e1, ring * cu));
        p = vec3::add(p, vec3::scale(e2, ring * su));
        vec3::add(p, vec3::scale(ax, self.minor * sv))
    }
}

/// A round ball, the genus-zero piece shape.
#[derive(Debug, Clone, Copy)]
pub struct Ball {
    center: V3,
    radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        let c = as_v3(center)?;
        if !finite_v3(c) {
            return Err(Error::invalid("ball center must be finite"));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid("ball radius must be positive and finite"));
        }
        Ok(Ball { center: c, radius })
    }

    pub fn center(&self) -> Point {
        Point::spatial(self.center[0], self.center[1], self.center[2])
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// One placed solid of a defining-sequence stage.
#[derive(Debug, Clone, Copy)]
pub enum PieceShape {
    Torus(TorusFrame),
    Ball(Ball),
}

impl PieceShape {
    pub fn diameter(&self) -> f64 {
        match self {
            PieceShape::Torus(t) => t.diameter(),
            PieceShape::Ball(b) => 2.0 * b.radius,
        }
    }

    /// Genus of the piece boundary as a handlebody: 1 for a solid torus,
    /// 0 for a ball.
    pub fn genus(&self) -> u32 {
        match self {
            PieceShape::Torus(_) => 1,
            PieceShape::Ball(_) => 0,
        }
    }

    pub(crate) fn bounding_center(&self) -> V3 {
        match self {
            PieceShape::Torus(t) => t.center,
            PieceShape::Ball(b) => b.center,
        }
    }

    pub(crate) fn bounding_radius(&self) -> f64 {
        match self {
            PieceShape::Torus(t) => t.bounding_radius(),
            PieceShape::Ball(b) => b.radius,
        }
    }

    /// Distance from `q` to the solid; zero inside.
    pub fn solid_distance(&self, q: V3) -> f64 {
        match self {
            PieceShape::Torus(t) => (t.tube_coordinate(q) - t.minor).max(0.0),
            PieceShape::Ball(b) => (vec3::norm(vec3::sub(q, b.center)) - b.radius).max(0.0),
        }
    }

    pub fn contains(&self, q: Point) -> Result<bool> {
        Ok(self.solid_distance(as_v3(q)?) == 0.0)
    }
}

/// Contracting similarity of 3-space, `x -> scale * R x + t`.
#[derive(Debug, Clone, Copy)]
pub struct Similarity {
    scale: f64,
    rotation: Mat3,
    translation: V3,
    /// Quarter-turn bookkeeping added to transported torus frames.
    frame_twist: f64,
}

impl Similarity {
    pub fn new(scale: f64, rotation: Mat3, translation: Point) -> Result<Self> {
        if !(scale > 0.0 && scale < 1.0) {
            return Err(Error::invalid(format!(
                "similarity scale must lie strictly inside (0, 1), got {scale}"
            )));
        }
        check_unit_rows(&rotation)?;
        let t = as_v3(translation)?;
        if !finite_v3(t) {
            return Err(Error::invalid("similarity translation must be finite"));
        }
        Ok(Similarity { scale, rotation, translation: t, frame_twist: 0.0 })
    }

    fn with_frame_twist(mut self, twist: f64) -> Self {
        self.frame_twist = twist;
        self
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rotation(&self) -> Mat3 {
        self.rotation
    }

    pub fn translation(&self) -> Point {
        Point::spatial(self.translation[0], self.translation[1], self.translation[2])
    }

    pub(crate) fn apply_v3(&self, x: V3) -> V3 {
        vec3::add(vec3::scale(self.rotation.apply(x), self.scale), self.translation)
    }

    pub fn apply(&self, x: Point) -> Result<Point> {
        let q = self.apply_v3(as_v3(x)?);
        Ok(Point::spatial(q[0], q[1], q[2]))
    }

    /// `self` after `inner`: `(self.compose(inner))(x) = self(inner(x))`.
    pub fn compose(&self, inner: &Similarity) -> Similarity {
        Similarity {
            scale: self.scale * inner.scale,
            rotation: self.rotation.mul(&inner.rotation),
            translation: vec3::add(
                vec3::scale(self.rotation.apply(inner.translation), self.scale),
                self.translation,
            ),
            frame_twist: (self.frame_twist + inner.frame_twist).rem_euclid(TAU),
        }
    }

    pub fn apply_shape(&self, shape: &PieceShape) -> PieceShape {
        match shape {
            PieceShape::Torus(t) => PieceShape::Torus(TorusFrame::from_parts(
                self.apply_v3(t.center),
                self.rotation.mul(&t.orientation),
                self.scale * t.major,
                self.scale * t.minor,
                (t.twist + self.frame_twist).rem_euclid(TAU),
            )),
            PieceShape::Ball(b) => PieceShape::Ball(Ball {
                center: self.apply_v3(b.center),
                radius: self.scale * b.radius,
            }),
        }
    }

    /// The unique fixed point of the contraction.
    pub fn fixed_point(&self) -> Point {
        let mut x = self.translation;
        loop {
            let next = self.apply_v3(x);
            let delta = vec3::norm(vec3::sub(next, x));
            x = next;
            if delta <= 1e-16 * (1.0 + vec3::norm(x)) {
                break;
            }
        }
        Point::spatial(x[0], x[1], x[2])
    }
}

/// One placed piece of a stage: its solid, provenance, and the exact
/// similarity word that produced it.
#[derive(Debug, Clone)]
pub struct Piece {
    pub shape: PieceShape,
    /// Index into the previous stage's pieces; None for the root.
    pub parent_index: Option<usize>,
    /// IFS letters from outermost to innermost, dot separated.
    pub word: String,
    /// Composed placement similarity; None for the root piece.
    pub placement: Option<Similarity>,
}

/// A finite stage of a defining sequence.
#[derive(Debug, Clone)]
pub struct DefiningSequenceStage {
    pub depth: usize,
    pub pieces: Vec<Piece>,
    /// Largest handlebody genus among the pieces.
    pub genus_per_piece: u32,
    /// Shapes of the previous stage, for self-contained containment checks.
    pub parent_shapes: Vec<PieceShape>,
    /// The depth-zero solid every placement word is applied to.
    pub base: PieceShape,
}

impl DefiningSequenceStage {
    /// The depth-zero stage holding the base solid itself.
    pub fn root(base: PieceShape) -> Self {
        DefiningSequenceStage {
            depth: 0,
            genus_per_piece: base.genus(),
            pieces: vec![Piece {
                shape: base,
                parent_index: None,
                word: String::new(),
                placement: None,
            }],
            parent_shapes: Vec::new(),
            base,
        }
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn max_piece_diameter(&self) -> f64 {
        self.pieces.iter().map(|p| p.shape.diameter()).fold(0.0, f64::max)
    }
}

/// Largest per-piece genus in the stage; the genus this defining sequence
/// witnesses as an upper bound, not the genus of the limit Cantor set.
pub fn genus_of_stage(stage: &DefiningSequenceStage) -> u32 {
    stage.pieces.iter().map(|p| p.shape.genus()).max().unwrap_or(0)
}

/// Similarities placing `m` sub-tori with centers equally spaced on the
/// parent core circle and a quarter twist alternating around the ring, the
/// arrangement whose consecutive cores can close into a Hopf chain.
///
/// The pre-checks here reject only parameter sets that cannot work for any
/// arrangement of this kind: too few links to close a chain, an odd count
/// (the alternating twist needs an even cycle), a sub-torus as wide as the
/// parent, or tubes thicker than the center spacing. Whether the built ring
/// actually is disjoint, nested, and linked is measured by [`verify_stage`];
/// a pre-check strong enough to guarantee those claims would have to repeat
/// that measurement, so it does not try.
pub fn build_necklace(
    m: usize,
    parent: &TorusFrame,
    sub_major: f64,
    sub_minor: f64,
) -> Result<Vec<Similarity>> {
    if m < 4 {
        return Err(Error::invalid(format!(
            "necklace needs at least 4 links to close a chain, got {m}"
        )));
    }
    if m % 2 != 0 {
        return Err(Error::invalid(format!(
            "alternating quarter twist cannot close an odd cycle of {m} links"
        )));
    }
    if !(sub_major > 0.0) || !(sub_minor > 0.0) || !sub_major.is_finite() || !sub_minor.is_finite()
    {
        return Err(Error::invalid("sub-torus radii must be positive and finite"));
    }
    if sub_minor >= sub_major {
        return Err(Error::invalid(format!(
            "sub-torus minor radius {sub_minor} must be smaller than its major radius {sub_major}"
        )));
    }
    if sub_major >= parent.major {
        return Err(Error::Infeasible(format!(
            "sub-torus major radius {sub_major} must stay below the parent major radius {}",
            parent.major
        )));
    }
    let spacing = 2.0 * parent.major * (PI / m as f64).sin();
    if 2.0 * sub_minor >= spacing {
        return Err(Error::Infeasible(format!(
            "sub-torus tube diameter {} cannot stay disjoint at core spacing {spacing}",
            2.0 * sub_minor
        )));
    }

    let scale = sub_major / parent.major;
    let e1 = parent.orientation.col(0);
    let e2 = parent.orientation.col(1);
    let axis = parent.orientation.col(2);
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let theta = TAU * i as f64 / m as f64;
        let (s, c) = theta.sin_cos();
        let tangent = vec3::add(vec3::scale(e1, -s), vec3::scale(e2, c));
        let center = vec3::add(
            parent.center,
            vec3::add(vec3::scale(e1, parent.major * c), vec3::scale(e2, parent.major * s)),
        );
        let twist = if i % 2 == 0 { 0.0 } else { FRAC_PI_2 };
        // Spin the frame around the parent axis to the site, then tip it a
        // quarter turn about the local core tangent on the odd links.
        let spin = Mat3::rotation(axis, theta);
        let rot = if twist == 0.0 { spin } else { Mat3::rotation(tangent, twist).mul(&spin) };
        let translation =
            vec3::sub(center, vec3::scale(rot.apply(parent.center), scale));
        let sim = Similarity {
            scale,
            rotation: rot,
            translation,
            frame_twist: 0.0,
        }
        .with_frame_twist(twist);
        out.push(sim);
    }
    Ok(out)
}

/// The next stage: every current piece replaced by its images under the IFS,
/// words extended by the similarity index.
pub fn iterate_stage(
    stage: &DefiningSequenceStage,
    ifs: &[Similarity],
) -> Result<DefiningSequenceStage> {
    if ifs.is_empty() {
        return Err(Error::invalid("iterated function system must not be empty"));
    }
    let count = stage.pieces.len().saturating_mul(ifs.len());
    if count > PIECE_LIMIT {
        return Err(Error::PieceBudget { checked: count, limit: PIECE_LIMIT });
    }
    let mut pieces = Vec::with_capacity(count);
    for (pi, piece) in stage.pieces.iter().enumerate() {
        for (k, sim) in ifs.iter().enumerate() {
            let placement = match &piece.placement {
                Some(w) => w.compose(sim),
                None => *sim,
            };
            let word = if piece.word.is_empty() {
                k.to_string()
            } else {
                format!("{}.{k}", piece.word)
            };
            pieces.push(Piece {
                shape: placement.apply_shape(&stage.base),
                parent_index: Some(pi),
                word,
                placement: Some(placement),
            });
        }
    }
    let genus = pieces.iter().map(|p| p.shape.genus()).max().unwrap_or(0);
    Ok(DefiningSequenceStage {
        depth: stage.depth + 1,
        pieces,
        genus_per_piece: genus,
        parent_shapes: stage.pieces.iter().map(|p| p.shape).collect(),
        base: stage.base,
    })
}

/// Genus-zero defining sequence: stages of `2^i` balls shrinking onto the
/// middle-thirds Cantor set of a unit segment on the x axis. Ball radius is
/// 0.7 of the covered interval length, which keeps children strictly inside
/// their parent (margin 0.13 of the length) and siblings apart (gap 0.2).
pub fn tame_sequence(depth: usize) -> Result<Vec<DefiningSequenceStage>> {
    if depth > 10 {
        return Err(Error::invalid(format!(
            "tame sequence depth {depth} exceeds the supported 10"
        )));
    }
    let third = Mat3::identity();
    let left = Similarity::new(1.0 / 3.0, third, Point::spatial(0.0, 0.0, 0.0))?;
    let right = Similarity::new(1.0 / 3.0, third, Point::spatial(2.0 / 3.0, 0.0, 0.0))?;
    let base = PieceShape::Ball(Ball::new(Point::spatial(0.5, 0.0, 0.0), 0.7)?);
    let mut stages = vec![DefiningSequenceStage::root(base)];
    for _ in 0..depth {
        let next = iterate_stage(stages.last().unwrap(), &[left, right])?;
        stages.push(next);
    }
    Ok(stages)
}

/// Necklace parameters: everything `build_necklace` and the stage pipeline
/// need to run.
#[derive(Debug, Clone, Copy)]
pub struct NecklaceParams {
    pub pieces: usize,
    pub parent: TorusFrame,
    pub sub_major: f64,
    pub sub_minor: f64,
}

impl NecklaceParams {
    pub fn build(&self) -> Result<Vec<Similarity>> {
        build_necklace(self.pieces, &self.parent, self.sub_major, self.sub_minor)
    }

    pub fn root_stage(&self) -> DefiningSequenceStage {
        DefiningSequenceStage::root(PieceShape::Torus(self.parent))
    }

    /// Stages 0..=depth.
    pub fn stages(&self, depth: usize) -> Result<Vec<DefiningSequenceStage>> {
        let ifs = self.build()?;
        let mut stages = vec![self.root_stage()];
        for _ in 0..depth {
            stages.push(iterate_stage(stages.last().unwrap(), &ifs)?);
        }
        Ok(stages)
    }
}

/// The documented default ring: eight links in a parent of major radius 2
/// and tube 0.6, sub-torus 0.55 by 0.15. These spacings keep the sub-tori
/// pairwise disjoint but leave consecutive cores too far apart to link
/// (centers 1.53 apart against a reach of 1.10) and the sub-tori poke out
/// of the parent tube; `verify_stage` reports exactly that.
pub fn default_necklace_parameters() -> NecklaceParams {
    NecklaceParams {
        pieces: 8,
        parent: TorusFrame::new(
            Point::spatial(0.0, 0.0, 0.0),
            Point::spatial(0.0, 0.0, 1.0),
            2.0,
            0.6,
        )
        .expect("default parent frame is valid"),
        sub_major: 0.55,
        sub_minor: 0.15,
    }
}

/// A ring that genuinely closes into a Hopf chain: 28 links of major radius
/// 0.335 in a parent of major 2 and tube 0.57. Measured stage-1 margins are
/// all near 0.023: consecutive core gap 0.0231 after tubes, next-nearest
/// 0.0291, containment depth margin 0.0234; the ratios persist at every
/// depth because the stages are exact similar copies.
pub fn linked_necklace_parameters() -> NecklaceParams {
    NecklaceParams {
        pieces: 28,
        parent: TorusFrame::new(
            Point::spatial(0.0, 0.0, 0.0),
            Point::spatial(0.0, 0.0, 1.0),
            2.0,
            0.57,
        )
        .expect("linked parent frame is valid"),
        sub_major: 0.335,
        sub_minor: 0.0955,
    }
}
