//! ASCII OBJ export of stage geometry.
//!
//! One `o` object per piece, named by its placement word, with global
//! 1-based vertex indices as the format requires. Tori are closed
//! quad-grid tubes split into triangles (Euler characteristic 0), balls are
//! closed UV spheres with pole fans (Euler characteristic 2), so a mesh
//! consumer can recover each piece's genus from the file alone.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use std::f64::consts::{PI, TAU};

use super::{Ball, DefiningSequenceStage, PieceShape, TorusFrame};
use crate::error::Result;
use crate::geom::vec3;

/// Segments around the core circle of an exported torus.
pub const TORUS_MESH_MAJOR: usize = 48;
/// Segments around the tube of an exported torus.
pub const TORUS_MESH_MINOR: usize = 24;

const SPHERE_SLICES: usize = 48;
const SPHERE_STACKS: usize = 24;

/// Totals written to an OBJ file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshStats {
    pub objects: usize,
    pub vertices: usize,
    pub triangles: usize,
}

fn write_torus(w: &mut impl Write, t: &TorusFrame, base: usize) -> Result<usize> {
    for i in 0..TORUS_MESH_MAJOR {
        let u = TAU * i as f64 / TORUS_MESH_MAJOR as f64;
        for j in 0..TORUS_MESH_MINOR {
            let v = TAU * j as f64 / TORUS_MESH_MINOR as f64;
            let p = t.surface_point(u, v);
            writeln!(w, "v {:.9} {:.9} {:.9}", p[0], p[1], p[2])?;
        }
    }
    let idx = |i: usize, j: usize| {
        base + (i % TORUS_MESH_MAJOR) * TORUS_MESH_MINOR + (j % TORUS_MESH_MINOR)
    };
    for i in 0..TORUS_MESH_MAJOR {
        for j in 0..TORUS_MESH_MINOR {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            writeln!(w, "f {a} {b} {c}")?;
            writeln!(w, "f {a} {c} {d}")?;
        }
    }
    Ok(TORUS_MESH_MAJOR * TORUS_MESH_MINOR)
}

fn write_ball(w: &mut impl Write, b: &Ball, base: usize) -> Result<usize> {
    let c = b.center;
    let r = b.radius;
    writeln!(w, "v {:.9} {:.9} {:.9}", c[0], c[1], c[2] + r)?;
    for j in 1..SPHERE_STACKS {
        let phi = PI * j as f64 / SPHERE_STACKS as f64;
        let (sp, cp) = phi.sin_cos();
        for i in 0..SPHERE_SLICES {
            let th = TAU * i as f64 / SPHERE_SLICES as f64;
            let (st, ct) = th.sin_cos();
            let p = vec3::add(c, [r * sp * ct, r * sp * st, r * cp]);
            writeln!(w, "v {:.9} {:.9} {:.9}", p[0], p[1], p[2])?;
        }
    }
    writeln!(w, "v {:.9} {:.9} {:.9}", c[0], c[1], c[2] - r)?;
    let north = base;
    let south = base + 1 + (SPHERE_STACKS - 1) * SPHERE_SLICES;
    let ring = |j: usize, i: usize| base + 1 + (j - 1) * SPHERE_SLICES + (i % SPHERE_SLICES);
    for i in 0..SPHERE_SLICES {
        writeln!(w, "f {} {} {}", north, ring(1, i), ring(1, i + 1))?;
    }
    for j in 1..(SPHERE_STACKS - 1) {
        for i in 0..SPHERE_SLICES {
            let a = ring(j, i);
            let b2 = ring(j + 1, i);
            let c2 = ring(j + 1, i + 1);
            let d = ring(j, i + 1);
            writeln!(w, "f {a} {b2} {c2}")?;
            writeln!(w, "f {a} {c2} {d}")?;
        }
    }
    for i in 0..SPHERE_SLICES {
        writeln!(w, "f {} {} {}", south, ring(SPHERE_STACKS - 1, i + 1), ring(SPHERE_STACKS - 1, i))?;
    }
    Ok(2 + (SPHERE_STACKS - 1) * SPHERE_SLICES)
}

fn triangles_for(shape: &PieceShape) -> usize {
    match shape {
        PieceShape::Torus(_) => 2 * TORUS_MESH_MAJOR * TORUS_MESH_MINOR,
        PieceShape::Ball(_) => 2 * SPHERE_SLICES + (SPHERE_STACKS - 2) * 2 * SPHERE_SLICES,
    }
}

/// Writes every piece of the stage as a closed triangle mesh in ASCII OBJ.
/// An empty stage still produces a valid file holding only the header.
pub fn export_mesh(stage: &DefiningSequenceStage, path: &Path) -> Result<MeshStats> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# defining sequence stage, depth {}, {} pieces", stage.depth, stage.pieces.len())?;
    writeln!(w, "# tori {}x{}, spheres {}x{}", TORUS_MESH_MAJOR, TORUS_MESH_MINOR, SPHERE_SLICES, SPHERE_STACKS)?;
    let mut stats = MeshStats { objects: 0, vertices: 0, triangles: 0 };
    for piece in &stage.pieces {
        if piece.word.is_empty() {
            writeln!(w, "o piece_root")?;
        } else {
            writeln!(w, "o piece_{}", piece.word)?;
        }
        let base = stats.vertices + 1;
        let added = match &piece.shape {
            PieceShape::Torus(t) => write_torus(&mut w, t, base)?,
            PieceShape::Ball(b) => write_ball(&mut w, b, base)?,
        };
        stats.objects += 1;
        stats.vertices += added;
        stats.triangles += triangles_for(&piece.shape);
    }
    w.flush()?;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::{default_necklace_parameters, tame_sequence};

    fn read_lines(path: &Path) -> Vec<String> {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(String::from)
            .collect()
    }

    #[test]
    fn torus_mesh_counts_match_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("root.obj");
        let stage = default_necklace_parameters().root_stage();
        let stats = export_mesh(&stage, &path).unwrap();
        assert_eq!(stats, MeshStats { objects: 1, vertices: 1152, triangles: 2304 });
        let lines = read_lines(&path);
        assert_eq!(lines.iter().filter(|l| l.starts_with("v ")).count(), 1152);
        assert_eq!(lines.iter().filter(|l| l.starts_with("f ")).count(), 2304);
        assert_eq!(lines.iter().filter(|l| l.starts_with("o ")).count(), 1);
        assert!(lines.contains(&"o piece_root".to_string()));
        // Every face index is in the 1-based vertex range.
        for line in lines.iter().filter(|l| l.starts_with("f ")) {
            for tok in line.split_whitespace().skip(1) {
                let k: usize = tok.parse().unwrap();
                assert!((1..=1152).contains(&k));
            }
        }
    }

    #[test]
    fn ball_mesh_is_a_closed_sphere() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("balls.obj");
        let stage = &tame_sequence(1).unwrap()[1];
        let stats = export_mesh(stage, &path).unwrap();
        assert_eq!(stats.objects, 2);
        assert_eq!(stats.vertices, 2 * 1106);
        assert_eq!(stats.triangles, 2 * 2208);
        // Euler characteristic per ball: V - E + F with E = 3F/2 for a
        // closed triangle mesh gives 1106 - 3312 + 2208 = 2.
        assert_eq!(1106 - 3312 + 2208, 2);
    }

    #[test]
    fn empty_stage_writes_only_the_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.obj");
        let mut stage = default_necklace_parameters().root_stage();
        stage.pieces.clear();
        let stats = export_mesh(&stage, &path).unwrap();
        assert_eq!(stats, MeshStats { objects: 0, vertices: 0, triangles: 0 });
        let lines = read_lines(&path);
        assert!(!lines.is_empty());
        assert!(lines.iter().all(|l| l.starts_with('#')));
    }

    #[test]
    fn stage_words_name_the_objects() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stage1.obj");
        let params = default_necklace_parameters();
        let stages = params.stages(1).unwrap();
        let stats = export_mesh(&stages[1], &path).unwrap();
        assert_eq!(stats.objects, 8);
        let lines = read_lines(&path);
        for k in 0..8 {
            assert!(lines.contains(&format!("o piece_{k}")));
        }
    }
}
