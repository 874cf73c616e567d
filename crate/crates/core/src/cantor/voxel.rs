//! Voxel proxy for complement connectivity of a stage.
//!
//! The continuum statement (the complement of the stage union is connected)
//! is approximated on a finite cube grid: voxels whose center comes within
//! half a cube diagonal of any solid count as occupied, everything else is
//! free, and a single flood fill from a padded corner must reach every free
//! voxel. Occupancy is deliberately fattened, so the test refuses outright
//! when pieces sit closer than two voxels; at that resolution the fattening
//! itself could seal a genuine corridor and the answer would mean nothing.

use std::collections::VecDeque;

use rayon::prelude::*;

use super::verify::clearance_bound;
use super::DefiningSequenceStage;
use crate::error::{Error, Result};
use crate::geom::vec3::{self, V3};

const MIN_RESOLUTION: usize = 32;
const MAX_RESOLUTION: usize = 512;

struct BitGrid {
    words: Vec<u64>,
}

impl BitGrid {
    fn new(len: usize) -> Self {
        BitGrid { words: vec![0; len.div_ceil(64)] }
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn get(&self, i: usize) -> bool {
        self.words[i / 64] & (1 << (i % 64)) != 0
    }

    fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Flood fill over the free voxels, 6-connected, from grid corner (0,0,0).
/// True when every free voxel is reached. Single-threaded on purpose: the
/// fill is memory-bound and must behave identically at any thread count.
fn complement_connected(dims: [usize; 3], occupied: &BitGrid) -> bool {
    let [nx, ny, nz] = dims;
    let total = nx * ny * nz;
    let free_total = total - occupied.count();
    if free_total == 0 {
        return true;
    }
    debug_assert!(!occupied.get(0), "padding must keep the corner voxel free");
    let mut seen = BitGrid::new(total);
    let mut queue = VecDeque::new();
    seen.set(0);
    queue.push_back(0u32);
    let mut reached = 1usize;
    while let Some(idx) = queue.pop_front() {
        let idx = idx as usize;
        let x = idx % nx;
        let y = (idx / nx) % ny;
        let z = idx / (nx * ny);
        let mut visit = |n: usize, seen: &mut BitGrid, queue: &mut VecDeque<u32>| {
            if !seen.get(n) && !occupied.get(n) {
                seen.set(n);
                queue.push_back(n as u32);
                reached += 1;
            }
        };
        if x > 0 {
            visit(idx - 1, &mut seen, &mut queue);
        }
        if x + 1 < nx {
            visit(idx + 1, &mut seen, &mut queue);
        }
        if y > 0 {
            visit(idx - nx, &mut seen, &mut queue);
        }
        if y + 1 < ny {
            visit(idx + nx, &mut seen, &mut queue);
        }
        if z > 0 {
            visit(idx - nx * ny, &mut seen, &mut queue);
        }
        if z + 1 < nz {
            visit(idx + nx * ny, &mut seen, &mut queue);
        }
    }
    reached == free_total
}

/// Whether the complement of the stage union is connected on a cube grid:
/// the stage bounding box, padded by one largest piece diameter on every
/// side, cut into cube voxels with `resolution` of them along the longest
/// axis. Refuses when the certified minimum gap between pieces is under two
/// voxels, since conservative occupancy could then close a real corridor.
pub fn voxel_complement_connected(
    stage: &DefiningSequenceStage,
    resolution: usize,
) -> Result<bool> {
    if !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&resolution) {
        return Err(Error::invalid(format!(
            "voxel resolution {resolution} outside the supported {MIN_RESOLUTION}..={MAX_RESOLUTION}"
        )));
    }
    if stage.pieces.is_empty() {
        return Err(Error::invalid("voxel test needs at least one piece"));
    }

    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for piece in &stage.pieces {
        let c = piece.shape.bounding_center();
        let r = piece.shape.bounding_radius();
        for k in 0..3 {
            lo[k] = lo[k].min(c[k] - r);
            hi[k] = hi[k].max(c[k] + r);
        }
    }
    let pad = stage.max_piece_diameter();
    for k in 0..3 {
        lo[k] -= pad;
        hi[k] += pad;
    }
    let extent = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    let longest = extent[0].max(extent[1]).max(extent[2]);
    let h = longest / resolution as f64;

    if stage.pieces.len() >= 2 {
        let near_cutoff = stage.max_piece_diameter();
        let shapes: Vec<_> = stage.pieces.iter().map(|p| &p.shape).collect();
        let n = shapes.len();
        let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                pairs.push((i, j));
            }
        }
        let separation = pairs
            .par_iter()
            .map(|&(i, j)| clearance_bound(shapes[i], shapes[j], near_cutoff))
            .reduce(|| f64::INFINITY, f64::min);
        if separation < 2.0 * h {
            return Err(Error::VoxelResolution { separation, voxel: h });
        }
    }

    let dims = [
        ((extent[0] / h).ceil() as usize).max(1),
        ((extent[1] / h).ceil() as usize).max(1),
        ((extent[2] / h).ceil() as usize).max(1),
    ];
    let [nx, ny, nz] = dims;
    let mut occupied = BitGrid::new(nx * ny * nz);
    let cover = h * 3f64.sqrt() / 2.0;
    let center = |k: usize, i: usize| lo[k] + (i as f64 + 0.5) * h;
    for piece in &stage.pieces {
        let c = piece.shape.bounding_center();
        let reach = piece.shape.bounding_radius() + cover + h;
        let range = |k: usize| {
            let a = (((c[k] - reach - lo[k]) / h).floor() as isize).max(0) as usize;
            let b = ((((c[k] + reach - lo[k]) / h).ceil() as isize).max(0) as usize).min(dims[k]);
            a..b
        };
        for z in range(2) {
            for y in range(1) {
                for x in range(0) {
                    let q: V3 = [center(0, x), center(1, y), center(2, z)];
                    if piece.shape.solid_distance(q) <= cover {
                        occupied.set((z * ny + y) * nx + x);
                    }
                }
            }
        }
    }

    Ok(complement_connected(dims, &occupied))
}
