//! Initial placement generators: a hex-packed aggregate blob and uniform
//! rejection-sampled random scatter.

use crate::geom::Vec2;
use crate::rng::{StreamKind, StreamSeed};
use crate::world::Pose;
use rand::Rng;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlacementError {
    #[error("rejection sampling cap exceeded after {0} attempts")]
    PlacementOverflow(usize),
}

/// Hex-packed blob of `count` discs centered on `anchor`: a center site plus
/// concentric rings at the given pitch, rings filled in a fixed angular
/// order. Headings are drawn from the placement stream; positions are
/// rng-independent.
pub fn place_aggregate(count: usize, pitch: f64, anchor: Vec2, rng: StreamSeed) -> Vec<Pose> {
    assert!(count >= 1);
    let mut sites = Vec::with_capacity(count);
    sites.push(Vec2::ZERO);
    let mut ring = 1usize;
    while sites.len() < count {
        // Cube-coordinate ring walk: start on the ring, push before each
        // step, six edges of `ring` steps each.
        let mut cube = (-(ring as i64), 0i64, ring as i64);
        const DIRS: [(i64, i64, i64); 6] = [
            (1, -1, 0),
            (1, 0, -1),
            (0, 1, -1),
            (-1, 1, 0),
            (-1, 0, 1),
            (0, -1, 1),
        ];
        for dir in DIRS {
            for _ in 0..ring {
                if sites.len() < count {
                    sites.push(axial_to_point(cube.0, cube.2, pitch));
                }
                cube = (cube.0 + dir.0, cube.1 + dir.1, cube.2 + dir.2);
            }
        }
        ring += 1;
    }
    sites
        .into_iter()
        .enumerate()
        .map(|(i, offset)| {
            let mut stream = rng.stream(StreamKind::Heading, &[i as u64]);
            let heading = stream.gen::<f64>() * TAU;
            let p = anchor + offset;
            Pose::new(p.x, p.y, heading)
        })
        .collect()
}

fn axial_to_point(q: i64, r: i64, pitch: f64) -> Vec2 {
    let x = pitch * (q as f64 + r as f64 / 2.0);
    let y = pitch * (3f64.sqrt() / 2.0) * r as f64;
    Vec2::new(x, y)
}

/// Number of rings needed to hold `count` robots; the blob radius is
/// roughly `rings * pitch`.
pub fn aggregate_rings(count: usize) -> usize {
    let mut rings = 0usize;
    let mut held = 1usize;
    while held < count {
        rings += 1;
        held += 6 * rings;
    }
    rings
}

/// Uniform non-overlapping placement in the axis-aligned arena
/// `[origin, origin + extent]` via rejection sampling.
pub fn place_random(
    count: usize,
    diameter: f64,
    arena_origin: Vec2,
    arena_extent: Vec2,
    rng: StreamSeed,
) -> Result<Vec<Pose>, PlacementError> {
    assert!(count >= 1);
    let cap = count.saturating_mul(1000);
    let mut stream = rng.stream(StreamKind::Placement, &[count as u64]);
    let mut placed: Vec<Pose> = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while placed.len() < count {
        if attempts >= cap {
            return Err(PlacementError::PlacementOverflow(cap));
        }
        attempts += 1;
        let margin = diameter / 2.0;
        let x = arena_origin.x + margin + stream.gen::<f64>() * (arena_extent.x - diameter).max(0.0);
        let y = arena_origin.y + margin + stream.gen::<f64>() * (arena_extent.y - diameter).max(0.0);
        let p = Vec2::new(x, y);
        if placed
            .iter()
            .all(|q| q.position.distance(p) >= diameter)
        {
            let heading = stream.gen::<f64>() * TAU;
            placed.push(Pose::new(p.x, p.y, heading));
        }
    }
    Ok(placed)
}
