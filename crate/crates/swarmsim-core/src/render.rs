//! Frame rendering to binary portable pixmaps (P6).
//!
//! Shape cells are shaded, robots drawn as phase-colored discs: Seed black,
//! Joined dark gray, EdgeFollow white with an outline, WaitToMove light
//! gray, Surplus cross-hatched. Output is a pure function of the sampled
//! trace, so frames from same-seed runs match byte for byte.

use crate::geom::Vec2;
use crate::metrics::FrameTransform;
use crate::protocol::Phase;
use crate::shape::GridShape;
use crate::trace::{Trace, TraceRecord};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("tick {0} is not sampled in the trace")]
    TickNotSampled(u64),
}

const BACKGROUND: [u8; 3] = [255, 255, 255];
const SHAPE_FILL: [u8; 3] = [214, 214, 214];
const OUTLINE: [u8; 3] = [40, 40, 40];

fn phase_fill(phase: Phase) -> [u8; 3] {
    match phase {
        Phase::Seed => [0, 0, 0],
        Phase::Joined => [96, 96, 96],
        Phase::EdgeFollow => [255, 255, 255],
        Phase::WaitToMove => [182, 182, 182],
        Phase::Surplus => [150, 150, 150],
        Phase::Electing => [120, 120, 200],
    }
}

/// A rasterized frame.
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Frame {
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Render the world at `tick` (which must be a sampled tick).
/// `pixels_per_cell` scales the image; the viewport covers the shape plus
/// every robot with one cell of padding.
pub fn render(
    trace: &Trace,
    shape: &GridShape,
    frame_transform: &FrameTransform,
    tick: u64,
    diameter: f64,
    pixels_per_cell: usize,
) -> Result<Frame, RenderError> {
    let records = trace.at_tick(tick);
    if records.is_empty() && !trace.records.is_empty() {
        return Err(RenderError::TickNotSampled(tick));
    }
    let cell = shape.cell_size();
    let scale = pixels_per_cell.max(1) as f64 / cell;

    // Viewport in frame coordinates.
    let origin = shape.origin();
    let mut min = origin - Vec2::new(cell, cell);
    let mut max = origin
        + Vec2::new(
            shape.width() as f64 * cell + cell,
            shape.height() as f64 * cell + cell,
        );
    for r in &records {
        let p = frame_transform.world_to_frame(Vec2::new(r.x, r.y));
        min.x = min.x.min(p.x - diameter);
        min.y = min.y.min(p.y - diameter);
        max.x = max.x.max(p.x + diameter);
        max.y = max.y.max(p.y + diameter);
    }

    let width = ((max.x - min.x) * scale).ceil() as usize + 1;
    let height = ((max.y - min.y) * scale).ceil() as usize + 1;
    let mut pixels = vec![0u8; width * height * 3];
    for px in pixels.chunks_exact_mut(3) {
        px.copy_from_slice(&BACKGROUND);
    }

    let mut frame = Frame {
        width,
        height,
        pixels,
    };

    // Shape cells. Image y grows downward; frame y grows upward.
    for cy in 0..shape.height() {
        for cx in 0..shape.width() {
            if !shape.cell(cx, cy) {
                continue;
            }
            let lo = Vec2::new(
                origin.x + cx as f64 * cell,
                origin.y + cy as f64 * cell,
            );
            let hi = lo + Vec2::new(cell, cell);
            fill_rect(&mut frame, min, max, scale, lo, hi, SHAPE_FILL);
        }
    }

    for r in &records {
        draw_robot(&mut frame, min, max, scale, frame_transform, r, diameter);
    }
    Ok(frame)
}

fn to_px(frame: &Frame, min: Vec2, max: Vec2, scale: f64, p: Vec2) -> (i64, i64) {
    let x = ((p.x - min.x) * scale).round() as i64;
    let y = ((max.y - p.y) * scale).round() as i64;
    let _ = frame;
    (x, y)
}

fn put(frame: &mut Frame, x: i64, y: i64, color: [u8; 3]) {
    if x < 0 || y < 0 || x as usize >= frame.width || y as usize >= frame.height {
        return;
    }
    let idx = (y as usize * frame.width + x as usize) * 3;
    frame.pixels[idx..idx + 3].copy_from_slice(&color);
}

fn fill_rect(frame: &mut Frame, min: Vec2, max: Vec2, scale: f64, lo: Vec2, hi: Vec2, color: [u8; 3]) {
    let (x0, y1) = to_px(frame, min, max, scale, lo);
    let (x1, y0) = to_px(frame, min, max, scale, hi);
    for y in y0..=y1 {
        for x in x0..=x1 {
            put(frame, x, y, color);
        }
    }
}

fn draw_robot(
    frame: &mut Frame,
    min: Vec2,
    max: Vec2,
    scale: f64,
    transform: &FrameTransform,
    record: &TraceRecord,
    diameter: f64,
) {
    let center = transform.world_to_frame(Vec2::new(record.x, record.y));
    let fill = phase_fill(record.phase);
    let radius = diameter / 2.0;
    let r_px = (radius * scale).ceil() as i64;
    let (cx, cy) = to_px(frame, min, max, scale, center);
    for dy in -r_px..=r_px {
        for dx in -r_px..=r_px {
            let dist = ((dx * dx + dy * dy) as f64).sqrt();
            if dist > radius * scale {
                continue;
            }
            let mut color = fill;
            // Outline ring for every phase; movers read as white discs with
            // a dark rim.
            if dist >= radius * scale - 1.5 {
                color = OUTLINE;
            } else if record.phase == Phase::Surplus && (dx + dy).rem_euclid(4) == 0 {
                // Cross-hatch: diagonal stripes through the disc.
                color = [40, 40, 40];
            }
            put(frame, cx + dx, cy + dy, color);
        }
    }
}
