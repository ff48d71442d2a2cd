//! Target-figure ingestion and analysis.
//!
//! The target figure is an occupancy bitmap. Two text encodings are accepted:
//! the plain-text portable bitmap dialect (`P1` header, dimensions, 0/1
//! cells) and an ASCII grid (`#` occupied, `.` empty, one row per line).
//! Detection is by the first non-whitespace character: `P` selects P1.
//!
//! Analysis follows the standard dual connectivity pairing of digital
//! topology: occupied cells connect 4-ways, the empty complement connects
//! 8-ways. A hole is an empty component that never touches the grid border.

use crate::geom::Vec2;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ShapeError {
    #[error("malformed shape input: {0}")]
    MalformedInput(String),
    #[error("shape has no occupied cells")]
    EmptyShape,
}

/// Occupied-cell bitmap of the target figure.
///
/// `origin` is the world coordinate of the minimum corner of cell (0, 0);
/// cell membership is half-open per axis, so every point maps to at most one
/// cell and `contains` is total.
#[derive(Debug, Clone, PartialEq)]
pub struct GridShape {
    width: usize,
    height: usize,
    cell_size: f64,
    origin: Vec2,
    /// Row-major; index = y * width + x.
    occupied: Vec<bool>,
}

impl GridShape {
    pub fn new(
        width: usize,
        height: usize,
        cell_size: f64,
        origin: Vec2,
        occupied: Vec<bool>,
    ) -> Result<Self, ShapeError> {
        assert!(cell_size > 0.0, "cell_size must be positive");
        if occupied.len() != width * height {
            return Err(ShapeError::MalformedInput(format!(
                "cell count {} does not match {width}x{height}",
                occupied.len()
            )));
        }
        if !occupied.iter().any(|&c| c) {
            return Err(ShapeError::EmptyShape);
        }
        Ok(GridShape {
            width,
            height,
            cell_size,
            origin,
            occupied,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    /// Rebase the shape at a new world origin. Analysis results are
    /// translation invariant; only `contains` and lattice anchoring move.
    pub fn with_origin(mut self, origin: Vec2) -> Self {
        self.origin = origin;
        self
    }

    pub fn cell(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height && self.occupied[y * self.width + x]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&c| c).count()
    }

    /// World coordinate of the center of cell (x, y).
    pub fn cell_center(&self, x: usize, y: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + (x as f64 + 0.5) * self.cell_size,
            self.origin.y + (y as f64 + 0.5) * self.cell_size,
        )
    }

    /// True iff `p` maps to an occupied cell. Points outside the grid are
    /// outside the shape. Cells are half-open: [x, x + cell_size).
    pub fn contains(&self, p: Vec2) -> bool {
        let fx = (p.x - self.origin.x) / self.cell_size;
        let fy = (p.y - self.origin.y) / self.cell_size;
        if fx < 0.0 || fy < 0.0 {
            return false;
        }
        let (cx, cy) = (fx.floor() as usize, fy.floor() as usize);
        self.cell(cx, cy)
    }

    /// Number of empty components (8-connectivity) that do not touch the
    /// grid border. 0 means the shape is solid.
    pub fn count_holes(&self) -> usize {
        let (w, h) = (self.width, self.height);
        let mut visited = vec![false; w * h];
        let mut stack = Vec::new();

        // Flood the border-connected empty region first.
        for x in 0..w {
            for y in [0, h - 1] {
                if !self.cell(x, y) && !visited[y * w + x] {
                    visited[y * w + x] = true;
                    stack.push((x, y));
                }
            }
        }
        for y in 0..h {
            for x in [0, w - 1] {
                if !self.cell(x, y) && !visited[y * w + x] {
                    visited[y * w + x] = true;
                    stack.push((x, y));
                }
            }
        }
        self.flood_empty_8(&mut visited, &mut stack);

        // Remaining unvisited empty cells form the holes.
        let mut holes = 0;
        for y in 0..h {
            for x in 0..w {
                if !self.cell(x, y) && !visited[y * w + x] {
                    holes += 1;
                    visited[y * w + x] = true;
                    stack.push((x, y));
                    self.flood_empty_8(&mut visited, &mut stack);
                }
            }
        }
        holes
    }

    fn flood_empty_8(&self, visited: &mut [bool], stack: &mut Vec<(usize, usize)>) {
        let (w, h) = (self.width as isize, self.height as isize);
        while let Some((x, y)) = stack.pop() {
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    let idx = ny * self.width + nx;
                    if !self.cell(nx, ny) && !visited[idx] {
                        visited[idx] = true;
                        stack.push((nx, ny));
                    }
                }
            }
        }
    }

    /// True iff the occupied cells form one 4-connected component.
    pub fn is_connected(&self) -> bool {
        let w = self.width;
        let start = match self.occupied.iter().position(|&c| c) {
            Some(i) => i,
            None => return false,
        };
        let mut visited = vec![false; self.occupied.len()];
        visited[start] = true;
        let mut stack = vec![(start % w, start / w)];
        let mut seen = 1usize;
        while let Some((x, y)) = stack.pop() {
            let mut neighbors = [(0usize, 0usize); 4];
            let mut n = 0;
            if x > 0 {
                neighbors[n] = (x - 1, y);
                n += 1;
            }
            if y > 0 {
                neighbors[n] = (x, y - 1);
                n += 1;
            }
            if x + 1 < self.width {
                neighbors[n] = (x + 1, y);
                n += 1;
            }
            if y + 1 < self.height {
                neighbors[n] = (x, y + 1);
                n += 1;
            }
            for &(nx, ny) in &neighbors[..n] {
                let idx = ny * w + nx;
                if self.cell(nx, ny) && !visited[idx] {
                    visited[idx] = true;
                    seen += 1;
                    stack.push((nx, ny));
                }
            }
        }
        seen == self.occupied_count()
    }

    /// Count the sites of a hexagonal lattice of the given pitch, anchored at
    /// the shape origin, whose centers lie in occupied cells and whose full
    /// disc (diameter = pitch) lies inside the occupied region.
    ///
    /// Deterministic, cheap, and an under-approximation of optimal packing.
    pub fn capacity(&self, pitch: f64) -> usize {
        self.capacity_sites(pitch).len()
    }

    /// The four root sites of the packing lattice: the first two sites of
    /// each of the two lowest rows, a compact non-collinear cluster in the
    /// origin corner. Fewer when the lattice is that small.
    pub fn packing_roots(&self, pitch: f64) -> Vec<Vec2> {
        let sites = self.capacity_sites(pitch);
        let mut rows: Vec<f64> = sites.iter().map(|s| s.y).collect();
        rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rows.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let mut roots = Vec::new();
        for &row_y in rows.iter().take(2) {
            let mut row: Vec<Vec2> = sites
                .iter()
                .filter(|s| (s.y - row_y).abs() < 1e-9)
                .copied()
                .collect();
            row.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
            roots.extend(row.into_iter().take(2));
        }
        roots.truncate(4);
        roots
    }

    /// The lattice sites counted by `capacity`, in row-major lattice order.
    pub fn capacity_sites(&self, pitch: f64) -> Vec<Vec2> {
        assert!(pitch > 0.0, "pitch must be positive");
        let radius = pitch / 2.0;
        let row_step = pitch * 3f64.sqrt() / 2.0;
        let max_x = self.width as f64 * self.cell_size;
        let max_y = self.height as f64 * self.cell_size;

        let mut sites = Vec::new();
        let mut j = 0usize;
        loop {
            let y = j as f64 * row_step;
            if y > max_y {
                break;
            }
            let x_off = if j % 2 == 1 { pitch / 2.0 } else { 0.0 };
            let mut i = 0usize;
            loop {
                let x = x_off + i as f64 * pitch;
                if x > max_x {
                    break;
                }
                let center = Vec2::new(self.origin.x + x, self.origin.y + y);
                if self.contains(center) && self.disc_inside(center, radius) {
                    sites.push(center);
                }
                i += 1;
            }
            j += 1;
        }
        sites
    }

    /// True iff the closed disc lies inside the union of occupied cells.
    /// Tangency to the region boundary counts as inside.
    fn disc_inside(&self, center: Vec2, radius: f64) -> bool {
        const EPS: f64 = 1e-12;
        let rel = center - self.origin;
        let max_x = self.width as f64 * self.cell_size;
        let max_y = self.height as f64 * self.cell_size;
        if rel.x - radius < -EPS
            || rel.y - radius < -EPS
            || rel.x + radius > max_x + EPS
            || rel.y + radius > max_y + EPS
        {
            return false;
        }
        let lo_x = ((rel.x - radius) / self.cell_size).floor().max(0.0) as usize;
        let hi_x = (((rel.x + radius) / self.cell_size).ceil() as usize).min(self.width);
        let lo_y = ((rel.y - radius) / self.cell_size).floor().max(0.0) as usize;
        let hi_y = (((rel.y + radius) / self.cell_size).ceil() as usize).min(self.height);
        for cy in lo_y..hi_y {
            for cx in lo_x..hi_x {
                if self.cell(cx, cy) {
                    continue;
                }
                // Distance from disc center to the empty cell's rectangle.
                let rx0 = cx as f64 * self.cell_size;
                let ry0 = cy as f64 * self.cell_size;
                let dx = (rx0 - rel.x).max(rel.x - (rx0 + self.cell_size)).max(0.0);
                let dy = (ry0 - rel.y).max(rel.y - (ry0 + self.cell_size)).max(0.0);
                if (dx * dx + dy * dy).sqrt() < radius - EPS {
                    return false;
                }
            }
        }
        true
    }
}

/// Parse a shape from text. `cell_size` comes from the scenario config.
pub fn load_shape(text: &str, cell_size: f64) -> Result<GridShape, ShapeError> {
    let first = text.chars().find(|c| !c.is_whitespace());
    match first {
        Some('P') => parse_pbm(text, cell_size),
        Some(_) => parse_ascii(text, cell_size),
        None => Err(ShapeError::EmptyShape),
    }
}

fn parse_pbm(text: &str, cell_size: f64) -> Result<GridShape, ShapeError> {
    // Tokenize, honoring '#' comments through end of line.
    let mut tokens: Vec<&str> = Vec::new();
    for line in text.lines() {
        let line = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        };
        tokens.extend(line.split_whitespace());
    }
    let mut it = tokens.into_iter();
    match it.next() {
        Some("P1") => {}
        Some(other) => {
            return Err(ShapeError::MalformedInput(format!(
                "unsupported bitmap magic '{other}', expected P1"
            )))
        }
        None => return Err(ShapeError::MalformedInput("empty bitmap".into())),
    }
    let parse_dim = |tok: Option<&str>, name: &str| -> Result<usize, ShapeError> {
        tok.ok_or_else(|| ShapeError::MalformedInput(format!("missing {name}")))?
            .parse::<usize>()
            .map_err(|_| ShapeError::MalformedInput(format!("bad {name}")))
    };
    let width = parse_dim(it.next(), "width")?;
    let height = parse_dim(it.next(), "height")?;
    if width == 0 || height == 0 {
        return Err(ShapeError::EmptyShape);
    }
    // Cells may be whitespace-separated or contiguous digit runs.
    let mut cells = Vec::with_capacity(width * height);
    for tok in it {
        for ch in tok.chars() {
            match ch {
                '0' => cells.push(false),
                '1' => cells.push(true),
                _ => {
                    return Err(ShapeError::MalformedInput(format!(
                        "non-binary cell '{ch}'"
                    )))
                }
            }
        }
    }
    if cells.len() != width * height {
        return Err(ShapeError::MalformedInput(format!(
            "expected {} cells, found {}",
            width * height,
            cells.len()
        )));
    }
    GridShape::new(width, height, cell_size, Vec2::ZERO, cells)
}

fn parse_ascii(text: &str, cell_size: f64) -> Result<GridShape, ShapeError> {
    let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if rows.is_empty() {
        return Err(ShapeError::EmptyShape);
    }
    let width = rows[0].chars().count();
    let mut cells = Vec::with_capacity(width * rows.len());
    for row in &rows {
        if row.chars().count() != width {
            return Err(ShapeError::MalformedInput("ragged rows".into()));
        }
        for ch in row.chars() {
            match ch {
                '#' => cells.push(true),
                '.' => cells.push(false),
                _ => {
                    return Err(ShapeError::MalformedInput(format!(
                        "unexpected grid character '{ch}'"
                    )))
                }
            }
        }
    }
    GridShape::new(width, rows.len(), cell_size, Vec2::ZERO, cells)
}
