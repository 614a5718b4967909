//! Domains in the plane and the masked cell grids built on them.

use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::field::PlanarField;
use crate::Point;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("grid resolution {0} is below the minimum of 8 cells per axis")]
    TooCoarse(usize),
    #[error("domain resolves to only {0} interior cells (need at least 16)")]
    Degenerate(usize),
    #[error("invalid domain: {0}")]
    Invalid(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// An axis-aligned rectangle `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub lo: Point,
    pub hi: Point,
}

impl Rect {
    pub fn new(lo: Point, hi: Point) -> Self {
        Rect { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi[0] - self.lo[0]
    }

    pub fn height(&self) -> f64 {
        self.hi[1] - self.lo[1]
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] > self.lo[0] && p[0] < self.hi[0] && p[1] > self.lo[1] && p[1] < self.hi[1]
    }
}

/// Open bounded region of the plane.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Disk { center: Point, radius: f64 },
    Rect(Rect),
    /// `{x : h(x) < level}`, clipped to `bbox`.
    Sublevel { h: Expr, level: f64, bbox: Rect },
}

impl Domain {
    pub fn disk(center: Point, radius: f64) -> Result<Domain, GeometryError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GeometryError::Invalid(format!("disk radius must be positive, got {radius}")));
        }
        Ok(Domain::Disk { center, radius })
    }

    pub fn rect(lo: Point, hi: Point) -> Result<Domain, GeometryError> {
        if !(hi[0] > lo[0] && hi[1] > lo[1]) {
            return Err(GeometryError::Invalid(format!("rectangle {lo:?}..{hi:?} is empty")));
        }
        Ok(Domain::Rect(Rect::new(lo, hi)))
    }

    /// Sublevel set `{h < level}` inside `bbox`. The box must strictly contain the
    /// set, which is checked by sampling `h` along the box edges.
    pub fn sublevel(h: Expr, level: f64, bbox: Rect) -> Result<Domain, GeometryError> {
        if !(bbox.width() > 0.0 && bbox.height() > 0.0) {
            return Err(GeometryError::Invalid("sublevel bounding box is empty".into()));
        }
        let samples = 400;
        for k in 0..=samples {
            let t = k as f64 / samples as f64;
            let x = bbox.lo[0] + t * bbox.width();
            let y = bbox.lo[1] + t * bbox.height();
            for p in [[x, bbox.lo[1]], [x, bbox.hi[1]], [bbox.lo[0], y], [bbox.hi[0], y]] {
                if h.eval(p)? <= level {
                    return Err(GeometryError::Invalid(format!(
                        "bounding box does not strictly contain the sublevel set (h({:.4}, {:.4}) <= {level})",
                        p[0], p[1]
                    )));
                }
            }
        }
        let d = Domain::Sublevel { h, level, bbox };
        Ok(d)
    }

    pub fn bounding_box(&self) -> Rect {
        match self {
            Domain::Disk { center, radius } => Rect::new(
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Domain::Rect(r) => *r,
            Domain::Sublevel { bbox, .. } => *bbox,
        }
    }

    /// Diameter of the bounding box; used as the length scale for tolerances.
    pub fn diameter(&self) -> f64 {
        let b = self.bounding_box();
        b.width().hypot(b.height())
    }

    /// True iff `p` lies in the open region. Points where the sublevel function
    /// cannot be evaluated are outside.
    pub fn contains(&self, p: Point) -> bool {
        match self {
            Domain::Disk { center, radius } => {
                (p[0] - center[0]).hypot(p[1] - center[1]) < *radius
            }
            Domain::Rect(r) => r.contains(p),
            Domain::Sublevel { h, level, bbox } => {
                bbox.contains(p) && h.eval(p).map(|v| v < *level).unwrap_or(false)
            }
        }
    }

    /// Boundary points with outward unit normals. The count is approximate for
    /// sublevel domains, whose boundary is located by scanning grid lines.
    pub fn boundary_samples(&self, samples: usize) -> Result<Vec<(Point, Point)>, GeometryError> {
        let samples = samples.max(4);
        let mut out = Vec::with_capacity(samples);
        match self {
            Domain::Disk { center, radius } => {
                for k in 0..samples {
                    let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / samples as f64;
                    let n = [th.cos(), th.sin()];
                    out.push(([center[0] + radius * n[0], center[1] + radius * n[1]], n));
                }
            }
            Domain::Rect(r) => {
                let per = r.width() * 2.0 + r.height() * 2.0;
                for k in 0..samples {
                    let mut s = per * (k as f64 + 0.5) / samples as f64;
                    if s < r.width() {
                        out.push(([r.lo[0] + s, r.lo[1]], [0.0, -1.0]));
                        continue;
                    }
                    s -= r.width();
                    if s < r.height() {
                        out.push(([r.hi[0], r.lo[1] + s], [1.0, 0.0]));
                        continue;
                    }
                    s -= r.height();
                    if s < r.width() {
                        out.push(([r.hi[0] - s, r.hi[1]], [0.0, 1.0]));
                        continue;
                    }
                    s -= r.width();
                    out.push(([r.lo[0], r.hi[1] - s], [-1.0, 0.0]));
                }
            }
            Domain::Sublevel { h, level, bbox } => {
                let lines = (samples / 4).max(2);
                let subdiv = 256;
                let f = |p: Point| h.eval(p).map(|v| v - level);
                for k in 0..lines {
                    let t = (k as f64 + 0.5) / lines as f64;
                    let horiz = |s: f64| [bbox.lo[0] + s * bbox.width(), bbox.lo[1] + t * bbox.height()];
                    let vert = |s: f64| [bbox.lo[0] + t * bbox.width(), bbox.lo[1] + s * bbox.height()];
                    for line in [&horiz as &dyn Fn(f64) -> Point, &vert] {
                        let mut prev = f(line(0.0))?;
                        for j in 1..=subdiv {
                            let s1 = j as f64 / subdiv as f64;
                            let cur = f(line(s1))?;
                            if (prev < 0.0) != (cur < 0.0) {
                                let (mut a, mut b) = ((j - 1) as f64 / subdiv as f64, s1);
                                let fa_neg = prev < 0.0;
                                for _ in 0..60 {
                                    let m = 0.5 * (a + b);
                                    if (f(line(m))? < 0.0) == fa_neg {
                                        a = m;
                                    } else {
                                        b = m;
                                    }
                                }
                                let p = line(0.5 * (a + b));
                                let g = h.grad(p)?;
                                let norm = g[0].hypot(g[1]);
                                if norm > 0.0 {
                                    out.push((p, [g[0] / norm, g[1] / norm]));
                                }
                            }
                            prev = cur;
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Result of testing `b . n < 0` along the boundary.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct InflowReport {
    pub min_flux: f64,
    pub max_flux: f64,
    /// Boundary point where `b . n` is largest.
    pub worst_point: Point,
    pub samples: usize,
    pub satisfied: bool,
}

/// Sample the boundary and report the range of `b . n`.
pub fn check_inflow(d: &Domain, b: &PlanarField, samples: usize) -> Result<InflowReport, GeometryError> {
    let pts = d.boundary_samples(samples.max(100))?;
    let mut min_flux = f64::INFINITY;
    let mut max_flux = f64::NEG_INFINITY;
    let mut worst_point = [f64::NAN; 2];
    for (p, n) in &pts {
        let v = b.eval(*p)?;
        let flux = v[0] * n[0] + v[1] * n[1];
        min_flux = min_flux.min(flux);
        if flux > max_flux {
            max_flux = flux;
            worst_point = *p;
        }
    }
    Ok(InflowReport { min_flux, max_flux, worst_point, samples: pts.len(), satisfied: max_flux < 0.0 })
}

/// Side of a cell; also the outward normal of a boundary face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    East,
    West,
    North,
    South,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::East, Side::West, Side::North, Side::South];

    pub fn normal(self) -> Point {
        match self {
            Side::East => [1.0, 0.0],
            Side::West => [-1.0, 0.0],
            Side::North => [0.0, 1.0],
            Side::South => [0.0, -1.0],
        }
    }

    fn offset(self) -> (isize, isize) {
        match self {
            Side::East => (1, 0),
            Side::West => (-1, 0),
            Side::North => (0, 1),
            Side::South => (0, -1),
        }
    }
}

/// A face between an interior cell and the exterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFace {
    /// Unknown index of the interior cell.
    pub cell: usize,
    pub side: Side,
    pub midpoint: Point,
}

/// Uniform cell grid over a bounding box with an interior mask.
#[derive(Debug, Clone)]
pub struct Grid {
    pub n1: usize,
    pub n2: usize,
    pub lo: Point,
    pub h1: f64,
    pub h2: f64,
    /// Unknown index per box cell (`j * n1 + i`), `None` outside.
    index: Vec<Option<usize>>,
    /// Box coordinates `(i, j)` per unknown.
    cells: Vec<(usize, usize)>,
    boundary: Vec<BoundaryFace>,
}

impl Grid {
    /// Mask cells by center containment and keep the largest 4-connected
    /// component, so every interior cell has an interior neighbor.
    pub fn build(d: &Domain, n: usize) -> Result<Grid, GeometryError> {
        if n < 8 {
            return Err(GeometryError::TooCoarse(n));
        }
        let bbox = d.bounding_box();
        let (n1, n2) = (n, n);
        let h1 = bbox.width() / n1 as f64;
        let h2 = bbox.height() / n2 as f64;
        let lo = bbox.lo;
        let inside: Vec<bool> = (0..n1 * n2)
            .map(|k| {
                let (i, j) = (k % n1, k / n1);
                d.contains([lo[0] + (i as f64 + 0.5) * h1, lo[1] + (j as f64 + 0.5) * h2])
            })
            .collect();

        // Largest connected component by flood fill.
        let mut label = vec![usize::MAX; n1 * n2];
        let mut best: (usize, usize) = (usize::MAX, 0);
        let mut stack = Vec::new();
        let mut next = 0;
        for start in 0..n1 * n2 {
            if !inside[start] || label[start] != usize::MAX {
                continue;
            }
            let mut size = 0;
            label[start] = next;
            stack.push(start);
            while let Some(k) = stack.pop() {
                size += 1;
                let (i, j) = ((k % n1) as isize, (k / n1) as isize);
                for s in Side::ALL {
                    let (di, dj) = s.offset();
                    let (a, b) = (i + di, j + dj);
                    if a < 0 || b < 0 || a >= n1 as isize || b >= n2 as isize {
                        continue;
                    }
                    let m = b as usize * n1 + a as usize;
                    if inside[m] && label[m] == usize::MAX {
                        label[m] = next;
                        stack.push(m);
                    }
                }
            }
            if best.0 == usize::MAX || size > best.1 {
                best = (next, size);
            }
            next += 1;
        }
        if best.0 == usize::MAX || best.1 < 16 {
            return Err(GeometryError::Degenerate(if best.0 == usize::MAX { 0 } else { best.1 }));
        }

        let mut index = vec![None; n1 * n2];
        let mut cells = Vec::with_capacity(best.1);
        for k in 0..n1 * n2 {
            if label[k] == best.0 {
                index[k] = Some(cells.len());
                cells.push((k % n1, k / n1));
            }
        }
        let mut grid = Grid { n1, n2, lo, h1, h2, index, cells, boundary: Vec::new() };
        let mut boundary = Vec::new();
        for (u, &(i, j)) in grid.cells.iter().enumerate() {
            for s in Side::ALL {
                if grid.neighbor(i, j, s).is_none() {
                    let c = grid.center(u);
                    let nrm = s.normal();
                    let midpoint = [c[0] + 0.5 * h1 * nrm[0], c[1] + 0.5 * h2 * nrm[1]];
                    boundary.push(BoundaryFace { cell: u, side: s, midpoint });
                }
            }
        }
        grid.boundary = boundary;
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_area(&self) -> f64 {
        self.h1 * self.h2
    }

    /// Total area of the interior cells.
    pub fn area(&self) -> f64 {
        self.len() as f64 * self.cell_area()
    }

    pub fn center(&self, u: usize) -> Point {
        let (i, j) = self.cells[u];
        [self.lo[0] + (i as f64 + 0.5) * self.h1, self.lo[1] + (j as f64 + 0.5) * self.h2]
    }

    pub fn coords(&self, u: usize) -> (usize, usize) {
        self.cells[u]
    }

    pub fn unknown_at(&self, i: usize, j: usize) -> Option<usize> {
        if i < self.n1 && j < self.n2 {
            self.index[j * self.n1 + i]
        } else {
            None
        }
    }

    /// Interior neighbor across side `s` of box cell `(i, j)`.
    pub fn neighbor(&self, i: usize, j: usize, s: Side) -> Option<usize> {
        let (di, dj) = s.offset();
        let a = i as isize + di;
        let b = j as isize + dj;
        if a < 0 || b < 0 {
            return None;
        }
        self.unknown_at(a as usize, b as usize)
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary
    }

    /// Spacing normal to a face on side `s`.
    pub fn spacing(&self, s: Side) -> f64 {
        match s {
            Side::East | Side::West => self.h1,
            Side::North | Side::South => self.h2,
        }
    }

    /// Unknown containing point `p`, if any.
    pub fn locate(&self, p: Point) -> Option<usize> {
        let i = ((p[0] - self.lo[0]) / self.h1).floor();
        let j = ((p[1] - self.lo[1]) / self.h2).floor();
        if i < 0.0 || j < 0.0 {
            return None;
        }
        self.unknown_at(i as usize, j as usize)
    }
}
