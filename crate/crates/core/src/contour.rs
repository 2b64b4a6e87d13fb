//! Conversion between binary masks and closed polygons.
//!
//! Polygons live on the pixel-centre lattice: vertex `(x, y)` is the centre of
//! pixel `(x, y)`, so a full 4x4 mask becomes the square `(0,0)-(3,3)`.
//! Rasterisation marks a pixel as foreground when its centre lies on any edge
//! or has odd even-odd parity over all polygons together. With that rule the
//! rings emitted by [`mask_to_contours`] (one outer ring per 8-connected
//! component, one ring per enclosed hole) reproduce the input mask exactly.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::mask::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }
}

/// A closed ring; the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Twice the shoelace area; positive for counterclockwise order in
    /// pixel coordinates (x right, y down, as in the math convention).
    pub fn signed_area2(&self) -> i64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                a.x as i64 * b.y as i64 - b.x as i64 * a.y as i64
            })
            .sum()
    }

    pub fn translate(&mut self, dx: i32, dy: i32) {
        for v in &mut self.vertices {
            v.x += dx;
            v.y += dy;
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContourOptions {
    /// Douglas-Peucker tolerance in pixels. `None` keeps exact boundaries.
    pub simplify_tolerance: Option<f64>,
}

/// Traces every 8-connected component of `mask` into an outer ring plus
/// one ring per hole. Outer rings are counterclockwise, hole rings clockwise.
pub fn mask_to_contours(mask: &BinaryMask) -> Result<Vec<Polygon>> {
    mask_to_contours_with(mask, &ContourOptions::default())
}

pub fn mask_to_contours_with(mask: &BinaryMask, opts: &ContourOptions) -> Result<Vec<Polygon>> {
    let bb = mask.bbox().ok_or(Error::EmptyMask)?;
    let grid = Grid::from_mask(mask, bb.x0, bb.y0, bb.width(), bb.height());
    let rings = grid.trace_all();
    let (ox, oy) = (bb.x0 as i32 - 1, bb.y0 as i32 - 1);
    Ok(rings
        .into_iter()
        .map(|(mut ring, hole)| {
            ring = remove_collinear(ring);
            if let Some(tol) = opts.simplify_tolerance.filter(|t| *t > 0.0) {
                ring = douglas_peucker_ring(&ring, tol);
            }
            let mut poly = Polygon::new(ring);
            let area = poly.signed_area2();
            if (hole && area > 0) || (!hole && area < 0) {
                poly.vertices[1..].reverse();
            }
            poly.translate(ox, oy);
            poly
        })
        .collect())
}

const FG_UNLABELED: i32 = -1;
const BG_UNLABELED: i32 = 0;

// Clockwise on screen (y down), starting east.
const DIRS: [(i32, i32); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

fn dir_index(dx: i32, dy: i32) -> usize {
    DIRS.iter()
        .position(|&d| d == (dx, dy))
        .expect("neighbour offset")
}

/// Labelled working copy of the foreground bounding box, padded by one
/// background pixel on every side. Foreground labels are positive,
/// background labels negative (below -1).
struct Grid {
    w: i32,
    h: i32,
    labels: Vec<i32>,
}

impl Grid {
    fn from_mask(mask: &BinaryMask, x0: u32, y0: u32, bw: u32, bh: u32) -> Self {
        let w = bw as i32 + 2;
        let h = bh as i32 + 2;
        let mut labels = vec![BG_UNLABELED; (w * h) as usize];
        for y in 0..bh {
            for x in 0..bw {
                if mask.get(x0 + x, y0 + y) {
                    labels[((y as i32 + 1) * w + x as i32 + 1) as usize] = FG_UNLABELED;
                }
            }
        }
        Grid { w, h, labels }
    }

    #[inline]
    fn at(&self, x: i32, y: i32) -> i32 {
        if x < 0 || y < 0 || x >= self.w || y >= self.h {
            return i32::MIN;
        }
        self.labels[(y * self.w + x) as usize]
    }

    /// Returns rings in local coordinates, each tagged with `true` for holes.
    fn trace_all(mut self) -> Vec<(Vec<Point>, bool)> {
        // 8-connected foreground components, numbered 1.. in raster order of first pixel.
        let mut fg_first = Vec::new();
        let mut bg_first = Vec::new();
        let mut queue = VecDeque::new();
        for y in 0..self.h {
            for x in 0..self.w {
                let v = self.at(x, y);
                if v == FG_UNLABELED {
                    let id = fg_first.len() as i32 + 1;
                    fg_first.push(Point::new(x, y));
                    self.flood(x, y, FG_UNLABELED, id, &DIRS, &mut queue);
                } else if v == BG_UNLABELED {
                    let id = -(bg_first.len() as i32) - 2;
                    bg_first.push(Point::new(x, y));
                    self.flood(x, y, BG_UNLABELED, id, &[(1, 0), (0, 1), (-1, 0), (0, -1)], &mut queue);
                }
            }
        }

        // Hole regions: every background component except the padded outside
        // (which owns the first pixel). The pixel above a hole's first pixel
        // belongs to the enclosing component.
        let mut holes_of: Vec<Vec<Point>> = vec![Vec::new(); fg_first.len()];
        for first in bg_first.iter().skip(1) {
            let parent = self.at(first.x, first.y - 1);
            debug_assert!(parent > 0);
            holes_of[(parent - 1) as usize].push(*first);
        }

        let mut rings = Vec::new();
        for (ci, start) in fg_first.iter().enumerate() {
            let comp = ci as i32 + 1;
            let outer = self.follow(comp, *start, Point::new(start.x - 1, start.y));
            rings.push((outer, false));
            for hole in &holes_of[ci] {
                let s = Point::new(hole.x, hole.y - 1);
                rings.push((self.follow(comp, s, *hole), true));
            }
        }
        rings
    }

    fn flood(
        &mut self,
        x: i32,
        y: i32,
        from: i32,
        to: i32,
        nbrs: &[(i32, i32)],
        queue: &mut VecDeque<(i32, i32)>,
    ) {
        self.labels[(y * self.w + x) as usize] = to;
        queue.push_back((x, y));
        while let Some((cx, cy)) = queue.pop_front() {
            for &(dx, dy) in nbrs {
                let (nx, ny) = (cx + dx, cy + dy);
                if self.at(nx, ny) == from {
                    self.labels[(ny * self.w + nx) as usize] = to;
                    queue.push_back((nx, ny));
                }
            }
        }
    }

    /// Border following around component `comp`, starting at `start` with
    /// background neighbour `back` that lies in the region being bounded.
    fn follow(&self, comp: i32, start: Point, back: Point) -> Vec<Point> {
        let inside = |p: Point| self.at(p.x, p.y) == comp;
        let nbr = |c: Point, d: usize| Point::new(c.x + DIRS[d].0, c.y + DIRS[d].1);

        // Clockwise search from the background neighbour for the first member.
        let d0 = dir_index(back.x - start.x, back.y - start.y);
        let first = (1..=8)
            .map(|k| (d0 + k) % 8)
            .map(|d| nbr(start, d))
            .find(|&p| inside(p));
        let Some(first) = first else {
            return vec![start];
        };

        let mut ring = Vec::new();
        let mut prev = first;
        let mut cur = start;
        loop {
            // Counterclockwise search around `cur`, beginning after `prev`.
            let dp = dir_index(prev.x - cur.x, prev.y - cur.y);
            let next = (1..=8)
                .map(|k| (dp + 8 - k) % 8)
                .map(|d| nbr(cur, d))
                .find(|&p| inside(p))
                .expect("component with more than one pixel has a neighbour");
            ring.push(cur);
            if next == start && cur == first {
                break;
            }
            prev = cur;
            cur = next;
        }
        ring
    }
}

/// Drops vertices where the walk continues straight on; reversals are kept.
fn remove_collinear(ring: Vec<Point>) -> Vec<Point> {
    let n = ring.len();
    if n < 3 {
        return ring;
    }
    let step = |a: Point, b: Point| ((b.x - a.x).signum(), (b.y - a.y).signum());
    let keep: Vec<bool> = (0..n)
        .map(|i| {
            let p = ring[(i + n - 1) % n];
            let c = ring[i];
            let q = ring[(i + 1) % n];
            step(p, c) != step(c, q)
        })
        .collect();
    let start = (0..n).find(|&i| keep[i]).unwrap_or(0);
    (0..n)
        .map(|k| (start + k) % n)
        .filter(|&i| keep[i])
        .map(|i| ring[i])
        .collect()
}

fn douglas_peucker_ring(ring: &[Point], tol: f64) -> Vec<Point> {
    if ring.len() < 4 {
        return ring.to_vec();
    }
    let mut closed = ring.to_vec();
    closed.push(ring[0]);
    let mut keep = vec![false; closed.len()];
    keep[0] = true;
    *keep.last_mut().unwrap() = true;
    dp_recurse(&closed, 0, closed.len() - 1, tol, &mut keep);
    let out: Vec<Point> = closed[..closed.len() - 1]
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(p, _)| *p)
        .collect();
    if out.len() < 3 {
        ring.to_vec()
    } else {
        out
    }
}

fn dp_recurse(pts: &[Point], a: usize, b: usize, tol: f64, keep: &mut [bool]) {
    if b <= a + 1 {
        return;
    }
    let (pa, pb) = (pts[a], pts[b]);
    let (dx, dy) = ((pb.x - pa.x) as f64, (pb.y - pa.y) as f64);
    let len = dx.hypot(dy);
    let mut best = (0.0, a);
    for (i, p) in pts.iter().enumerate().take(b).skip(a + 1) {
        let (px, py) = ((p.x - pa.x) as f64, (p.y - pa.y) as f64);
        let d = if len == 0.0 {
            px.hypot(py)
        } else {
            (px * dy - py * dx).abs() / len
        };
        if d > best.0 {
            best = (d, i);
        }
    }
    if best.0 > tol {
        keep[best.1] = true;
        dp_recurse(pts, a, best.1, tol, keep);
        dp_recurse(pts, best.1, b, tol, keep);
    }
}

/// Rasterises polygons with the even-odd rule; pixel centres on an edge count
/// as inside. Vertices must lie in `[0,width) x [0,height)`.
pub fn contours_to_mask(polygons: &[Polygon], width: u32, height: u32) -> Result<BinaryMask> {
    for poly in polygons {
        for v in &poly.vertices {
            if v.x < 0 || v.y < 0 || v.x as u32 >= width || v.y as u32 >= height {
                return Err(Error::OutOfBounds {
                    x: v.x as i64,
                    y: v.y as i64,
                    width,
                    height,
                });
            }
        }
    }
    let mut mask = BinaryMask::new(width, height);

    // crossings[row] holds x-intersections as (numerator, denominator > 0)
    let mut crossings: Vec<Vec<(i64, i64)>> = vec![Vec::new(); height as usize];
    for poly in polygons {
        let n = poly.vertices.len();
        for i in 0..n {
            let a = poly.vertices[i];
            let b = poly.vertices[(i + 1) % n];
            mark_segment(&mut mask, a, b);
            if a.y == b.y {
                continue;
            }
            let (lo, hi) = if a.y < b.y { (a, b) } else { (b, a) };
            let (dx, dy) = ((hi.x - lo.x) as i64, (hi.y - lo.y) as i64);
            for row in lo.y..hi.y {
                let num = lo.x as i64 * dy + (row - lo.y) as i64 * dx;
                crossings[row as usize].push((num, dy));
            }
        }
    }

    for (row, xs) in crossings.iter_mut().enumerate() {
        if xs.is_empty() {
            continue;
        }
        xs.sort_by(|a, b| (a.0 as i128 * b.1 as i128).cmp(&(b.0 as i128 * a.1 as i128)));
        for pair in xs.chunks_exact(2) {
            // pixels px with left <= px < right
            let left = ceil_div(pair[0].0, pair[0].1).max(0);
            let right = ceil_div(pair[1].0, pair[1].1).min(width as i64);
            for px in left..right {
                mask.set(px as u32, row as u32, true);
            }
        }
    }
    Ok(mask)
}

fn ceil_div(num: i64, den: i64) -> i64 {
    -((-num).div_euclid(den))
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Sets every lattice point on segment `a`-`b`.
fn mark_segment(mask: &mut BinaryMask, a: Point, b: Point) {
    let (dx, dy) = ((b.x - a.x) as i64, (b.y - a.y) as i64);
    let g = gcd(dx, dy);
    if g == 0 {
        mask.set(a.x as u32, a.y as u32, true);
        return;
    }
    let (sx, sy) = (dx / g, dy / g);
    for k in 0..=g {
        mask.set((a.x as i64 + sx * k) as u32, (a.y as i64 + sy * k) as u32, true);
    }
}
