//! Connectivity filtering of binary masks.
//!
//! The connectivity filter scores every white pixel with the pixel count
//! of its connected component, so tiny speckle components can be removed
//! by thresholding the scores while large vessel trees survive. The
//! local-sensitive variant additionally spends a tolerance budget to
//! search past small gaps while traversing: when a component frontier is
//! exhausted, rings of increasing grid distance around gap pixels are
//! inspected for unvisited white pixels, and a find paints the straight
//! segment between the boundary and the found pixel white, merging the
//! two components.
//!
//! Grid distance is the weighted combination of a Minkowski term and a
//! Chebyshev term ([`rodrigues_distance`]); "ring k" denotes all offsets
//! at the k-th smallest distinct nonzero distance value. Under the
//! default weights (w1 = w2 = p = 1) ring 1 is the 4-neighborhood
//! (distance 2) and ring 2 the diagonal neighbors (distance 3).

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, GrayImage};
use crate::Scalar;

/// Per-pixel connectivity scores. Scores are unbounded counts; zero marks
/// exactly the pixels that are background in the (possibly repaired) mask.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ScoreMap {
    width: u32,
    height: u32,
    data: Vec<u32>,
}

impl ScoreMap {
    /// Wraps a row-major score buffer; `data.len()` must equal
    /// `width * height`.
    pub fn from_raw(width: u32, height: u32, data: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width as usize * height as usize {
            return Err(Error::InvalidRaster(format!(
                "score buffer length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u32 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y as usize * self.width as usize + x as usize]
    }

    /// Row-major score buffer.
    pub fn data(&self) -> &[u32] {
        &self.data
    }
}

/// Flood connectivity of the filters: ring 1 only (axis neighbors) or
/// rings 1 and 2 (axis + diagonal).
#[derive(Copy, Clone, PartialEq, Eq, Debug, Default)]
pub enum Connectivity {
    Four,
    /// Default: one-pixel-wide diagonal vessels stay connected.
    #[default]
    Eight,
}

impl Connectivity {
    /// Number of rings the flood expands through.
    fn rings(self) -> u32 {
        match self {
            Connectivity::Four => 1,
            Connectivity::Eight => 2,
        }
    }

    /// Parses the conventional neighbor count (4 or 8).
    pub fn from_neighbor_count(n: u32) -> Result<Self> {
        match n {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(Error::InvalidParams(format!(
                "connectivity must be 4 or 8, got {other}"
            ))),
        }
    }

    pub fn neighbor_count(self) -> u32 {
        match self {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

/// Weights of the grid distance: `w1 * minkowski_p + w2 * chebyshev`.
#[derive(Copy, Clone, PartialEq, Debug)]
pub struct DistanceParams<T> {
    pub w1: T,
    pub w2: T,
    pub p: T,
}

impl<T: Scalar> Default for DistanceParams<T> {
    /// w1 = w2 = p = 1: Manhattan plus Chebyshev.
    fn default() -> Self {
        Self { w1: T::one(), w2: T::one(), p: T::one() }
    }
}

impl<T: Scalar> DistanceParams<T> {
    pub fn validate(&self) -> Result<()> {
        // Positive-form checks so NaN parameters fail validation too.
        let weights_ok = self.w1 >= T::zero() && self.w2 >= T::zero();
        if !weights_ok {
            return Err(Error::InvalidParams("distance weights must be >= 0".into()));
        }
        if self.w1 == T::zero() && self.w2 == T::zero() {
            return Err(Error::InvalidParams("distance weights must not both be zero".into()));
        }
        let exponent_ok = self.p >= T::one();
        if !exponent_ok {
            return Err(Error::InvalidParams("distance exponent p must be >= 1".into()));
        }
        Ok(())
    }
}

/// Grid distance between two pixel positions:
/// `w1 * (|dx|^p + |dy|^p)^(1/p) + w2 * max(|dx|, |dy|)`.
pub fn rodrigues_distance<T: Scalar>(a: (i32, i32), b: (i32, i32), params: &DistanceParams<T>) -> T {
    let dx = T::from_i32((a.0 - b.0).abs()).expect("coordinate delta");
    let dy = T::from_i32((a.1 - b.1).abs()).expect("coordinate delta");
    let minkowski = (dx.powf(params.p) + dy.powf(params.p)).powf(params.p.recip());
    params.w1 * minkowski + params.w2 * dx.max(dy)
}

/// Orders offsets clockwise starting from straight up; `(0, -1)` is up
/// because y grows downward. Total over any set of offsets that contains
/// no two collinear same-direction vectors (true within any one ring,
/// since the distance is positively homogeneous).
fn clockwise_from_up(a: (i32, i32), b: (i32, i32)) -> Ordering {
    // Half 0 is the right half-plane including up; half 1 the left
    // including down.
    let half = |v: (i32, i32)| u8::from(!(v.0 > 0 || (v.0 == 0 && v.1 < 0)));
    half(a).cmp(&half(b)).then_with(|| {
        let cross = a.0 as i64 * b.1 as i64 - a.1 as i64 * b.0 as i64;
        // Positive cross product means a precedes b clockwise.
        0i64.cmp(&cross)
    })
}

/// Orders offsets by descending cosine alignment with `dir`, ties broken
/// clockwise from up. Pure integer arithmetic: cosines are compared by
/// sign first, then by cross-multiplied squares, so the order is exact.
/// A zero `dir` (no momentum) makes every alignment tie, leaving the
/// clockwise default.
fn momentum_order(dir: (i32, i32), a: (i32, i32), b: (i32, i32)) -> Ordering {
    let dot = |v: (i32, i32)| dir.0 as i64 * v.0 as i64 + dir.1 as i64 * v.1 as i64;
    let norm2 = |v: (i32, i32)| v.0 as i64 * v.0 as i64 + v.1 as i64 * v.1 as i64;
    let (da, db) = (dot(a), dot(b));
    let aligned = match (da.signum(), db.signum()) {
        (sa, sb) if sa != sb => sb.cmp(&sa),
        (0, _) => Ordering::Equal,
        (s, _) => {
            // cos_a > cos_b  <=>  da^2 * |b|^2 > db^2 * |a|^2 (same sign s;
            // the inequality flips when both dots are negative).
            let qa = da as i128 * da as i128 * norm2(b) as i128;
            let qb = db as i128 * db as i128 * norm2(a) as i128;
            if s > 0 {
                qb.cmp(&qa)
            } else {
                qa.cmp(&qb)
            }
        }
    };
    aligned.then_with(|| clockwise_from_up(a, b))
}

/// Offsets of rings 1..=n, each sorted clockwise from up.
struct RingTable {
    rings: Vec<Vec<(i32, i32)>>,
}

impl RingTable {
    /// Enumerates the window of Chebyshev radius `max_ring`, which is
    /// guaranteed to contain every offset of the first `max_ring` rings:
    /// the axis offsets alone provide `max_ring` distinct values of at
    /// most `(w1+w2) * max_ring`, while everything outside the window is
    /// strictly farther.
    fn build<T: Scalar>(params: &DistanceParams<T>, max_ring: u32) -> Self {
        let r = max_ring as i32;
        let mut entries: Vec<(T, (i32, i32))> = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if (dx, dy) == (0, 0) {
                    continue;
                }
                entries.push((rodrigues_distance((0, 0), (dx, dy), params), (dx, dy)));
            }
        }
        entries.sort_by(|a, b| {
            a.0.partial_cmp(&b.0).expect("finite distance").then_with(|| clockwise_from_up(a.1, b.1))
        });
        let mut rings = Vec::with_capacity(max_ring as usize);
        let mut i = 0;
        while i < entries.len() && rings.len() < max_ring as usize {
            let d = entries[i].0;
            let mut ring = Vec::new();
            while i < entries.len() && entries[i].0 == d {
                ring.push(entries[i].1);
                i += 1;
            }
            rings.push(ring);
        }
        debug_assert_eq!(rings.len(), max_ring as usize);
        Self { rings }
    }

    fn ring(&self, k: u32) -> &[(i32, i32)] {
        &self.rings[(k - 1) as usize]
    }
}

/// In-bounds pixels whose grid distance from `center` equals the k-th
/// smallest distinct nonzero value, ordered clockwise from up.
pub fn ring_neighbors<T: Scalar>(
    center: (i32, i32),
    ring: u32,
    params: &DistanceParams<T>,
    bounds: (u32, u32),
) -> Vec<(i32, i32)> {
    assert!(ring >= 1, "ring index starts at 1");
    let table = RingTable::build(params, ring);
    table
        .ring(ring)
        .iter()
        .map(|&(dx, dy)| (center.0 + dx, center.1 + dy))
        .filter(|&(x, y)| x >= 0 && y >= 0 && (x as i64) < bounds.0 as i64 && (y as i64) < bounds.1 as i64)
        .collect()
}

/// Per-direction reorderings of one ring's offsets.
type DirectionOrders = HashMap<(i32, i32), Vec<(i32, i32)>>;

/// Ring offsets reordered per incoming travel direction, memoized: the
/// flood revisits the same few directions millions of times on large
/// masks.
struct MomentumCache {
    table: RingTable,
    cache: Vec<DirectionOrders>,
}

impl MomentumCache {
    fn new(table: RingTable) -> Self {
        let cache = (0..table.rings.len()).map(|_| HashMap::new()).collect();
        Self { table, cache }
    }

    fn ordered(&mut self, ring: u32, dir: (i32, i32)) -> Vec<(i32, i32)> {
        if dir == (0, 0) {
            return self.table.ring(ring).to_vec();
        }
        self.cache[(ring - 1) as usize]
            .entry(dir)
            .or_insert_with(|| {
                let mut v = self.table.ring(ring).to_vec();
                v.sort_by(|a, b| momentum_order(dir, *a, *b));
                v
            })
            .clone()
    }
}

/// Axis neighbors (ring 1 of the default distance), clockwise from up.
const RING1: [(i32, i32); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];
/// Diagonal neighbors (ring 2 of the default distance), clockwise from up.
const RING2: [(i32, i32); 4] = [(1, -1), (1, 1), (-1, 1), (-1, -1)];

/// Scores every white pixel with the pixel count of its connected
/// component; background pixels score 0. Iterative flood fill with an
/// explicit work stack, so image-scale components cannot exhaust call
/// depth.
pub fn connectivity_filter(mask: &BinaryMask, connectivity: Connectivity) -> ScoreMap {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let px = mask.pixels();
    let mut scores = vec![0u32; w * h];
    let mut visited = vec![false; w * h];
    let mut stack: Vec<usize> = Vec::new();
    let mut members: Vec<usize> = Vec::new();
    let use_diagonals = connectivity == Connectivity::Eight;

    for seed in 0..w * h {
        if px[seed] == 0 || visited[seed] {
            continue;
        }
        visited[seed] = true;
        members.clear();
        members.push(seed);
        stack.push(seed);
        while let Some(p) = stack.pop() {
            let (x, y) = ((p % w) as i64, (p / w) as i64);
            let neighborhoods: &[&[(i32, i32)]] =
                if use_diagonals { &[&RING1, &RING2] } else { &[&RING1] };
            for ring in neighborhoods {
                for &(dx, dy) in *ring {
                    let (nx, ny) = (x + dx as i64, y + dy as i64);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let q = ny as usize * w + nx as usize;
                    if px[q] != 0 && !visited[q] {
                        visited[q] = true;
                        members.push(q);
                        stack.push(q);
                    }
                }
            }
        }
        let size = members.len() as u32;
        for &m in &members {
            scores[m] = size;
        }
    }
    ScoreMap { width: mask.width(), height: mask.height(), data: scores }
}

/// Renders scores as an 8-bit image: `min(score, 255)`.
pub fn render_scores(scores: &ScoreMap) -> GrayImage {
    let data = scores.data.iter().map(|&s| s.min(255) as u8).collect();
    GrayImage::from_raw(scores.width, scores.height, data).expect("score map has image dimensions")
}

/// Binarizes a score map: white iff score is strictly greater than `t`.
/// With connectivity-filter scores, `t = 1` removes exactly the
/// single-pixel components.
pub fn score_threshold(scores: &ScoreMap, t: u32) -> BinaryMask {
    let data = scores.data.iter().map(|&s| u8::from(s > t)).collect();
    BinaryMask::from_raw(scores.width, scores.height, data).expect("score map has image dimensions")
}

/// Parameters of the local-sensitive connectivity filter.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub struct LscfParams {
    /// Tolerance budget: total non-white pixels a chain of searches may
    /// inspect before the branch terminates; reset on every find.
    pub max_score: u32,
    /// Ring search limit: rings 1..=max_dist-1 around a gap pixel are
    /// searched (the loop guard is `d < max_dist`).
    pub max_dist: u32,
    /// Flood connectivity.
    pub connectivity: Connectivity,
    /// Score threshold `t` the pipeline applies after filtering; carried
    /// here so one parameter block describes the whole stage.
    pub score_threshold: u32,
}

impl Default for LscfParams {
    /// The published operating point: budget 350, ring limit 4,
    /// 8-connectivity, score threshold 1.
    fn default() -> Self {
        Self {
            max_score: 350,
            max_dist: 4,
            connectivity: Connectivity::Eight,
            score_threshold: 1,
        }
    }
}

impl LscfParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_dist < 1 {
            return Err(Error::InvalidParams("max_dist must be >= 1".into()));
        }
        Ok(())
    }
}

/// Result of the local-sensitive connectivity filter.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LscfOutput {
    /// Input mask plus every bridged gap pixel (a superset of the input).
    pub repaired: BinaryMask,
    /// Component sizes over `repaired`, measured after all merging.
    pub scores: ScoreMap,
}

/// Local-sensitive connectivity filter.
///
/// Traversal: seeds scan in row-major order; each seed flood-fills its
/// component depth-first, expanding best-aligned-first relative to the
/// incoming travel direction (momentum). When the frontier is exhausted,
/// component pixels are revisited in traversal order: each boundary pixel
/// (one with a non-white flood neighbor) becomes a search origin. Entering
/// a non-white flood neighbor costs one tolerance point; rings
/// 1..=max_dist-1 around that gap pixel are then searched in ascending
/// order, candidates best-aligned-first, every inspected non-white pixel
/// costing one further point. The first unvisited white candidate ends the
/// search: the Bresenham segment from the boundary pixel to the find is
/// painted white in `repaired`, the tolerance budget resets to zero, and
/// flooding resumes from the found pixel. When the budget is exhausted
/// without a find, every remaining search terminates immediately and the
/// component is complete.
pub fn ls_connectivity_filter(mask: &BinaryMask, params: &LscfParams) -> LscfOutput {
    params.validate().expect("valid LscfParams");
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let flood_rings = params.connectivity.rings();
    let search_rings = params.max_dist - 1;
    let table =
        RingTable::build(&DistanceParams::<f64>::default(), flood_rings.max(search_rings).max(1));

    let mut state = Traversal {
        w,
        h,
        flood_rings,
        search_rings,
        max_score: params.max_score,
        repaired: mask.pixels().to_vec(),
        visited: vec![false; w * h],
        scores: vec![0u32; w * h],
        orders: MomentumCache::new(table),
        members: Vec::new(),
        stack: Vec::new(),
        batch: Vec::new(),
        tolerance: 0,
        cursor: 0,
    };

    for seed in 0..w * h {
        if mask.pixels()[seed] != 0 && !state.visited[seed] {
            state.traverse(seed);
        }
    }

    let repaired = BinaryMask::from_raw(mask.width(), mask.height(), state.repaired)
        .expect("repaired mask is {0,1}");
    let scores = ScoreMap { width: mask.width(), height: mask.height(), data: state.scores };
    LscfOutput { repaired, scores }
}

/// State of one filter invocation; `members`, `stack`, `tolerance` and
/// `cursor` are reset per component.
struct Traversal {
    w: usize,
    h: usize,
    flood_rings: u32,
    search_rings: u32,
    max_score: u32,
    repaired: Vec<u8>,
    visited: Vec<bool>,
    scores: Vec<u32>,
    orders: MomentumCache,
    /// Component pixels with their incoming travel direction, in
    /// traversal order. Doubles as the search-origin queue via `cursor`.
    members: Vec<(usize, (i32, i32))>,
    stack: Vec<(usize, (i32, i32))>,
    batch: Vec<(usize, (i32, i32))>,
    tolerance: u32,
    cursor: usize,
}

impl Traversal {
    #[inline]
    fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && x < self.w as i64 && y < self.h as i64
    }

    #[inline]
    fn coords(&self, p: usize) -> (i64, i64) {
        ((p % self.w) as i64, (p / self.w) as i64)
    }

    fn traverse(&mut self, seed: usize) {
        self.members.clear();
        self.stack.clear();
        self.tolerance = 0;
        self.cursor = 0;
        self.visited[seed] = true;
        self.members.push((seed, (0, 0)));
        self.stack.push((seed, (0, 0)));
        loop {
            self.flood();
            // With a zero budget or no search reach the tolerance
            // mechanism can never produce a find, so the output equals the
            // plain connectivity filter's.
            if self.max_score == 0 || self.search_rings == 0 {
                break;
            }
            if !self.try_bridge() {
                break;
            }
        }
        let size = self.members.len() as u32;
        for &(p, _) in &self.members {
            self.scores[p] = size;
        }
    }

    /// Expands the frontier over white pixels until exhausted. Neighbors
    /// are claimed (marked and recorded) in preference order and pushed
    /// reversed, so the depth-first pop follows the momentum of the
    /// stroke.
    fn flood(&mut self) {
        while let Some((p, dir)) = self.stack.pop() {
            let (x, y) = self.coords(p);
            for ring in 1..=self.flood_rings {
                let offsets = self.orders.ordered(ring, dir);
                for (dx, dy) in offsets {
                    let (nx, ny) = (x + dx as i64, y + dy as i64);
                    if !self.in_bounds(nx, ny) {
                        continue;
                    }
                    let q = ny as usize * self.w + nx as usize;
                    if self.repaired[q] != 0 && !self.visited[q] {
                        self.visited[q] = true;
                        self.members.push((q, (dx, dy)));
                        self.batch.push((q, (dx, dy)));
                    }
                }
            }
            while let Some(e) = self.batch.pop() {
                self.stack.push(e);
            }
        }
    }

    /// Runs tolerance searches from the remaining origins in traversal
    /// order. Returns true if a bridge was painted (flooding must
    /// resume); false if the component is complete.
    fn try_bridge(&mut self) -> bool {
        while self.cursor < self.members.len() {
            // Budget exhausted without a find: every remaining branch
            // terminates at its entry guard.
            if self.tolerance >= self.max_score {
                return false;
            }
            let (b, dir) = self.members[self.cursor];
            self.cursor += 1;
            if !self.is_boundary(b) {
                continue;
            }
            if let Some(found) = self.search_from(b, dir) {
                self.paint_bridge(b, found);
                self.tolerance = 0;
                return true;
            }
        }
        false
    }

    /// A component pixel is a search origin only while it touches the
    /// background (checked against the current repaired mask).
    fn is_boundary(&self, p: usize) -> bool {
        let (x, y) = self.coords(p);
        let neighborhoods: &[&[(i32, i32)]] =
            if self.flood_rings >= 2 { &[&RING1, &RING2] } else { &[&RING1] };
        for ring in neighborhoods {
            for &(dx, dy) in *ring {
                let (nx, ny) = (x + dx as i64, y + dy as i64);
                if self.in_bounds(nx, ny) && self.repaired[ny as usize * self.w + nx as usize] == 0 {
                    return true;
                }
            }
        }
        false
    }

    /// Search anchored at boundary pixel `b`: each non-white flood
    /// neighbor is a gap entry (one tolerance point), then rings
    /// 1..=search_rings around the gap pixel are swept for unvisited
    /// white pixels. First find wins and ends the whole search from `b`.
    fn search_from(&mut self, b: usize, b_dir: (i32, i32)) -> Option<usize> {
        let (bx, by) = self.coords(b);
        for ring in 1..=self.flood_rings {
            let entries = self.orders.ordered(ring, b_dir);
            for (dx, dy) in entries {
                let (qx, qy) = (bx + dx as i64, by + dy as i64);
                if !self.in_bounds(qx, qy) {
                    continue;
                }
                if self.repaired[qy as usize * self.w + qx as usize] != 0 {
                    continue;
                }
                if self.tolerance >= self.max_score {
                    return None;
                }
                self.tolerance += 1; // gap entry
                for d in 1..=self.search_rings {
                    let candidates = self.orders.ordered(d, (dx, dy));
                    for (ox, oy) in candidates {
                        let (cx, cy) = (qx + ox as i64, qy + oy as i64);
                        if !self.in_bounds(cx, cy) {
                            continue;
                        }
                        let c = cy as usize * self.w + cx as usize;
                        if self.repaired[c] != 0 {
                            if !self.visited[c] {
                                return Some(c);
                            }
                        } else if self.tolerance >= self.max_score {
                            return None;
                        } else {
                            self.tolerance += 1; // failed ring candidate
                        }
                    }
                }
            }
        }
        None
    }

    /// Paints the straight segment from `b` to the found pixel white and
    /// queues its fresh pixels; the found pixel is pushed last so the
    /// resumed flood continues from it.
    fn paint_bridge(&mut self, b: usize, found: usize) {
        let (bx, by) = self.coords(b);
        let (fx, fy) = self.coords(found);
        let dir = ((fx - bx) as i32, (fy - by) as i32);
        let path = bresenham_line((bx as i32, by as i32), (fx as i32, fy as i32));
        for &(x, y) in &path[1..] {
            let i = y as usize * self.w + x as usize;
            self.repaired[i] = 1;
            if !self.visited[i] {
                self.visited[i] = true;
                self.members.push((i, dir));
                self.stack.push((i, dir));
            }
        }
    }
}

/// Integer rasterization of the straight segment between two grid points;
/// both endpoints included, consecutive pixels 8-connected.
pub(crate) fn bresenham_line(a: (i32, i32), b: (i32, i32)) -> Vec<(i32, i32)> {
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy) as usize + 1);
    loop {
        out.push((x, y));
        if (x, y) == b {
            return out;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}
