//! Plane and line geometry used by the continuous models and the backward
//! construction: intervals, axis-aligned rectangles, unions with exact
//! measure and uniform sampling, equal-radius disc overlap areas, and a
//! strip quadrature for uncovered-area integrals.

use crate::stream::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0).max(0.0) * (self.y1 - self.y0).max(0.0)
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.x0 <= other.x1 && other.x0 <= self.x1 && self.y0 <= other.y1 && other.y0 <= self.y1
    }

    pub fn intersect(&self, other: &Rect) -> Rect {
        Rect::new(
            self.x0.max(other.x0),
            self.y0.max(other.y0),
            self.x1.min(other.x1),
            self.y1.min(other.y1),
        )
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.x0 <= x && x <= self.x1 && self.y0 <= y && y <= self.y1
    }

    pub fn dilate(&self, by: f64) -> Rect {
        Rect::new(self.x0 - by, self.y0 - by, self.x1 + by, self.y1 + by)
    }
}

/// Union of intervals with exact length and uniform sampling.
#[derive(Debug, Clone)]
pub struct IntervalUnion {
    merged: Vec<Interval>,
    cumulative: Vec<f64>,
}

impl IntervalUnion {
    pub fn new(parts: &[Interval]) -> Self {
        let mut parts: Vec<Interval> = parts.iter().filter(|i| !i.is_empty()).cloned().collect();
        parts.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::new();
        for p in parts {
            match merged.last_mut() {
                Some(last) if p.lo <= last.hi => last.hi = last.hi.max(p.hi),
                _ => merged.push(p),
            }
        }
        let mut cumulative = Vec::with_capacity(merged.len());
        let mut acc = 0.0;
        for m in &merged {
            acc += m.len();
            cumulative.push(acc);
        }
        IntervalUnion { merged, cumulative }
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    /// Uniform point in the union.  Consumes one word.
    pub fn sample(&self, stream: &mut RandomStream) -> f64 {
        debug_assert!(self.length() > 0.0);
        let target = stream.next_uniform() * self.length();
        let idx = match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&target).unwrap())
        {
            Ok(i) => (i + 1).min(self.merged.len() - 1),
            Err(i) => i.min(self.merged.len() - 1),
        };
        let seg = &self.merged[idx];
        let before = if idx == 0 { 0.0 } else { self.cumulative[idx - 1] };
        seg.lo + (target - before).min(seg.len())
    }
}

/// Union of rectangles with exact area and uniform sampling, built by
/// coordinate compression into disjoint cells.
#[derive(Debug, Clone)]
pub struct RectUnion {
    cells: Vec<Rect>,
    cumulative: Vec<f64>,
}

impl RectUnion {
    pub fn new(parts: &[Rect]) -> Self {
        let parts: Vec<Rect> = parts.iter().filter(|r| r.area() > 0.0).cloned().collect();
        let mut xs: Vec<f64> = parts.iter().flat_map(|r| [r.x0, r.x1]).collect();
        let mut ys: Vec<f64> = parts.iter().flat_map(|r| [r.y0, r.y1]).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        let mut cells = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for wx in xs.windows(2) {
            for wy in ys.windows(2) {
                let cx = 0.5 * (wx[0] + wx[1]);
                let cy = 0.5 * (wy[0] + wy[1]);
                if parts.iter().any(|r| r.contains(cx, cy)) {
                    let cell = Rect::new(wx[0], wy[0], wx[1], wy[1]);
                    acc += cell.area();
                    cells.push(cell);
                    cumulative.push(acc);
                }
            }
        }
        RectUnion { cells, cumulative }
    }

    pub fn area(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    /// Uniform point in the union.  Consumes three words (cell, x, y).
    pub fn sample(&self, stream: &mut RandomStream) -> (f64, f64) {
        debug_assert!(self.area() > 0.0);
        let target = stream.next_uniform() * self.area();
        let idx = match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&target).unwrap())
        {
            Ok(i) => (i + 1).min(self.cells.len() - 1),
            Err(i) => i.min(self.cells.len() - 1),
        };
        let cell = &self.cells[idx];
        let x = cell.x0 + stream.next_uniform() * (cell.x1 - cell.x0);
        let y = cell.y0 + stream.next_uniform() * (cell.y1 - cell.y0);
        (x, y)
    }
}

/// Overlap area of two discs of common radius `r` whose centers are `d`
/// apart.
pub fn disc_overlap_area(d: f64, r: f64) -> f64 {
    if d >= 2.0 * r {
        return 0.0;
    }
    if d <= 0.0 {
        return std::f64::consts::PI * r * r;
    }
    let half = d / (2.0 * r);
    2.0 * r * r * half.acos() - 0.5 * d * (4.0 * r * r - d * d).sqrt()
}

/// Area of the common intersection of equal-radius discs, by integrating
/// along the boundary arcs that lie inside every other disc (Green's
/// theorem).  Handles every degenerate layout uniformly: any disjoint pair
/// gives zero, coincident centers collapse to one disc.
pub fn discs_intersection_area(centers: &[(f64, f64)], r: f64) -> f64 {
    let mut centers: Vec<(f64, f64)> = centers.to_vec();
    // Coincident centers are redundant for an intersection.
    centers.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    centers.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    if centers.is_empty() {
        return 0.0;
    }
    if centers.len() == 1 {
        return std::f64::consts::PI * r * r;
    }
    let tau = 2.0 * std::f64::consts::PI;
    let mut area = 0.0;
    for (i, &(cx, cy)) in centers.iter().enumerate() {
        // Angular pieces of circle i inside every other disc, kept as a set
        // of sub-intervals of [0, tau).
        let mut pieces = vec![Interval::new(0.0, tau)];
        for (j, &(ox, oy)) in centers.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = ((cx - ox).powi(2) + (cy - oy).powi(2)).sqrt();
            if d >= 2.0 * r {
                return 0.0;
            }
            let phi = (oy - cy).atan2(ox - cx);
            let psi = (d / (2.0 * r)).clamp(-1.0, 1.0).acos();
            let (mut a, b) = (phi - psi, phi + psi);
            while a < 0.0 {
                a += tau;
            }
            let a = a % tau;
            let span = b - (phi - psi);
            let keep = if a + span <= tau {
                vec![Interval::new(a, a + span)]
            } else {
                vec![Interval::new(a, tau), Interval::new(0.0, a + span - tau)]
            };
            let mut next = Vec::new();
            for p in &pieces {
                for k in &keep {
                    let cut = p.intersect(k);
                    if cut.len() > 0.0 {
                        next.push(cut);
                    }
                }
            }
            pieces = next;
            if pieces.is_empty() {
                break;
            }
        }
        for p in &pieces {
            let (a, b) = (p.lo, p.hi);
            area += 0.5
                * (r * r * (b - a) + cx * r * (b.sin() - a.sin()) - cy * r * (b.cos() - a.cos()));
        }
    }
    area.max(0.0)
}

/// Footprint of a grain placed in the plane: the region a single individual
/// occupies.
#[derive(Debug, Clone, Copy)]
pub enum Footprint {
    Disc { cx: f64, cy: f64, r: f64 },
    Square { cx: f64, cy: f64, half: f64 },
}

impl Footprint {
    pub fn x_extent(&self) -> Interval {
        match *self {
            Footprint::Disc { cx, r, .. } => Interval::new(cx - r, cx + r),
            Footprint::Square { cx, half, .. } => Interval::new(cx - half, cx + half),
        }
    }

    /// Vertical slice at abscissa `x`.
    pub fn slice(&self, x: f64) -> Interval {
        match *self {
            Footprint::Disc { cx, cy, r } => {
                let dx = x - cx;
                let s2 = r * r - dx * dx;
                if s2 <= 0.0 {
                    Interval::new(cy, cy)
                } else {
                    let s = s2.sqrt();
                    Interval::new(cy - s, cy + s)
                }
            }
            Footprint::Square { cx, cy, half } => {
                if (x - cx).abs() > half {
                    Interval::new(cy, cy)
                } else {
                    Interval::new(cy - half, cy + half)
                }
            }
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Footprint::Disc { r, .. } => std::f64::consts::PI * r * r,
            Footprint::Square { half, .. } => 4.0 * half * half,
        }
    }
}

fn slice_uncovered_len(grain: &Footprint, cover: &[Footprint], x: f64) -> f64 {
    let base = grain.slice(x);
    if base.is_empty() {
        return 0.0;
    }
    let mut cuts: Vec<Interval> = cover
        .iter()
        .map(|f| f.slice(x).intersect(&base))
        .filter(|i| !i.is_empty())
        .collect();
    cuts.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut covered = 0.0;
    let mut reach = base.lo;
    for c in cuts {
        if c.hi <= reach {
            continue;
        }
        covered += c.hi - c.lo.max(reach);
        reach = c.hi;
    }
    (base.len() - covered).max(0.0)
}

fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let split = left + right;
    if depth == 0 || (split - whole).abs() <= 15.0 * tol {
        return split + (split - whole) / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Area of `grain` not covered by any footprint in `cover`, by adaptive
/// Simpson integration over x of the exact uncovered slice length.  The
/// integrand is split at every footprint extent so each panel is smooth up
/// to interior crossing points, which the adaptive refinement resolves.
pub fn uncovered_area_quadrature(grain: &Footprint, cover: &[Footprint], tol: f64) -> f64 {
    let ext = grain.x_extent();
    let mut breaks: Vec<f64> = vec![ext.lo, ext.hi];
    for f in cover {
        let e = f.x_extent();
        for x in [e.lo, e.hi] {
            if ext.lo < x && x < ext.hi {
                breaks.push(x);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let f = |x: f64| slice_uncovered_len(grain, cover, x);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-14 {
            continue;
        }
        let panel_tol = tol * (b - a) / ext.len().max(1e-300);
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        total += adaptive_simpson(&f, a, b, fa, fm, fb, whole, panel_tol, 40);
    }
    total.max(0.0)
}
