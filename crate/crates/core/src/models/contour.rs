//! Contours on the two-dimensional dual lattice.
//!
//! A contour is a finite connected set of links (unit edges between dual
//! vertices) in which every vertex is met by an even number of links, so the
//! set is a closed curve, possibly pinched at vertices of degree four.
//! Contours are stored modulo translation as catalog shapes plus an integer
//! anchor.  Two anchored contours are incompatible exactly when their links
//! share a vertex.  The weight of a contour with `n` links is `exp(-beta*n)`
//! and the model carries a hard cutoff on `n`, so the catalog of shapes is
//! finite and every window sees finitely many anchored contours.

use crate::model::{
    Configuration, DiscreteFamily, Domination, Individual, Model, ModelError, Window,
};
use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::{Arc, Mutex, OnceLock};

/// Largest supported cutoff.  Shape enumeration grows steeply with the
/// cutoff and every catalog link index must stay packable.
pub const MAX_CUTOFF: usize = 12;

/// A link: `horiz` runs from `(x, y)` to `(x+1, y)`, otherwise to
/// `(x, y+1)`, in dual-lattice coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub x: i32,
    pub y: i32,
    pub horiz: bool,
}

impl Link {
    pub fn endpoints(&self) -> [(i32, i32); 2] {
        if self.horiz {
            [(self.x, self.y), (self.x + 1, self.y)]
        } else {
            [(self.x, self.y), (self.x, self.y + 1)]
        }
    }

    fn translated(&self, dx: i32, dy: i32) -> Link {
        Link {
            x: self.x + dx,
            y: self.y + dy,
            horiz: self.horiz,
        }
    }

    /// The up-to-six links sharing an endpoint with this one.
    fn neighbors(&self) -> Vec<Link> {
        let mut out = Vec::with_capacity(6);
        for (a, b) in self.endpoints() {
            for cand in [
                Link { x: a, y: b, horiz: true },
                Link { x: a - 1, y: b, horiz: true },
                Link { x: a, y: b, horiz: false },
                Link { x: a, y: b - 1, horiz: false },
            ] {
                if cand != *self && !out.contains(&cand) {
                    out.push(cand);
                }
            }
        }
        out
    }
}

/// Shape: canonical translate of a contour, links sorted, minimum link
/// coordinates at the origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    pub links: Vec<Link>,
    endpoints: Vec<(i32, i32)>,
    /// Extents of the drawn segments: x in [0, bx], y in [0, by].
    bx: i32,
    by: i32,
}

impl Shape {
    fn new(links: Vec<Link>) -> Shape {
        let mut endpoints: Vec<(i32, i32)> = links.iter().flat_map(|l| l.endpoints()).collect();
        endpoints.sort_unstable();
        endpoints.dedup();
        let bx = links
            .iter()
            .map(|l| if l.horiz { l.x + 1 } else { l.x })
            .max()
            .unwrap_or(0);
        let by = links
            .iter()
            .map(|l| if l.horiz { l.y } else { l.y + 1 })
            .max()
            .unwrap_or(0);
        Shape {
            links,
            endpoints,
            bx,
            by,
        }
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }
}

fn canonical(mut links: Vec<Link>) -> Vec<Link> {
    let dx = links.iter().map(|l| l.x).min().unwrap();
    let dy = links.iter().map(|l| l.y).min().unwrap();
    for l in &mut links {
        l.x -= dx;
        l.y -= dy;
    }
    links.sort_unstable();
    links
}

fn pack(links: &[Link]) -> u128 {
    // Canonical coordinates sit in [0, cutoff]; 5 bits each plus the
    // orientation bit packs one link in 11 bits, up to 11 links in 121 bits.
    let mut key: u128 = links.len() as u128;
    for l in links {
        debug_assert!((0..32).contains(&l.x) && (0..32).contains(&l.y));
        let w = (l.x as u128) | ((l.y as u128) << 5) | ((l.horiz as u128) << 10);
        key = (key << 11) | w;
    }
    key
}

fn odd_vertex_count(links: &[Link]) -> usize {
    let mut deg: HashMap<(i32, i32), u32> = HashMap::new();
    for l in links {
        for e in l.endpoints() {
            *deg.entry(e).or_insert(0) += 1;
        }
    }
    deg.values().filter(|d| *d % 2 == 1).count()
}

/// Grow connected link sets from a single horizontal seed, keeping one
/// canonical translate of each, and collect the closed ones.  Every closed
/// set contains a horizontal link (the topmost vertical endpoint would
/// otherwise have odd degree), so seeding with one horizontal link reaches
/// every shape.  Sets that cannot close within the cutoff are pruned: each
/// added link repairs at most two odd vertices.
fn enumerate_shapes(cutoff: usize) -> Vec<Shape> {
    if cutoff < 4 {
        return Vec::new();
    }
    let seed = vec![Link {
        x: 0,
        y: 0,
        horiz: true,
    }];
    let mut seen: HashSet<u128> = HashSet::new();
    seen.insert(pack(&seed));
    let mut queue: VecDeque<Vec<Link>> = VecDeque::new();
    queue.push_back(seed);
    let mut closed: Vec<Vec<Link>> = Vec::new();
    while let Some(state) = queue.pop_front() {
        if state.len() == cutoff {
            continue;
        }
        let mut candidates: Vec<Link> = Vec::new();
        for l in &state {
            for cand in l.neighbors() {
                if !state.contains(&cand) && !candidates.contains(&cand) {
                    candidates.push(cand);
                }
            }
        }
        for cand in candidates {
            let mut next = state.clone();
            next.push(cand);
            let next = canonical(next);
            let odd = odd_vertex_count(&next);
            if next.len() + odd / 2 > cutoff {
                continue;
            }
            if seen.insert(pack(&next)) {
                if odd == 0 {
                    closed.push(next.clone());
                }
                queue.push_back(next);
            }
        }
    }
    closed.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    closed.into_iter().map(Shape::new).collect()
}

#[derive(Debug)]
pub struct ShapeCatalog {
    pub cutoff: usize,
    pub shapes: Vec<Shape>,
}

/// Shared shape catalogs, keyed by cutoff.  Enumeration is deterministic, so
/// sharing is purely a cost saving.
pub fn shape_catalog(cutoff: usize) -> Arc<ShapeCatalog> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<ShapeCatalog>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(cutoff)
        .or_insert_with(|| {
            Arc::new(ShapeCatalog {
                cutoff,
                shapes: enumerate_shapes(cutoff),
            })
        })
        .clone()
}

/// Every contour with at most `cutoff` links whose drawn segments touch the
/// closed region of the cell window.  Sorted canonically.
pub fn enumerate_contours(cutoff: usize, window: &Window) -> Result<Vec<Individual>, ModelError> {
    let (x0, y0, x1, y1) = match window {
        Window::Cells { x0, y0, x1, y1 } => (*x0, *y0, *x1, *y1),
        other => return Err(ModelError::WindowMismatch(other.describe())),
    };
    if x1 <= x0 || y1 <= y0 {
        return Err(ModelError::BadWindow(window.describe()));
    }
    let catalog = shape_catalog(cutoff.min(MAX_CUTOFF));
    let mut out = Vec::new();
    for (sid, shape) in catalog.shapes.iter().enumerate() {
        for ax in (x0 - shape.bx)..=x1 {
            for ay in (y0 - shape.by)..=y1 {
                if shape_meets_region(shape, ax, ay, x0, y0, x1, y1) {
                    out.push(Individual::Contour {
                        shape: sid as u32,
                        ax,
                        ay,
                    });
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

fn shape_meets_region(shape: &Shape, ax: i32, ay: i32, x0: i32, y0: i32, x1: i32, y1: i32) -> bool {
    shape.links.iter().any(|l| {
        let l = l.translated(ax, ay);
        if l.horiz {
            l.y >= y0 && l.y <= y1 && l.x + 1 >= x0 && l.x <= x1
        } else {
            l.x >= x0 && l.x <= x1 && l.y + 1 >= y0 && l.y <= y1
        }
    })
}

/// Whether a raw link set forms one contour: nonempty, connected through
/// shared endpoints, all vertex degrees even.
pub fn is_contour(links: &[Link]) -> bool {
    if links.is_empty() || odd_vertex_count(links) != 0 {
        return false;
    }
    let set: HashSet<Link> = links.iter().cloned().collect();
    if set.len() != links.len() {
        return false;
    }
    let mut visited: HashSet<Link> = HashSet::new();
    let mut stack = vec![links[0]];
    visited.insert(links[0]);
    while let Some(l) = stack.pop() {
        for n in l.neighbors() {
            if set.contains(&n) && visited.insert(n) {
                stack.push(n);
            }
        }
    }
    visited.len() == links.len()
}

#[derive(Debug, Clone)]
pub struct ContourModel {
    beta: f64,
    catalog: Arc<ShapeCatalog>,
}

impl ContourModel {
    pub fn new(beta: f64, cutoff: usize) -> Result<ContourModel, ModelError> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(ModelError::BadParameter(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        if cutoff < 4 {
            return Err(ModelError::BadParameter(format!(
                "cutoff {cutoff} admits no contour (smallest has 4 links)"
            )));
        }
        if cutoff > MAX_CUTOFF {
            return Err(ModelError::BadParameter(format!(
                "cutoff {cutoff} exceeds the supported maximum {MAX_CUTOFF}"
            )));
        }
        Ok(ContourModel {
            beta,
            catalog: shape_catalog(cutoff),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn cutoff(&self) -> usize {
        self.catalog.cutoff
    }

    pub fn catalog(&self) -> &ShapeCatalog {
        &self.catalog
    }

    fn parts(&self, gamma: &Individual) -> Result<(usize, i32, i32), ModelError> {
        match gamma {
            Individual::Contour { shape, ax, ay } if (*shape as usize) < self.catalog.shapes.len() => {
                Ok((*shape as usize, *ax, *ay))
            }
            _ => Err(ModelError::InvalidIndividual(gamma.clone())),
        }
    }

    /// Anchored link list of a contour.
    pub fn links_of(&self, gamma: &Individual) -> Vec<Link> {
        let (sid, ax, ay) = self.parts(gamma).expect("foreign individual");
        self.catalog.shapes[sid]
            .links
            .iter()
            .map(|l| l.translated(ax, ay))
            .collect()
    }

    /// The index of the unit-square shape in the catalog (always shape 0:
    /// the unique four-link contour sorts first).
    pub fn square_shape(&self) -> u32 {
        0
    }
}

impl DiscreteFamily for ContourModel {
    fn weight(&self, gamma: &Individual) -> f64 {
        let (sid, _, _) = self.parts(gamma).expect("foreign individual");
        (-self.beta * self.catalog.shapes[sid].len() as f64).exp()
    }

    fn window_members(&self, window: &Window) -> Result<Vec<Individual>, ModelError> {
        enumerate_contours(self.catalog.cutoff, window)
    }

    fn incompatible_members(&self, gamma: &Individual) -> Vec<Individual> {
        let (sid, ax, ay) = self.parts(gamma).expect("foreign individual");
        let own: Vec<(i32, i32)> = self.catalog.shapes[sid]
            .endpoints
            .iter()
            .map(|(x, y)| (x + ax, y + ay))
            .collect();
        let mut out = Vec::new();
        for (tid, other) in self.catalog.shapes.iter().enumerate() {
            let mut anchors: Vec<(i32, i32)> = Vec::new();
            for &(ex, ey) in &own {
                for &(fx, fy) in &other.endpoints {
                    anchors.push((ex - fx, ey - fy));
                }
            }
            anchors.sort_unstable();
            anchors.dedup();
            for (bx, by) in anchors {
                out.push(Individual::Contour {
                    shape: tid as u32,
                    ax: bx,
                    ay: by,
                });
            }
        }
        out.sort();
        out
    }

    fn representatives(&self) -> Vec<Individual> {
        (0..self.catalog.shapes.len() as u32)
            .map(|shape| Individual::Contour {
                shape,
                ax: 0,
                ay: 0,
            })
            .collect()
    }
}

impl Model for ContourModel {
    fn name(&self) -> String {
        "contour".to_string()
    }

    fn validate(&self, gamma: &Individual) -> Result<(), ModelError> {
        self.parts(gamma).map(|_| ())
    }

    fn incompatible(&self, target: &Individual, other: &Individual) -> Result<bool, ModelError> {
        let (sa, xa, ya) = self.parts(target)?;
        let (sb, xb, yb) = self.parts(other)?;
        let ea = &self.catalog.shapes[sa].endpoints;
        let eb = &self.catalog.shapes[sb].endpoints;
        // Shared vertex test on translated endpoint sets.
        for &(px, py) in ea {
            let (px, py) = (px + xa, py + ya);
            for &(qx, qy) in eb {
                if px == qx + xb && py == qy + yb {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    fn acceptance(&self, gamma: &Individual, xi: &Configuration) -> f64 {
        for theta in xi.iter() {
            if self.incompatible(gamma, theta).expect("foreign individual") {
                return 0.0;
            }
        }
        1.0
    }

    fn size(&self, gamma: &Individual) -> f64 {
        let (sid, _, _) = self.parts(gamma).expect("foreign individual");
        self.catalog.shapes[sid].len() as f64
    }

    fn meets_window(&self, gamma: &Individual, window: &Window) -> bool {
        let (sid, ax, ay) = self.parts(gamma).expect("foreign individual");
        match window {
            Window::Cells { x0, y0, x1, y1 } => {
                shape_meets_region(&self.catalog.shapes[sid], ax, ay, *x0, *y0, *x1, *y1)
            }
            _ => false,
        }
    }

    fn dominating_mass(&self, window: &Window) -> Result<f64, ModelError> {
        Ok(self
            .window_members(window)?
            .iter()
            .map(|g| self.weight(g))
            .sum())
    }

    fn domination(&self) -> Domination<'_> {
        Domination::Discrete(self)
    }

    fn check_window(&self, window: &Window) -> Result<(), ModelError> {
        match window {
            Window::Cells { x0, y0, x1, y1 } if x1 > x0 && y1 > y0 => Ok(()),
            Window::Cells { .. } => Err(ModelError::BadWindow(window.describe())),
            other => Err(ModelError::WindowMismatch(other.describe())),
        }
    }
}
