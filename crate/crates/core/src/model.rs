//! The model contract.
//!
//! A model describes one family of individuals together with everything the
//! samplers need to know about it: the dominating birth intensity, the
//! incompatibility relation saying which individuals can influence each
//! other's birth rate, the acceptance probability that thins the free
//! process into the interacting one, and a size function used by the
//! subcriticality diagnostics.
//!
//! Acceptance is always a genuine probability: the interaction-specific
//! factor is divided by its configuration-wise supremum, which is carried
//! inside each model as the ratio between dominating and reference
//! intensity.  Acceptance may depend on the configuration only through
//! individuals incompatible with the candidate; property tests pin that
//! down for every family.

use crate::geom::{Interval, Rect};
use crate::stream::RandomStream;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("individual {0:?} does not belong to this model")]
    InvalidIndividual(Individual),
    #[error("window kind does not fit this model: {0}")]
    WindowMismatch(String),
    #[error("window is degenerate or unbounded: {0}")]
    BadWindow(String),
    #[error("invalid model parameter: {0}")]
    BadParameter(String),
}

/// One potential member of a configuration.
///
/// Continuous coordinates compare by total order on bits, so individuals can
/// serve as map keys and sort canonically; the samplers never produce NaN.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Individual {
    /// Member of a finite catalog, addressed by index.
    Site { id: u32 },
    /// Germ position in the plane; the grain is fixed by the model.
    Germ { x: f64, y: f64 },
    /// Call on the line: left endpoint and length.
    Call { left: f64, len: f64 },
    /// Anchored contour: catalog shape translated by an anchor on the dual
    /// lattice.
    Contour { shape: u32, ax: i32, ay: i32 },
    /// Connected set of bonds of a finite grid, as sorted bond indices.
    Animal { bonds: Vec<u16> },
}

impl Individual {
    fn rank(&self) -> u8 {
        match self {
            Individual::Site { .. } => 0,
            Individual::Germ { .. } => 1,
            Individual::Call { .. } => 2,
            Individual::Contour { .. } => 3,
            Individual::Animal { .. } => 4,
        }
    }
}

impl PartialEq for Individual {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Individual {}

impl Ord for Individual {
    fn cmp(&self, other: &Self) -> Ordering {
        use Individual::*;
        match (self, other) {
            (Site { id: a }, Site { id: b }) => a.cmp(b),
            (Germ { x: ax, y: ay }, Germ { x: bx, y: by }) => {
                ax.total_cmp(bx).then(ay.total_cmp(by))
            }
            (Call { left: al, len: an }, Call { left: bl, len: bn }) => {
                al.total_cmp(bl).then(an.total_cmp(bn))
            }
            (
                Contour {
                    shape: s1,
                    ax: x1,
                    ay: y1,
                },
                Contour {
                    shape: s2,
                    ax: x2,
                    ay: y2,
                },
            ) => s1.cmp(s2).then(x1.cmp(x2)).then(y1.cmp(y2)),
            (Animal { bonds: a }, Animal { bonds: b }) => a.cmp(b),
            (a, b) => a.rank().cmp(&b.rank()),
        }
    }
}

impl PartialOrd for Individual {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl std::hash::Hash for Individual {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Individual::Site { id } => id.hash(state),
            Individual::Germ { x, y } => {
                x.to_bits().hash(state);
                y.to_bits().hash(state);
            }
            Individual::Call { left, len } => {
                left.to_bits().hash(state);
                len.to_bits().hash(state);
            }
            Individual::Contour { shape, ax, ay } => {
                shape.hash(state);
                ax.hash(state);
                ay.hash(state);
            }
            Individual::Animal { bonds } => bonds.hash(state),
        }
    }
}

/// Finite multiset of individuals, kept sorted; multiplicity is repetition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration {
    items: Vec<Individual>,
}

impl Configuration {
    pub fn empty() -> Self {
        Configuration::default()
    }

    pub fn from_items(mut items: Vec<Individual>) -> Self {
        items.sort();
        Configuration { items }
    }

    pub fn insert(&mut self, item: Individual) {
        let pos = self.items.partition_point(|x| *x <= item);
        self.items.insert(pos, item);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Individual> {
        self.items.iter()
    }

    pub fn items(&self) -> &[Individual] {
        &self.items
    }

    pub fn multiplicity(&self, item: &Individual) -> usize {
        self.items.iter().filter(|x| *x == item).count()
    }
}

impl FromIterator<Individual> for Configuration {
    fn from_iter<T: IntoIterator<Item = Individual>>(iter: T) -> Self {
        Configuration::from_items(iter.into_iter().collect())
    }
}

/// Observation window.  Which kinds fit which model is checked by the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Window {
    /// Every member of a finite catalog.
    All,
    /// Subset of a finite catalog, as sorted ids.
    Sites { ids: Vec<u32> },
    /// Segment of the line.
    Interval { lo: f64, hi: f64 },
    /// Axis-aligned rectangle in the plane.
    Box2 { x0: f64, y0: f64, x1: f64, y1: f64 },
    /// Rectangle of dual-lattice cells, half-open integer ranges.
    Cells { x0: i32, y0: i32, x1: i32, y1: i32 },
}

impl Window {
    pub fn interval(&self) -> Option<Interval> {
        match self {
            Window::Interval { lo, hi } => Some(Interval::new(*lo, *hi)),
            _ => None,
        }
    }

    pub fn rect(&self) -> Option<Rect> {
        match self {
            Window::Box2 { x0, y0, x1, y1 } => Some(Rect::new(*x0, *y0, *x1, *y1)),
            _ => None,
        }
    }

    /// Short text used in reports and file headers.
    pub fn describe(&self) -> String {
        match self {
            Window::All => "all".to_string(),
            Window::Sites { ids } => format!(
                "sites:{}",
                ids.iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            Window::Interval { lo, hi } => format!("[{lo},{hi}]"),
            Window::Box2 { x0, y0, x1, y1 } => format!("[{x0},{x1}]x[{y0},{y1}]"),
            Window::Cells { x0, y0, x1, y1 } => format!("cells[{x0}..{x1})x[{y0}..{y1})"),
        }
    }
}

/// Germ-space region used by the continuous machinery, one or two
/// dimensional.
#[derive(Debug, Clone, Copy)]
pub enum GermBox {
    Line(Interval),
    Plane(Rect),
}

#[derive(Debug, Clone, Copy)]
pub enum GermPoint {
    Line(f64),
    Plane(f64, f64),
}

/// Catalog access for models with countably many individuals.
pub trait DiscreteFamily {
    /// Dominating weight of one individual.
    fn weight(&self, gamma: &Individual) -> f64;

    /// Every individual meeting the window.  Sorted canonically.
    fn window_members(&self, window: &Window) -> Result<Vec<Individual>, ModelError>;

    /// Every individual incompatible with `gamma`, that is every potential
    /// ancestor basis.  Sorted canonically.
    fn incompatible_members(&self, gamma: &Individual) -> Vec<Individual>;

    /// One representative per translation class, for supremum computations.
    fn representatives(&self) -> Vec<Individual>;
}

/// Proposal machinery for models with a continuum of individuals.
pub trait ContinuousFamily {
    /// Dominating germ intensity per unit length or area.
    fn germ_rate(&self) -> f64;

    /// Bounding region of germ positions possibly incompatible with `gamma`.
    fn enlargement(&self, gamma: &Individual) -> GermBox;

    /// Bounding region of germ positions possibly meeting the window.
    fn window_box(&self, window: &Window) -> Result<GermBox, ModelError>;

    /// Exact dominating mass of individuals meeting the window.
    fn window_mass(&self, window: &Window) -> Result<f64, ModelError>;

    /// Attach a grain to a germ position, drawing any mark it needs.
    fn propose(&self, at: GermPoint, stream: &mut RandomStream) -> Individual;
}

/// How the dominating birth process is realized.
pub enum Domination<'a> {
    Discrete(&'a dyn DiscreteFamily),
    Continuous(&'a dyn ContinuousFamily),
}

/// The full model contract.
pub trait Model: Send + Sync {
    /// Stable name used in records and reports.
    fn name(&self) -> String;

    /// Whether `gamma` is a well-formed member of this family.
    fn validate(&self, gamma: &Individual) -> Result<(), ModelError>;

    /// Whether the presence of `other` can change the birth rate of
    /// `target`.
    fn incompatible(&self, target: &Individual, other: &Individual) -> Result<bool, ModelError>;

    /// Acceptance probability of `gamma` against configuration `xi`, in
    /// `[0, 1]`.
    fn acceptance(&self, gamma: &Individual, xi: &Configuration) -> f64;

    /// Size used by the subcriticality diagnostics.
    fn size(&self, gamma: &Individual) -> f64;

    /// Whether `gamma` is charged to the window, grain included.
    fn meets_window(&self, gamma: &Individual, window: &Window) -> bool;

    /// Dominating mass of individuals meeting the window.
    fn dominating_mass(&self, window: &Window) -> Result<f64, ModelError>;

    /// Access to the dominating birth mechanism.
    fn domination(&self) -> Domination<'_>;

    /// Closed-form subcriticality bounds, where the family has them.
    /// Discrete families instead expose their catalog supremum through the
    /// diagnostics module.
    fn analytic_bounds(&self) -> Vec<(String, f64)> {
        Vec::new()
    }

    /// Window kinds this model accepts.
    fn check_window(&self, window: &Window) -> Result<(), ModelError>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn individual_ordering_is_total_and_canonical() {
        let a = Individual::Germ { x: 1.0, y: 2.0 };
        let b = Individual::Germ { x: 1.0, y: 3.0 };
        let c = Individual::Site { id: 9 };
        assert!(a < b);
        assert!(c < a);
        assert_eq!(a, a.clone());
    }

    #[test]
    fn configuration_sorts_and_counts_multiplicity() {
        let g = Individual::Site { id: 1 };
        let h = Individual::Site { id: 0 };
        let cfg = Configuration::from_items(vec![g.clone(), h.clone(), g.clone()]);
        assert_eq!(cfg.len(), 3);
        assert_eq!(cfg.multiplicity(&g), 2);
        assert_eq!(cfg.multiplicity(&h), 1);
        assert_eq!(cfg.items()[0], h);
    }

    #[test]
    fn configuration_insert_keeps_order() {
        let mut cfg = Configuration::empty();
        cfg.insert(Individual::Site { id: 5 });
        cfg.insert(Individual::Site { id: 2 });
        cfg.insert(Individual::Site { id: 9 });
        let ids: Vec<u32> = cfg
            .iter()
            .map(|i| match i {
                Individual::Site { id } => *id,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(ids, vec![2, 5, 9]);
    }

    #[test]
    fn individual_serde_round_trip_is_exact() {
        let items = vec![
            Individual::Site { id: 3 },
            Individual::Germ {
                x: 0.1 + 0.2,
                y: -1.5e-7,
            },
            Individual::Call {
                left: -2.25,
                len: 0.7531,
            },
            Individual::Contour {
                shape: 4,
                ax: -3,
                ay: 11,
            },
            Individual::Animal {
                bonds: vec![0, 3, 7],
            },
        ];
        for item in items {
            let text = serde_json::to_string(&item).unwrap();
            let back: Individual = serde_json::from_str(&text).unwrap();
            assert_eq!(item, back, "{text}");
        }
    }

    #[test]
    fn window_serde_round_trip() {
        let windows = vec![
            Window::All,
            Window::Sites { ids: vec![0, 2] },
            Window::Interval { lo: -1.0, hi: 2.5 },
            Window::Box2 {
                x0: 0.0,
                y0: 0.0,
                x1: 4.0,
                y1: 2.0,
            },
            Window::Cells {
                x0: -1,
                y0: -1,
                x1: 3,
                y1: 2,
            },
        ];
        for w in windows {
            let text = serde_json::to_string(&w).unwrap();
            let back: Window = serde_json::from_str(&text).unwrap();
            assert_eq!(w, back);
        }
    }
}
