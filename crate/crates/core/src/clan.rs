//! Backward construction of the ancestry needed to decide a window.
//!
//! Starting from nothing, the construction discovers, going backward in
//! time, every cylinder of the free birth-and-death process that could
//! influence the window at time zero: first the cylinders charged to the
//! window itself, then cylinders incompatible with those, and so on.  Each
//! discovered cylinder is born at the current backward depth and lives
//! exactly long enough to reach the earliest obligation that made it
//! relevant, plus an independent exponential overshoot.  The construction
//! stops when no further relevant birth occurs, which happens almost surely
//! whenever the incompatibility structure is subcritical, and in general
//! whenever the dominating mass seen by the window is finite.
//!
//! For countable families the next relevant birth is found by keeping one
//! pending first-event time per potential basis; a basis is redrawn only
//! when its time-to-obligation changes (or when its own event fired), which
//! is exact by memorylessness.  For continuum families, candidate births
//! are generated from a dominating process over a bounding germ region and
//! thinned.

use crate::model::{Domination, GermBox, GermPoint, Individual, Model, ModelError, Window};
use crate::stream::RandomStream;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClanError {
    #[error("individual is not a potential basis for this window and history")]
    NotPotentialBasis,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One space-time object of the free process: a basis living on the closed
/// interval `[birth, birth + lifetime]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cylinder {
    pub basis: Individual,
    pub birth: f64,
    pub lifetime: f64,
    /// Index of the earliest-born incompatible cylinder that this one was
    /// created to reach; `None` when the cylinder is charged to the window
    /// directly.
    pub parent: Option<usize>,
}

impl Cylinder {
    pub fn death(&self) -> f64 {
        self.birth + self.lifetime
    }

    pub fn alive_at(&self, t: f64) -> bool {
        self.birth <= t && t <= self.death()
    }
}

/// Time of the earliest obligation of `theta` with respect to the history:
/// the smallest birth time among cylinders incompatible with it, and zero
/// when there is none (the obligation is then the window at time zero).
/// Also returns the index attaining the minimum.
fn obligation(
    model: &dyn Model,
    cylinders: &[Cylinder],
    theta: &Individual,
) -> (f64, Option<usize>) {
    let mut ti = 0.0;
    let mut parent = None;
    for (i, c) in cylinders.iter().enumerate() {
        if c.birth < ti && model.incompatible(theta, &c.basis).expect("clan-built basis") {
            ti = c.birth;
            parent = Some(i);
        }
    }
    (ti, parent)
}

/// Earliest-obligation time of a potential basis; errors when `theta` is
/// neither incompatible with the history nor charged to the window.
pub fn ti(
    model: &dyn Model,
    cylinders: &[Cylinder],
    window: &Window,
    theta: &Individual,
) -> Result<f64, ClanError> {
    let (val, parent) = obligation(model, cylinders, theta);
    if parent.is_none() && !model.meets_window(theta, window) {
        return Err(ClanError::NotPotentialBasis);
    }
    Ok(val)
}

/// Every basis that could be an ancestor of the history or of the window:
/// members incompatible with some history basis, united with the members
/// charged to the window.  Countable families only.
pub fn potential_bases(
    model: &dyn Model,
    cylinders: &[Cylinder],
    window: &Window,
) -> Result<Vec<Individual>, ClanError> {
    let family = match model.domination() {
        Domination::Discrete(f) => f,
        Domination::Continuous(_) => {
            return Err(ClanError::Model(ModelError::BadParameter(
                "continuum families have no enumerable potential-basis set".to_string(),
            )))
        }
    };
    let mut out = family.window_members(window)?;
    for c in cylinders {
        out.extend(family.incompatible_members(&c.basis));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClanLimits {
    /// Cap on uniform words consumed by one build.
    pub max_draws: u64,
    /// Cap on the number of cylinders.
    pub max_cylinders: usize,
}

impl Default for ClanLimits {
    fn default() -> Self {
        ClanLimits {
            max_draws: 1000,
            max_cylinders: 100_000,
        }
    }
}

/// Output of one backward construction.
#[derive(Debug, Clone)]
pub struct Clan {
    pub cylinders: Vec<Cylinder>,
    pub window: Window,
    /// Uniform words consumed.
    pub draws: u64,
    /// Final backward depth reached.
    pub time_depth: f64,
    /// Whether a limit stopped the construction before it was complete.
    pub truncated: bool,
}

impl Clan {
    /// Cylinders alive at time zero whose basis is charged to the window.
    pub fn roots(&self, model: &dyn Model) -> Vec<usize> {
        self.cylinders
            .iter()
            .enumerate()
            .filter(|(_, c)| c.death() >= 0.0 && model.meets_window(&c.basis, &self.window))
            .map(|(i, _)| i)
            .collect()
    }

    /// Indices grouped by ancestry distance: entry 0 is the roots, entry n
    /// the cylinders whose shortest ancestor chain to a root has n links.
    /// Every cylinder belongs to exactly one generation.
    pub fn generations(&self, model: &dyn Model) -> Vec<Vec<usize>> {
        let n = self.cylinders.len();
        if n == 0 {
            return Vec::new();
        }
        let mut dist: Vec<Option<u32>> = vec![None; n];
        let mut frontier = self.roots(model);
        for &i in &frontier {
            dist[i] = Some(0);
        }
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut level = 0u32;
        while !frontier.is_empty() {
            out.push(frontier.clone());
            let mut next = Vec::new();
            for &j in &frontier {
                let cj = &self.cylinders[j];
                for (i, ci) in self.cylinders.iter().enumerate() {
                    if dist[i].is_none()
                        && i != j
                        && ci.alive_at(cj.birth)
                        && model
                            .incompatible(&cj.basis, &ci.basis)
                            .expect("clan-built basis")
                    {
                        dist[i] = Some(level + 1);
                        next.push(i);
                    }
                }
            }
            next.sort_unstable();
            frontier = next;
            level += 1;
        }
        debug_assert_eq!(
            out.iter().map(|g| g.len()).sum::<usize>(),
            n,
            "generations partition the clan"
        );
        out
    }

    /// Number of ancestor links on the longest shortest-chain, zero for
    /// clans that are empty or all roots.
    pub fn generation_depth(&self, model: &dyn Model) -> u32 {
        (self.generations(model).len() as u32).saturating_sub(1)
    }

    /// Largest basis size present.
    pub fn max_basis_size(&self, model: &dyn Model) -> f64 {
        self.cylinders
            .iter()
            .map(|c| model.size(&c.basis))
            .fold(0.0, f64::max)
    }

    /// Indices of every ancestor reachable from the given seed cylinders,
    /// seeds included.
    pub fn ancestor_closure(&self, model: &dyn Model, seeds: &[usize]) -> Vec<usize> {
        let mut in_set = vec![false; self.cylinders.len()];
        let mut stack: Vec<usize> = seeds.to_vec();
        for &s in seeds {
            in_set[s] = true;
        }
        while let Some(j) = stack.pop() {
            let cj = &self.cylinders[j];
            for (i, ci) in self.cylinders.iter().enumerate() {
                if !in_set[i]
                    && i != j
                    && ci.alive_at(cj.birth)
                    && model
                        .incompatible(&cj.basis, &ci.basis)
                        .expect("clan-built basis")
                {
                    in_set[i] = true;
                    stack.push(i);
                }
            }
        }
        (0..self.cylinders.len()).filter(|&i| in_set[i]).collect()
    }

    /// One line per cylinder for audit and replay: basis, birth, lifetime,
    /// parent, generation.
    pub fn export_lines(&self, model: &dyn Model) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            basis: &'a Individual,
            birth: f64,
            lifetime: f64,
            parent: Option<usize>,
            generation: u32,
        }
        let mut gen_of = vec![0u32; self.cylinders.len()];
        for (g, members) in self.generations(model).iter().enumerate() {
            for &i in members {
                gen_of[i] = g as u32;
            }
        }
        let mut out = String::new();
        for (i, c) in self.cylinders.iter().enumerate() {
            let line = Line {
                basis: &c.basis,
                birth: c.birth,
                lifetime: c.lifetime,
                parent: c.parent,
                generation: gen_of[i],
            };
            out.push_str(&serde_json::to_string(&line).expect("serializable cylinder"));
            out.push('\n');
        }
        out
    }

    fn check_ancestor_property(&self, model: &dyn Model) {
        for c in &self.cylinders {
            debug_assert!(c.lifetime > 0.0);
            if let Some(p) = c.parent {
                let parent = &self.cylinders[p];
                debug_assert!(c.alive_at(parent.birth), "ancestor spans its obligation");
                debug_assert!(model
                    .incompatible(&c.basis, &parent.basis)
                    .expect("clan-built basis"));
            }
        }
    }
}

fn box_measure(b: &GermBox) -> f64 {
    match b {
        GermBox::Line(iv) => iv.len(),
        GermBox::Plane(r) => r.area(),
    }
}

fn box_contains(b: &GermBox, p: &GermPoint) -> bool {
    match (b, p) {
        (GermBox::Line(iv), GermPoint::Line(x)) => iv.contains(*x),
        (GermBox::Plane(r), GermPoint::Plane(x, y)) => r.contains(*x, *y),
        _ => unreachable!("mixed germ dimensions"),
    }
}

fn box_sample(b: &GermBox, stream: &mut RandomStream) -> GermPoint {
    match b {
        GermBox::Line(iv) => GermPoint::Line(iv.lo + stream.next_uniform() * (iv.hi - iv.lo)),
        GermBox::Plane(r) => {
            let x = r.x0 + stream.next_uniform() * (r.x1 - r.x0);
            let y = r.y0 + stream.next_uniform() * (r.y1 - r.y0);
            GermPoint::Plane(x, y)
        }
    }
}

pub struct ClanBuilder<'a> {
    model: &'a dyn Model,
    window: Window,
    limits: ClanLimits,
    /// Redraw every pending time after each insertion instead of only the
    /// invalidated ones.  Distributionally equivalent; kept for testing.
    resample_all: bool,
    window_catalog: Vec<Individual>,
    window_germ_box: Option<GermBox>,
}

impl<'a> ClanBuilder<'a> {
    pub fn new(model: &'a dyn Model, window: Window) -> Result<ClanBuilder<'a>, ModelError> {
        model.check_window(&window)?;
        let (window_catalog, window_germ_box) = match model.domination() {
            Domination::Discrete(f) => (f.window_members(&window)?, None),
            Domination::Continuous(f) => (Vec::new(), Some(f.window_box(&window)?)),
        };
        Ok(ClanBuilder {
            model,
            window,
            limits: ClanLimits::default(),
            resample_all: false,
            window_catalog,
            window_germ_box,
        })
    }

    pub fn limits(mut self, limits: ClanLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn resample_all(mut self, yes: bool) -> Self {
        self.resample_all = yes;
        self
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    /// Run one backward construction on the given stream.
    pub fn build(&self, stream: &mut RandomStream) -> Clan {
        let start = stream.counter();
        let mut clan = match self.model.domination() {
            Domination::Discrete(_) => self.build_discrete(stream, start),
            Domination::Continuous(f) => self.build_continuous(f, stream, start),
        };
        clan.draws = stream.counter() - start;
        clan.check_ancestor_property(self.model);
        clan
    }

    fn over_limits(&self, stream: &RandomStream, start: u64, cylinders: usize) -> bool {
        stream.counter() - start > self.limits.max_draws || cylinders >= self.limits.max_cylinders
    }

    fn build_discrete(&self, stream: &mut RandomStream, start: u64) -> Clan {
        let family = match self.model.domination() {
            Domination::Discrete(f) => f,
            _ => unreachable!(),
        };
        let mut cylinders: Vec<Cylinder> = Vec::new();
        let mut tau = 0.0f64;
        let mut truncated = false;
        // Pending first-event time and current obligation time per basis.
        let mut pending: BTreeMap<Individual, (f64, f64)> = BTreeMap::new();
        for gamma in &self.window_catalog {
            let t = stream
                .sample_first_event(family.weight(gamma), 0.0)
                .expect("positive weight");
            pending.insert(gamma.clone(), (t, 0.0));
        }
        loop {
            let mut best: Option<(&Individual, f64)> = None;
            for (gamma, &(t, _)) in pending.iter() {
                if t.is_finite() && best.map(|(_, bt)| t < bt).unwrap_or(true) {
                    best = Some((gamma, t));
                }
            }
            let (gamma1, tau1) = match best {
                None => break,
                Some((g, t)) => (g.clone(), t),
            };
            let (ti_val, parent) = obligation(self.model, &cylinders, &gamma1);
            assert!(
                tau1 + ti_val > 0.0,
                "obligation always reachable: {tau1} + {ti_val}"
            );
            let lifetime = tau1 + ti_val + stream.exp1();
            cylinders.push(Cylinder {
                basis: gamma1.clone(),
                birth: -tau1,
                lifetime,
                parent,
            });
            tau = tau1;
            if self.over_limits(stream, start, cylinders.len()) {
                truncated = true;
                break;
            }
            if self.resample_all {
                let bases = potential_bases(self.model, &cylinders, &self.window)
                    .expect("discrete family");
                for theta in bases {
                    let (t_obl, _) = obligation(self.model, &cylinders, &theta);
                    let t = stream
                        .sample_first_event(family.weight(&theta) * (-t_obl).exp(), tau)
                        .expect("positive weight");
                    pending.insert(theta, (t, t_obl));
                }
            } else {
                // The new cylinder is the earliest birth, so every basis
                // incompatible with it now has obligation time -tau; all
                // other pending times remain valid.  The fired basis is
                // redrawn past tau even when compatible with itself.
                let mut redraw = family.incompatible_members(&gamma1);
                if redraw.binary_search(&gamma1).is_err() {
                    redraw.push(gamma1.clone());
                    redraw.sort();
                }
                for theta in redraw {
                    let t_obl = if self
                        .model
                        .incompatible(&theta, &gamma1)
                        .expect("family member")
                    {
                        -tau
                    } else {
                        pending.get(&theta).map(|&(_, o)| o).unwrap_or(0.0)
                    };
                    let t = stream
                        .sample_first_event(family.weight(&theta) * (-t_obl).exp(), tau)
                        .expect("positive weight");
                    pending.insert(theta, (t, t_obl));
                }
            }
        }
        Clan {
            cylinders,
            window: self.window.clone(),
            draws: 0,
            time_depth: tau,
            truncated,
        }
    }

    fn build_continuous(
        &self,
        family: &dyn crate::model::ContinuousFamily,
        stream: &mut RandomStream,
        start: u64,
    ) -> Clan {
        // One dominating piece per obligation: the window box carries weight
        // one, and each cylinder's enlargement carries e^{tau_k}, the inverse
        // of the survival probability down to its obligation time.  A germ
        // proposed at depth tau is then accepted with the ratio of its true
        // relevance rate to the local dominating weight.
        let mut pieces: Vec<(GermBox, f64)> =
            vec![(self.window_germ_box.expect("continuous window box"), 1.0)];
        let rate = family.germ_rate();
        let mut cylinders: Vec<Cylinder> = Vec::new();
        let mut tau = 0.0f64;
        let mut truncated = false;
        loop {
            let mut cumulative = Vec::with_capacity(pieces.len());
            let mut total = 0.0;
            for (b, weight) in &pieces {
                total += rate * box_measure(b) * weight;
                cumulative.push(total);
            }
            let t = stream
                .sample_first_event(total, tau)
                .expect("finite dominating mass");
            if !t.is_finite() {
                break;
            }
            tau = t;
            let k = stream.next_index(&cumulative);
            let at = box_sample(&pieces[k].0, stream);
            let candidate = family.propose(at, stream);
            let u = stream.next_uniform();
            let meets = self.model.meets_window(&candidate, &self.window);
            let (ti_val, parent) = obligation(self.model, &cylinders, &candidate);
            let relevant = meets || parent.is_some();
            let local: f64 = pieces
                .iter()
                .filter(|(b, _)| box_contains(b, &at))
                .map(|(_, weight)| weight)
                .sum();
            if relevant && u * local < (-ti_val).exp() {
                assert!(tau + ti_val > 0.0);
                let lifetime = tau + ti_val + stream.exp1();
                pieces.push((family.enlargement(&candidate), tau.exp()));
                cylinders.push(Cylinder {
                    basis: candidate,
                    birth: -tau,
                    lifetime,
                    parent,
                });
            }
            if self.over_limits(stream, start, cylinders.len()) {
                truncated = true;
                break;
            }
        }
        Clan {
            cylinders,
            window: self.window.clone(),
            draws: 0,
            time_depth: tau,
            truncated,
        }
    }
}
