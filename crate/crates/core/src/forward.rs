//! Forward-in-time finite-volume dynamics.
//!
//! The free process restricted to bases charged to a window is simulated
//! forward, either accepting each birth on the spot or collecting the whole
//! free sweep first and replaying the verdicts afterwards.  The two
//! procedures consume the same draws in the same order and produce the same
//! trajectory word for word.
//!
//! `stationary_window` draws from the time-stationary law directly: it
//! exploits reversibility of the free process to find the most recent
//! instant before time zero at which nothing relevant to the search window
//! was alive, then replays the interacting dynamics from that regeneration
//! instant up to time zero.

use crate::clan::Cylinder;
use crate::cleaner::{clean_core, project, CleanOutcome};
use crate::model::{
    Configuration, Domination, GermBox, Individual, Model, ModelError, Window,
};
use crate::stream::{RandomStream, StreamError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ForwardError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error("initial individual is not charged to the window")]
    InitialOutsideWindow,
    #[error("horizon must be positive and finite")]
    BadHorizon,
    #[error("regeneration search passed {events} births reaching depth {depth:.3} without emptying")]
    SearchTruncated { depth: f64, events: usize },
}

/// Draws bases from the free birth law restricted to the window.
struct WindowSampler<'a> {
    model: &'a dyn Model,
    window: &'a Window,
    members: Vec<Individual>,
    cumulative: Vec<f64>,
    germ_box: Option<GermBox>,
}

impl<'a> WindowSampler<'a> {
    fn new(model: &'a dyn Model, window: &'a Window) -> Result<(WindowSampler<'a>, f64), ModelError> {
        model.check_window(window)?;
        let mass = model.dominating_mass(window)?;
        match model.domination() {
            Domination::Discrete(f) => {
                let members = f.window_members(window)?;
                let mut cumulative = Vec::with_capacity(members.len());
                let mut acc = 0.0;
                for m in &members {
                    acc += f.weight(m);
                    cumulative.push(acc);
                }
                Ok((
                    WindowSampler {
                        model,
                        window,
                        members,
                        cumulative,
                        germ_box: None,
                    },
                    mass,
                ))
            }
            Domination::Continuous(f) => Ok((
                WindowSampler {
                    model,
                    window,
                    members: Vec::new(),
                    cumulative: Vec::new(),
                    germ_box: Some(f.window_box(window)?),
                },
                mass,
            )),
        }
    }

    fn draw(&self, stream: &mut RandomStream) -> Individual {
        match self.model.domination() {
            Domination::Discrete(_) => {
                let idx = stream.next_index(&self.cumulative);
                self.members[idx].clone()
            }
            Domination::Continuous(f) => loop {
                let point = match self.germ_box.as_ref().expect("continuous sampler") {
                    GermBox::Line(iv) => {
                        crate::model::GermPoint::Line(iv.lo + stream.next_uniform() * iv.len())
                    }
                    GermBox::Plane(r) => {
                        let x = r.x0 + stream.next_uniform() * (r.x1 - r.x0);
                        let y = r.y0 + stream.next_uniform() * (r.y1 - r.y0);
                        crate::model::GermPoint::Plane(x, y)
                    }
                };
                let candidate = f.propose(point, stream);
                if self.model.meets_window(&candidate, self.window) {
                    return candidate;
                }
            },
        }
    }
}

/// A realized forward run: every free cylinder (initial condition first),
/// its uniform flag, and the verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub cylinders: Vec<Cylinder>,
    pub flags: Vec<f64>,
    pub kept: Vec<bool>,
    /// Leading cylinders that form the initial condition and were kept
    /// unconditionally.
    pub initial: usize,
    pub horizon: f64,
}

impl Trajectory {
    /// Configuration of kept cylinders alive at `t`.
    pub fn at(&self, t: f64) -> Configuration {
        Configuration::from_items(
            self.cylinders
                .iter()
                .zip(&self.kept)
                .filter(|(c, &k)| k && c.alive_at(t))
                .map(|(c, _)| c.basis.clone())
                .collect(),
        )
    }

    pub fn final_config(&self) -> Configuration {
        self.at(self.horizon)
    }

    /// One line per event for audit: time, basis, flag, verdict.
    pub fn export_lines(&self) -> String {
        let mut out = String::new();
        for ((c, flag), kept) in self.cylinders.iter().zip(&self.flags).zip(&self.kept) {
            let v = serde_json::json!({
                "time": c.birth,
                "basis": c.basis,
                "lifetime": c.lifetime,
                "flag": flag,
                "kept": kept,
            });
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }
}

fn free_sweep(
    model: &dyn Model,
    window: &Window,
    init: &Configuration,
    horizon: f64,
    stream: &mut RandomStream,
) -> Result<(Vec<Cylinder>, Vec<f64>, usize), ForwardError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(ForwardError::BadHorizon);
    }
    for item in init.iter() {
        model.validate(item)?;
        if !model.meets_window(item, window) {
            return Err(ForwardError::InitialOutsideWindow);
        }
    }
    let (sampler, mass) = WindowSampler::new(model, window)?;
    let mut cylinders = Vec::new();
    let mut flags = Vec::new();
    for item in init.iter() {
        let lifetime = stream.exp1();
        cylinders.push(Cylinder {
            basis: item.clone(),
            birth: 0.0,
            lifetime,
            parent: None,
        });
        flags.push(0.0);
    }
    let initial = cylinders.len();
    if mass > 0.0 {
        let mut t = 0.0f64;
        loop {
            t += stream.next_exponential(mass)?;
            if t > horizon {
                break;
            }
            let basis = sampler.draw(stream);
            let lifetime = stream.exp1();
            let flag = stream.next_uniform();
            cylinders.push(Cylinder {
                basis,
                birth: t,
                lifetime,
                parent: None,
            });
            flags.push(flag);
        }
    }
    Ok((cylinders, flags, initial))
}

/// Simulate the interacting process, deciding each birth as it happens.
pub fn simulate_forward(
    model: &dyn Model,
    window: &Window,
    init: &Configuration,
    horizon: f64,
    stream: &mut RandomStream,
) -> Result<Trajectory, ForwardError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(ForwardError::BadHorizon);
    }
    for item in init.iter() {
        model.validate(item)?;
        if !model.meets_window(item, window) {
            return Err(ForwardError::InitialOutsideWindow);
        }
    }
    let (sampler, mass) = WindowSampler::new(model, window)?;
    let mut cylinders = Vec::new();
    let mut flags = Vec::new();
    let mut kept = Vec::new();
    for item in init.iter() {
        let lifetime = stream.exp1();
        cylinders.push(Cylinder {
            basis: item.clone(),
            birth: 0.0,
            lifetime,
            parent: None,
        });
        flags.push(0.0);
        kept.push(true);
    }
    let initial = cylinders.len();
    if mass > 0.0 {
        let mut t = 0.0f64;
        loop {
            t += stream.next_exponential(mass)?;
            if t > horizon {
                break;
            }
            let basis = sampler.draw(stream);
            let lifetime = stream.exp1();
            let flag = stream.next_uniform();
            let alive: Vec<Individual> = cylinders
                .iter()
                .zip(&kept)
                .filter(|(c, &k)| k && c.alive_at(t))
                .map(|(c, _)| c.basis.clone())
                .collect();
            let xi = Configuration::from_items(alive);
            let accepted = flag < model.acceptance(&basis, &xi);
            cylinders.push(Cylinder {
                basis,
                birth: t,
                lifetime,
                parent: None,
            });
            flags.push(flag);
            kept.push(accepted);
        }
    }
    Ok(Trajectory {
        cylinders,
        flags,
        kept,
        initial,
        horizon,
    })
}

/// Collect the free sweep first, then replay the verdicts in birth order.
/// On a shared stream this reproduces `simulate_forward` word for word.
pub fn two_sweep(
    model: &dyn Model,
    window: &Window,
    init: &Configuration,
    horizon: f64,
    stream: &mut RandomStream,
) -> Result<Trajectory, ForwardError> {
    let (cylinders, flags, initial) = free_sweep(model, window, init, horizon, stream)?;
    let mut auto_keep = vec![false; cylinders.len()];
    for slot in auto_keep.iter_mut().take(initial) {
        *slot = true;
    }
    let outcome = clean_core(&cylinders, model, &flags, &auto_keep);
    let mut kept = vec![false; cylinders.len()];
    for &i in &outcome.kept {
        kept[i] = true;
    }
    Ok(Trajectory {
        cylinders,
        flags,
        kept,
        initial,
        horizon,
    })
}

/// One exact draw from the time-stationary law seen through `target`.
#[derive(Debug, Clone)]
pub struct StationarySample {
    pub config: Configuration,
    /// Backward distance to the regeneration instant.
    pub depth: f64,
    /// Free cylinders generated between regeneration and time zero.
    pub events: usize,
}

/// Search backward from time zero for the most recent instant at which no
/// cylinder charged to `search` was alive, replay the dynamics forward from
/// that instant, and project the time-zero configuration onto `target`.
/// `search` should extend beyond `target` by at least the incompatibility
/// reach of the model.
pub fn stationary_window(
    model: &dyn Model,
    search: &Window,
    target: &Window,
    max_events: usize,
    stream: &mut RandomStream,
) -> Result<StationarySample, ForwardError> {
    let (sampler, mass) = WindowSampler::new(model, search)?;
    if mass <= 0.0 {
        return Ok(StationarySample {
            config: Configuration::empty(),
            depth: 0.0,
            events: 0,
        });
    }
    // The reversed free process: cylinders alive at time zero, then fresh
    // births until the first gap in coverage.
    let n0 = stream.next_poisson(mass)? as usize;
    let mut reversed: Vec<(f64, Individual, f64)> = Vec::new();
    let mut cover_end = 0.0f64;
    for _ in 0..n0 {
        let basis = sampler.draw(stream);
        let lifetime = stream.exp1();
        cover_end = cover_end.max(lifetime);
        reversed.push((0.0, basis, lifetime));
    }
    if n0 > 0 {
        let mut t = 0.0f64;
        loop {
            t += stream.next_exponential(mass)?;
            if t > cover_end {
                break;
            }
            let basis = sampler.draw(stream);
            let lifetime = stream.exp1();
            cover_end = cover_end.max(t + lifetime);
            reversed.push((t, basis, lifetime));
            if reversed.len() > max_events {
                return Err(ForwardError::SearchTruncated {
                    depth: cover_end,
                    events: reversed.len(),
                });
            }
        }
    }
    // Flip the time axis: a reversed cylinder on [b, b + l] covers
    // [-(b + l), -b] in real time.  Nothing relevant is alive just before
    // -cover_end, so verdicts replayed from there are exact.
    let mut cylinders: Vec<Cylinder> = reversed
        .into_iter()
        .map(|(b, basis, l)| Cylinder {
            basis,
            birth: -(b + l),
            lifetime: l,
            parent: None,
        })
        .collect();
    cylinders.sort_by(|a, b| a.birth.total_cmp(&b.birth));
    let mut flags = vec![0.0f64; cylinders.len()];
    for flag in flags.iter_mut() {
        *flag = stream.next_uniform();
    }
    let outcome: CleanOutcome =
        clean_core(&cylinders, model, &flags, &vec![false; cylinders.len()]);
    let config = project(&cylinders, &outcome, model, target);
    Ok(StationarySample {
        config,
        depth: cover_end,
        events: cylinders.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::loss::LengthLaw;
    use crate::models::{ContourModel, Grid, LossModel, RandomClusterModel, ToyModel};

    #[test]
    fn free_counts_are_poisson_at_long_horizon()  {
        let m = ToyModel::poisson(&[("a", 0.3), ("b", 0.4)]).unwrap();
        let n = 20_000usize;
        let root = RandomStream::from_seed(41);
        let mut total = 0usize;
        let mut empty = 0usize;
        for i in 0..n {
            let mut s = root.derive(i as u32);
            let traj =
                simulate_forward(&m, &Window::All, &Configuration::empty(), 9.0, &mut s).unwrap();
            let count = traj.final_config().len();
            total += count;
            if count == 0 {
                empty += 1;
            }
        }
        let mean = total as f64 / n as f64;
        let se = (0.7f64 / n as f64).sqrt();
        assert!((mean - 0.7).abs() < 4.0 * se, "mean {mean}");
        let p0 = empty as f64 / n as f64;
        let p0_true = (-0.7f64).exp();
        let se0 = (p0_true * (1.0 - p0_true) / n as f64).sqrt();
        assert!((p0 - p0_true).abs() < 4.0 * se0, "p0 {p0}");
    }

    #[test]
    fn hardcore_pair_is_never_doubly_occupied() {
        let m = ToyModel::hardcore(&[("a", 0.8), ("b", 0.8)], &[("a", "b")]).unwrap();
        let root = RandomStream::from_seed(42);
        for i in 0..300 {
            let mut s = root.derive(i);
            let traj =
                simulate_forward(&m, &Window::All, &Configuration::empty(), 6.0, &mut s).unwrap();
            let mut t = 0.0;
            while t <= 6.0 {
                assert!(traj.at(t).len() <= 1);
                t += 0.05;
            }
        }
    }

    #[test]
    fn two_sweep_matches_forward_word_for_word() {
        let toy = ToyModel::hardcore(&[("a", 0.7), ("b", 0.5), ("c", 0.3)], &[("a", "b")]).unwrap();
        let contour = ContourModel::new(1.8, 6).unwrap();
        let rc = RandomClusterModel::new(0.5, 2.0, Grid::new(2, 2).unwrap()).unwrap();
        let cases: Vec<(&dyn Model, Window)> = vec![
            (&toy, Window::All),
            (
                &contour,
                Window::Cells {
                    x0: 0,
                    y0: 0,
                    x1: 2,
                    y1: 2,
                },
            ),
            (&rc, Window::All),
        ];
        let root = RandomStream::from_seed(43);
        for (which, (model, window)) in cases.into_iter().enumerate() {
            for i in 0..20u32 {
                let mut s1 = root.derive(which as u32 * 100 + i);
                let mut s2 = root.derive(which as u32 * 100 + i);
                let a = simulate_forward(model, &window, &Configuration::empty(), 4.0, &mut s1)
                    .unwrap();
                let b = two_sweep(model, &window, &Configuration::empty(), 4.0, &mut s2).unwrap();
                assert_eq!(s1.counter(), s2.counter());
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn initial_condition_is_kept_and_respected() {
        let m = ToyModel::hardcore(&[("a", 0.5), ("b", 0.5)], &[("a", "b")]).unwrap();
        let init = Configuration::from_items(vec![m.site("a")]);
        let mut s = RandomStream::from_seed(44);
        let traj = two_sweep(&m, &Window::All, &init, 0.5, &mut s).unwrap();
        assert_eq!(traj.initial, 1);
        assert!(traj.kept[0]);
        assert!(traj.at(0.0).len() >= 1);
    }

    #[test]
    fn stationary_single_site_occupation() {
        let m = ToyModel::hardcore(&[("a", 0.5)], &[]).unwrap();
        let n = 20_000usize;
        let root = RandomStream::from_seed(45);
        let mut occupied = 0usize;
        for i in 0..n {
            let mut s = root.derive(i as u32);
            let sample = stationary_window(&m, &Window::All, &Window::All, 100_000, &mut s).unwrap();
            occupied += sample.config.len();
        }
        let p = occupied as f64 / n as f64;
        let target = 1.0 / 3.0;
        let se = (target * (1.0 - target) / n as f64).sqrt();
        assert!((p - target).abs() < 4.0 * se, "occupation {p}");
    }

    #[test]
    fn stationary_free_law_is_poisson() {
        let m = ToyModel::poisson(&[("a", 0.6)]).unwrap();
        let n = 20_000usize;
        let root = RandomStream::from_seed(46);
        let mut empty = 0usize;
        for i in 0..n {
            let mut s = root.derive(i as u32);
            let sample = stationary_window(&m, &Window::All, &Window::All, 100_000, &mut s).unwrap();
            if sample.config.is_empty() {
                empty += 1;
            }
        }
        let p0 = empty as f64 / n as f64;
        let p0_true = (-0.6f64).exp();
        let se0 = (p0_true * (1.0 - p0_true) / n as f64).sqrt();
        assert!((p0 - p0_true).abs() < 4.0 * se0, "p0 {p0}");
    }

    #[test]
    fn stationary_loss_respects_capacity() {
        let m = LossModel::new(0.2, 1, LengthLaw::Fixed { len: 1.0 }).unwrap();
        let search = Window::Interval { lo: -6.0, hi: 6.0 };
        let target = Window::Interval { lo: -1.0, hi: 1.0 };
        let root = RandomStream::from_seed(47);
        let mut seen = 0usize;
        for i in 0..2000 {
            let mut s = root.derive(i);
            let sample = stationary_window(&m, &search, &target, 100_000, &mut s).unwrap();
            let items = sample.config.items();
            for (a, call) in items.iter().enumerate() {
                for other in &items[a + 1..] {
                    assert!(
                        !m.incompatible(call, other).unwrap(),
                        "kept calls overlap: {call:?} {other:?}"
                    );
                }
            }
            seen += sample.config.len();
        }
        assert!(seen > 100, "calls observed: {seen}");
    }

    #[test]
    fn regeneration_search_can_refuse() {
        let m = ToyModel::poisson(&[("a", 6.0), ("b", 6.0)]).unwrap();
        let root = RandomStream::from_seed(48);
        let mut refused = 0;
        for i in 0..50 {
            let mut s = root.derive(i);
            match stationary_window(&m, &Window::All, &Window::All, 25, &mut s) {
                Err(ForwardError::SearchTruncated { depth, events }) => {
                    assert!(depth > 0.0 && events > 25);
                    refused += 1;
                }
                Ok(_) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
        assert!(refused > 0);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let m = ToyModel::poisson(&[("a", 0.5)]).unwrap();
        let mut s = RandomStream::from_seed(49);
        assert!(matches!(
            simulate_forward(&m, &Window::All, &Configuration::empty(), 0.0, &mut s),
            Err(ForwardError::BadHorizon)
        ));
        let narrow = Window::Sites { ids: vec![0] };
        let outside = Configuration::from_items(vec![Individual::Site { id: 9 }]);
        assert!(simulate_forward(&m, &narrow, &outside, 1.0, &mut s).is_err());
    }
}
