//! Forward cleaning of a backward-constructed clan.
//!
//! Cylinders are revisited in birth order.  Each one is kept with the
//! acceptance probability evaluated against the kept cylinders alive at its
//! birth; the projection of the kept cylinders alive at time zero onto the
//! window is then an exact draw from the target law.  Verdicts are logged so
//! a cleaning can be replayed or audited.

use crate::clan::{Clan, Cylinder};
use crate::model::{Configuration, Model, Window};
use crate::stream::RandomStream;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CleanError {
    #[error("clan was truncated; clean the full construction or opt into the biased path")]
    Truncated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub index: usize,
    pub acceptance: f64,
    pub flag: f64,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanOutcome {
    /// Kept cylinder indices, ascending.
    pub kept: Vec<usize>,
    /// One verdict per cylinder, in the order they were revisited.
    pub verdicts: Vec<Verdict>,
}

impl CleanOutcome {
    pub fn is_kept(&self, index: usize) -> bool {
        self.kept.binary_search(&index).is_ok()
    }
}

/// Indices in revisit order: birth ascending, construction order on ties.
fn revisit_order(cylinders: &[Cylinder]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cylinders.len()).collect();
    order.sort_by(|&a, &b| cylinders[a].birth.total_cmp(&cylinders[b].birth));
    order
}

/// Deterministic cleaning core shared by clans and forward sweeps.
/// `flags[i]` is the uniform mark for `cylinders[i]`; entries of `auto_keep`
/// are kept without a trial (used for initial conditions).
pub fn clean_core(
    cylinders: &[Cylinder],
    model: &dyn Model,
    flags: &[f64],
    auto_keep: &[bool],
) -> CleanOutcome {
    assert_eq!(cylinders.len(), flags.len());
    assert_eq!(cylinders.len(), auto_keep.len());
    let mut kept_mask = vec![false; cylinders.len()];
    let mut verdicts = Vec::with_capacity(cylinders.len());
    for idx in revisit_order(cylinders) {
        if auto_keep[idx] {
            kept_mask[idx] = true;
            verdicts.push(Verdict {
                index: idx,
                acceptance: 1.0,
                flag: flags[idx],
                kept: true,
            });
            continue;
        }
        let c = &cylinders[idx];
        let others: Vec<crate::model::Individual> = cylinders
            .iter()
            .enumerate()
            .filter(|(j, o)| kept_mask[*j] && *j != idx && o.alive_at(c.birth))
            .map(|(_, o)| o.basis.clone())
            .collect();
        let xi = Configuration::from_items(others);
        let acceptance = model.acceptance(&c.basis, &xi);
        let kept = flags[idx] < acceptance;
        kept_mask[idx] = kept;
        verdicts.push(Verdict {
            index: idx,
            acceptance,
            flag: flags[idx],
            kept,
        });
    }
    let kept = (0..cylinders.len()).filter(|&i| kept_mask[i]).collect();
    CleanOutcome { kept, verdicts }
}

/// Draw one uniform flag per cylinder (in revisit order) and clean.
pub fn clean_with_stream(
    cylinders: &[Cylinder],
    model: &dyn Model,
    stream: &mut RandomStream,
) -> CleanOutcome {
    let mut flags = vec![0.0f64; cylinders.len()];
    for idx in revisit_order(cylinders) {
        flags[idx] = stream.next_uniform();
    }
    clean_core(cylinders, model, &flags, &vec![false; cylinders.len()])
}

/// Replay a cleaning from recorded flags.
pub fn clean_with_flags(
    cylinders: &[Cylinder],
    model: &dyn Model,
    flags: &[f64],
) -> CleanOutcome {
    clean_core(cylinders, model, flags, &vec![false; cylinders.len()])
}

/// Clean a complete clan.  Truncated clans are refused because their missing
/// ancestors could change verdicts.
pub fn clean(
    clan: &Clan,
    model: &dyn Model,
    stream: &mut RandomStream,
) -> Result<CleanOutcome, CleanError> {
    if clan.truncated {
        return Err(CleanError::Truncated);
    }
    Ok(clean_with_stream(&clan.cylinders, model, stream))
}

/// Clean a truncated clan anyway.  The result carries the impatience bias
/// accounted for separately; callers must report it.
pub fn clean_biased(clan: &Clan, model: &dyn Model, stream: &mut RandomStream) -> CleanOutcome {
    clean_with_stream(&clan.cylinders, model, stream)
}

/// Bases of kept cylinders alive at time zero that are charged to the
/// window.
pub fn project(
    cylinders: &[Cylinder],
    outcome: &CleanOutcome,
    model: &dyn Model,
    window: &Window,
) -> Configuration {
    let items = outcome
        .kept
        .iter()
        .map(|&i| &cylinders[i])
        .filter(|c| c.alive_at(0.0) && model.meets_window(&c.basis, window))
        .map(|c| c.basis.clone());
    Configuration::from_items(items.collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clan::{ClanBuilder, ClanLimits};
    use crate::model::{Individual, Window};
    use crate::models::ToyModel;

    fn generous() -> ClanLimits {
        ClanLimits {
            max_draws: 1_000_000,
            max_cylinders: 1_000_000,
        }
    }

    fn sample_stream(seed: u64, i: u32) -> (RandomStream, RandomStream) {
        let per = RandomStream::from_seed(seed).derive(i);
        (per.derive(0), per.derive(1))
    }

    #[test]
    fn free_model_keeps_everything() {
        let m = ToyModel::poisson(&[("a", 0.4), ("b", 0.2)]).unwrap();
        let builder = ClanBuilder::new(&m, Window::All).unwrap().limits(generous());
        for i in 0..200 {
            let (mut cs, mut fs) = sample_stream(1, i);
            let clan = builder.build(&mut cs);
            let outcome = clean(&clan, &m, &mut fs).unwrap();
            assert_eq!(outcome.kept.len(), clan.cylinders.len());
            for v in &outcome.verdicts {
                assert_eq!(v.acceptance, 1.0);
            }
        }
    }

    #[test]
    fn hardcore_pair_never_projects_both() {
        let m = ToyModel::hardcore(&[("a", 0.4), ("b", 0.4)], &[("a", "b")]).unwrap();
        let builder = ClanBuilder::new(&m, Window::All).unwrap().limits(generous());
        let mut occupied = 0usize;
        for i in 0..3000 {
            let (mut cs, mut fs) = sample_stream(2, i);
            let clan = builder.build(&mut cs);
            let outcome = clean(&clan, &m, &mut fs).unwrap();
            let config = project(&clan.cylinders, &outcome, &m, &Window::All);
            assert!(config.len() <= 1, "exclusion violated: {config:?}");
            occupied += config.len();
        }
        assert!(occupied > 500, "nontrivial occupancy: {occupied}");
    }

    #[test]
    fn kept_set_respects_exclusions_at_all_births() {
        let m = ToyModel::hardcore(&[("a", 0.5), ("b", 0.5), ("c", 0.5)], &[("a", "b"), ("b", "c")])
            .unwrap();
        let builder = ClanBuilder::new(&m, Window::All).unwrap().limits(generous());
        for i in 0..1500 {
            let (mut cs, mut fs) = sample_stream(3, i);
            let clan = builder.build(&mut cs);
            let outcome = clean(&clan, &m, &mut fs).unwrap();
            for (a, &ia) in outcome.kept.iter().enumerate() {
                for &ib in &outcome.kept[a + 1..] {
                    let (ca, cb) = (&clan.cylinders[ia], &clan.cylinders[ib]);
                    if m.incompatible(&ca.basis, &cb.basis).unwrap() {
                        let later = if ca.birth >= cb.birth { ca } else { cb };
                        let earlier = if ca.birth >= cb.birth { cb } else { ca };
                        assert!(
                            !earlier.alive_at(later.birth),
                            "kept incompatible overlap at {}",
                            later.birth
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn single_site_occupation_near_one_third() {
        let m = ToyModel::hardcore(&[("a", 0.5)], &[]).unwrap();
        let builder = ClanBuilder::new(&m, Window::All).unwrap().limits(generous());
        let n = 20_000usize;
        let mut occupied = 0usize;
        for i in 0..n {
            let (mut cs, mut fs) = sample_stream(4, i as u32);
            let clan = builder.build(&mut cs);
            let outcome = clean(&clan, &m, &mut fs).unwrap();
            occupied += project(&clan.cylinders, &outcome, &m, &Window::All).len();
        }
        let p = occupied as f64 / n as f64;
        let target = 1.0 / 3.0;
        let se = (target * (1.0 - target) / n as f64).sqrt();
        assert!((p - target).abs() < 4.0 * se, "occupation {p}");
    }

    #[test]
    fn cleaning_is_deterministic_and_replayable() {
        let m = ToyModel::hardcore(&[("a", 0.6), ("b", 0.6)], &[("a", "b")]).unwrap();
        let builder = ClanBuilder::new(&m, Window::All).unwrap().limits(generous());
        let (mut cs, _) = sample_stream(5, 9);
        let clan = builder.build(&mut cs);
        let (_, mut f1) = sample_stream(5, 9);
        let (_, mut f2) = sample_stream(5, 9);
        let a = clean(&clan, &m, &mut f1).unwrap();
        let b = clean(&clan, &m, &mut f2).unwrap();
        assert_eq!(a, b);
        let flags: Vec<f64> = {
            let mut v = vec![0.0; clan.cylinders.len()];
            for verdict in &a.verdicts {
                v[verdict.index] = verdict.flag;
            }
            v
        };
        let replay = clean_with_flags(&clan.cylinders, &m, &flags);
        assert_eq!(replay, a);
    }

    #[test]
    fn verdicts_in_window_depend_only_on_ancestors() {
        let m = ToyModel::hardcore(
            &[("a", 0.5), ("b", 0.5), ("c", 0.5)],
            &[("a", "b"), ("b", "c")],
        )
        .unwrap();
        let wide = Window::All;
        let narrow = Window::Sites { ids: vec![0] };
        let builder = ClanBuilder::new(&m, wide.clone()).unwrap().limits(generous());
        let mut checked = 0usize;
        for i in 0..2500 {
            let (mut cs, mut fs) = sample_stream(6, i);
            let clan = builder.build(&mut cs);
            let full = clean(&clan, &m, &mut fs).unwrap();
            let narrow_roots: Vec<usize> = clan
                .roots(&m)
                .into_iter()
                .filter(|&r| m.meets_window(&clan.cylinders[r].basis, &narrow))
                .collect();
            let closure = clan.ancestor_closure(&m, &narrow_roots);
            let sub: Vec<Cylinder> = closure.iter().map(|&i| clan.cylinders[i].clone()).collect();
            let full_flags: Vec<f64> = {
                let mut v = vec![0.0; clan.cylinders.len()];
                for verdict in &full.verdicts {
                    v[verdict.index] = verdict.flag;
                }
                v
            };
            let sub_flags: Vec<f64> = closure.iter().map(|&i| full_flags[i]).collect();
            let sub_outcome = clean_with_flags(&sub, &m, &sub_flags);
            let a = project(&clan.cylinders, &full, &m, &narrow);
            let b = project(&sub, &sub_outcome, &m, &narrow);
            assert_eq!(a, b, "window verdicts changed when ancestors were kept");
            if !closure.is_empty() {
                checked += 1;
            }
        }
        assert!(checked > 300, "nontrivial closures: {checked}");
    }

    #[test]
    fn truncated_clans_are_refused_but_biased_path_runs() {
        let m = ToyModel::hardcore(&[("a", 5.0), ("b", 5.0)], &[("a", "b")]).unwrap();
        let builder = ClanBuilder::new(&m, Window::All).unwrap().limits(ClanLimits {
            max_draws: 1_000_000,
            max_cylinders: 20,
        });
        let (mut cs, mut fs) = sample_stream(7, 0);
        let clan = builder.build(&mut cs);
        assert!(clan.truncated);
        assert!(matches!(clean(&clan, &m, &mut fs), Err(CleanError::Truncated)));
        let outcome = clean_biased(&clan, &m, &mut fs);
        assert_eq!(outcome.verdicts.len(), 20);
    }

    #[test]
    fn projection_respects_window_and_lifetime() {
        let m = ToyModel::poisson(&[("a", 0.5), ("b", 0.5)]).unwrap();
        let cylinders = vec![
            Cylinder {
                basis: Individual::Site { id: 0 },
                birth: -1.0,
                lifetime: 1.0,
                parent: None,
            },
            Cylinder {
                basis: Individual::Site { id: 1 },
                birth: -2.0,
                lifetime: 1.5,
                parent: None,
            },
        ];
        let outcome = clean_with_flags(&cylinders, &m, &[0.0, 0.0]);
        assert_eq!(outcome.kept.len(), 2);
        let all = project(&cylinders, &outcome, &m, &Window::All);
        assert_eq!(all.len(), 1);
        assert_eq!(all.items()[0], Individual::Site { id: 0 });
        let other = project(&cylinders, &outcome, &m, &Window::Sites { ids: vec![1] });
        assert!(other.is_empty());
    }
}
