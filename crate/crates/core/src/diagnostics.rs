//! Certification and bias accounting.
//!
//! The backward construction is provably finite when a size-weighted
//! branching bound on the incompatibility structure is below one.  For
//! countable families the bound is computed directly from the catalog; for
//! continuum families each model supplies its analytic bounds and the best
//! one is reported.  A bound at or above one never means the model is
//! supercritical, only that finiteness is not certified by this criterion.
//!
//! Every build feeds a ledger entry; the ledger summary turns observed
//! truncation tails into the user-impatience bias bound p / (1 - p) on the
//! total variation distance of the delivered law.

use crate::clan::Clan;
use crate::model::{Domination, Model, ModelError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("probability must lie in [0, 1): got {0}")]
    BadProbability(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone)]
pub struct SubcriticalityReport {
    /// Named bounds, as supplied by the model or derived from its catalog.
    pub bounds: Vec<(String, f64)>,
    /// The bound that decides: the catalog supremum for countable
    /// families, the smallest analytic bound for continuum ones.
    pub alpha: f64,
    pub certified: bool,
}

/// Size-weighted branching bound of the incompatibility structure.
pub fn alpha(model: &dyn Model) -> Result<SubcriticalityReport, DiagnosticsError> {
    match model.domination() {
        Domination::Discrete(family) => {
            let mut sup = 0.0f64;
            for gamma in family.representatives() {
                let mut score = 0.0;
                for theta in family.incompatible_members(&gamma) {
                    score += model.size(&theta) * family.weight(&theta);
                }
                score /= model.size(&gamma);
                sup = sup.max(score);
            }
            Ok(SubcriticalityReport {
                bounds: vec![("size_weighted_catalog".to_string(), sup)],
                alpha: sup,
                certified: sup < 1.0,
            })
        }
        Domination::Continuous(_) => {
            let bounds = model.analytic_bounds();
            assert!(!bounds.is_empty(), "continuum model must supply bounds");
            let best = bounds
                .iter()
                .map(|(_, v)| *v)
                .fold(f64::INFINITY, f64::min);
            Ok(SubcriticalityReport {
                bounds,
                alpha: best,
                certified: best < 1.0,
            })
        }
    }
}

/// Bound on the total variation error of a sampler that aborts and redraws
/// with probability `p`: p / (1 - p).
pub fn bias_bound(p: f64) -> Result<f64, DiagnosticsError> {
    if !(0.0..1.0).contains(&p) {
        return Err(DiagnosticsError::BadProbability(p));
    }
    Ok(p / (1.0 - p))
}

/// Per-build accounting record.
#[derive(Debug, Clone, Serialize)]
pub struct LedgerEntry {
    pub index: u64,
    pub draws: u64,
    pub time_depth: f64,
    pub generation_depth: u32,
    pub max_basis_size: f64,
    pub cylinders: usize,
    pub truncated: bool,
}

impl LedgerEntry {
    pub fn from_clan(index: u64, clan: &Clan, model: &dyn Model) -> LedgerEntry {
        LedgerEntry {
            index,
            draws: clan.draws,
            time_depth: clan.time_depth,
            generation_depth: clan.generation_depth(model),
            max_basis_size: clan.max_basis_size(model),
            cylinders: clan.cylinders.len(),
            truncated: clan.truncated,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BiasLedger {
    pub entries: Vec<LedgerEntry>,
}

impl BiasLedger {
    pub fn new() -> BiasLedger {
        BiasLedger::default()
    }

    pub fn push(&mut self, entry: LedgerEntry) {
        self.entries.push(entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Tail fractions against the given budget, and the implied bias bound.
    pub fn summarize(&self, draw_budget: u64, size_threshold: f64) -> TailSummary {
        let n = self.entries.len();
        let frac = |count: usize| {
            if n == 0 {
                0.0
            } else {
                count as f64 / n as f64
            }
        };
        let over_draws = self.entries.iter().filter(|e| e.draws > draw_budget).count();
        let over_size = self
            .entries
            .iter()
            .filter(|e| e.max_basis_size >= size_threshold)
            .count();
        let truncated = self.entries.iter().filter(|e| e.truncated).count();
        let any = self
            .entries
            .iter()
            .filter(|e| e.truncated || e.draws > draw_budget || e.max_basis_size >= size_threshold)
            .count();
        let p_any = frac(any);
        TailSummary {
            runs: n,
            truncated,
            draw_budget,
            size_threshold,
            p_draws_exceed: frac(over_draws),
            p_size_exceed: frac(over_size),
            p_any_exceed: p_any,
            bias: bias_bound(p_any).ok(),
            depth_tail: fit_depth_tail(&self.entries),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailSummary {
    pub runs: usize,
    pub truncated: usize,
    pub draw_budget: u64,
    pub size_threshold: f64,
    pub p_draws_exceed: f64,
    pub p_size_exceed: f64,
    pub p_any_exceed: f64,
    /// Total variation bias bound implied by the abort fraction, absent
    /// when every run aborted.
    pub bias: Option<f64>,
    pub depth_tail: Option<DepthFit>,
}

/// Least-squares slope of the log survival function of generation depth.
#[derive(Debug, Clone, Serialize)]
pub struct DepthFit {
    pub slope: f64,
    pub stderr: f64,
    pub points: usize,
}

/// Fit ln P[depth > n] over the first decade of survival, using only
/// points backed by at least 100 surviving runs.
fn fit_depth_tail(entries: &[LedgerEntry]) -> Option<DepthFit> {
    let n = entries.len();
    if n == 0 {
        return None;
    }
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut first_survival = None;
    for level in 0u32.. {
        let survivors = entries
            .iter()
            .filter(|e| e.generation_depth > level)
            .count();
        if survivors < 100 {
            break;
        }
        let s = survivors as f64 / n as f64;
        let anchor = *first_survival.get_or_insert(s);
        if s < anchor / 10.0 {
            break;
        }
        points.push((level as f64, s.ln()));
    }
    if points.len() < 3 {
        return None;
    }
    let m = points.len() as f64;
    let xbar = points.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - xbar).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let sigma2 = ss_res / (m - 2.0);
    Some(DepthFit {
        slope,
        stderr: (sigma2 / sxx).sqrt(),
        points: points.len(),
    })
}

#[derive(Debug, Clone)]
pub struct DecayRow {
    pub generation: usize,
    pub mean: f64,
    pub se: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    pub all_ok: bool,
}

/// Check the expected generation sizes against the geometric envelope
/// `root_mass * alpha^n`.  `sizes[i][n]` is the size of generation `n` in
/// clan `i` (missing entries are zero).
pub fn generation_decay(
    sizes: &[Vec<usize>],
    root_mass: f64,
    alpha: f64,
    max_generation: usize,
) -> DecayReport {
    let n = sizes.len().max(1) as f64;
    let mut rows = Vec::with_capacity(max_generation + 1);
    let mut all_ok = true;
    for g in 0..=max_generation {
        let values: Vec<f64> = sizes
            .iter()
            .map(|s| s.get(g).copied().unwrap_or(0) as f64)
            .collect();
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let se = (var / n).sqrt();
        let bound = root_mass * alpha.powi(g as i32);
        let ok = mean <= bound + 3.0 * se;
        all_ok &= ok;
        rows.push(DecayRow {
            generation: g,
            mean,
            se,
            bound,
            ok,
        });
    }
    DecayReport { rows, all_ok }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::area::Grain;
    use crate::models::loss::LengthLaw;
    use crate::models::{AreaModel, ContourModel, Grid, LossModel, RandomClusterModel, ToyModel};
    use crate::stream::RandomStream;
    use proptest::prelude::*;

    #[test]
    fn toy_pair_bound_is_exact() {
        let m = ToyModel::hardcore(&[("a", 0.4), ("b", 0.4)], &[("a", "b")]).unwrap();
        let report = alpha(&m).unwrap();
        assert_eq!(report.alpha, 0.8);
        assert!(report.certified);
    }

    #[test]
    fn area_bound_matches_reach_mass() {
        let clumping = AreaModel::new(0.05, 1.2, Grain::Disc { r: 1.0 }).unwrap();
        let report = alpha(&clumping).unwrap();
        assert_eq!(report.alpha, 0.6283185307179586);
        assert!(report.certified);
        assert_eq!(report.bounds.len(), 1);
        let repulsive = AreaModel::new(0.05, 0.5, Grain::Disc { r: 1.0 }).unwrap();
        let report = alpha(&repulsive).unwrap();
        assert_eq!(report.alpha, 5.544897101927137);
        assert!(!report.certified);
    }

    #[test]
    fn loss_reports_both_bounds() {
        let m = LossModel::new(0.2, 1, LengthLaw::Fixed { len: 1.0 }).unwrap();
        let report = alpha(&m).unwrap();
        let named: Vec<f64> = report.bounds.iter().map(|(_, v)| *v).collect();
        assert_eq!(named, vec![0.6000000000000001, 0.4]);
        assert_eq!(report.alpha, 0.4);
        assert!(report.certified);
    }

    #[test]
    fn random_cluster_square_is_not_certified() {
        let m = RandomClusterModel::new(0.5, 2.0, Grid::new(2, 2).unwrap()).unwrap();
        let report = alpha(&m).unwrap();
        assert_eq!(report.alpha, 5.5);
        assert!(!report.certified);
    }

    #[test]
    fn low_temperature_contours_are_certified() {
        let m = ContourModel::new(2.0, 10).unwrap();
        let report = alpha(&m).unwrap();
        assert!(report.certified);
        assert!(report.alpha < 0.02, "alpha {}", report.alpha);
    }

    #[test]
    fn halving_weights_halves_the_bound() {
        let full = ToyModel::hardcore(&[("a", 0.4), ("b", 0.4)], &[("a", "b")]).unwrap();
        let half = ToyModel::hardcore(&[("a", 0.2), ("b", 0.2)], &[("a", "b")]).unwrap();
        assert_eq!(alpha(&half).unwrap().alpha, 0.5 * alpha(&full).unwrap().alpha);
    }

    proptest! {
        #[test]
        fn bound_scales_linearly_in_the_rates(
            w in proptest::collection::vec(0.01f64..2.0, 1..5),
            c in 0.01f64..1.0,
        ) {
            let labels = ["a", "b", "c", "d", "e"];
            let base: Vec<(&str, f64)> =
                w.iter().enumerate().map(|(i, &x)| (labels[i], x)).collect();
            let scaled: Vec<(&str, f64)> =
                w.iter().enumerate().map(|(i, &x)| (labels[i], c * x)).collect();
            let pairs: Vec<(&str, &str)> =
                (1..w.len()).map(|i| (labels[i - 1], labels[i])).collect();
            let m0 = ToyModel::hardcore(&base, &pairs).unwrap();
            let m1 = ToyModel::hardcore(&scaled, &pairs).unwrap();
            let (a0, a1) = (alpha(&m0).unwrap().alpha, alpha(&m1).unwrap().alpha);
            prop_assert!((a1 - c * a0).abs() <= 1e-9 * a0.max(1.0));
        }

        #[test]
        fn bias_bound_is_increasing_and_convex(p in 0.0f64..0.98, d in 0.001f64..0.01) {
            let lo = bias_bound(p).unwrap();
            let hi = bias_bound(p + d).unwrap();
            prop_assert!(hi > lo);
            let mid = bias_bound(p + d / 2.0).unwrap();
            prop_assert!(mid <= (lo + hi) / 2.0 + 1e-12);
        }
    }

    #[test]
    fn bias_bound_values_and_domain() {
        assert_eq!(bias_bound(0.0).unwrap(), 0.0);
        assert_eq!(bias_bound(0.01).unwrap(), 0.010101010101010102);
        assert_eq!(bias_bound(0.5).unwrap(), 1.0);
        assert!(bias_bound(1.0).is_err());
        assert!(bias_bound(-0.1).is_err());
        assert!(bias_bound(f64::NAN).is_err());
    }

    #[test]
    fn ledger_summary_counts_tails() {
        let mut ledger = BiasLedger::new();
        for i in 0..100u64 {
            ledger.push(LedgerEntry {
                index: i,
                draws: if i < 10 { 200 } else { 5 },
                time_depth: 1.0,
                generation_depth: 0,
                max_basis_size: if i < 4 { 8.0 } else { 1.0 },
                cylinders: 1,
                truncated: i == 0,
            });
        }
        let summary = ledger.summarize(100, 6.0);
        assert_eq!(summary.runs, 100);
        assert_eq!(summary.truncated, 1);
        assert_eq!(summary.p_draws_exceed, 0.1);
        assert_eq!(summary.p_size_exceed, 0.04);
        assert!(summary.p_any_exceed >= 0.1);
        let p = summary.p_any_exceed;
        assert_eq!(summary.bias.unwrap(), p / (1.0 - p));
        assert!(summary.depth_tail.is_none());
    }

    #[test]
    fn depth_tail_recovers_a_geometric_slope() {
        let mut ledger = BiasLedger::new();
        let mut s = RandomStream::from_seed(99);
        for i in 0..40_000u64 {
            let mut depth = 0u32;
            while s.next_uniform() < 0.5 {
                depth += 1;
            }
            ledger.push(LedgerEntry {
                index: i,
                draws: 1,
                time_depth: 0.0,
                generation_depth: depth,
                max_basis_size: 1.0,
                cylinders: 1,
                truncated: false,
            });
        }
        let fit = ledger.summarize(1_000, 10.0).depth_tail.expect("enough data");
        assert!(fit.points >= 3);
        let target = 0.5f64.ln();
        assert!(
            (fit.slope - target).abs() < 3.0 * fit.stderr.max(0.01),
            "slope {} vs {}",
            fit.slope,
            target
        );
    }

    #[test]
    fn generation_decay_flags_violations() {
        let sizes = vec![vec![1, 1], vec![1, 0], vec![0, 0], vec![1, 1]];
        let fine = generation_decay(&sizes, 1.0, 0.8, 2);
        assert_eq!(fine.rows.len(), 3);
        assert!(fine.all_ok);
        let many: Vec<Vec<usize>> = std::iter::repeat(sizes).take(100).flatten().collect();
        let tight = generation_decay(&many, 0.1, 0.1, 1);
        assert!(!tight.all_ok);
        assert!(tight.rows.iter().any(|r| !r.ok));
    }
}
