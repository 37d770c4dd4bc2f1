//! Brute-force reference laws and statistical comparison.
//!
//! For countable families with a finite window catalog, the stationary law
//! is enumerable: every multiset of window members up to a multiplicity cap
//! is weighted by its free-process mass times the product of acceptance
//! probabilities along the canonical insertion order.  The resulting exact
//! law backs total-variation and chi-square comparisons against any
//! sampler.

use crate::model::{Configuration, Domination, Model, Window};
use crate::stream::RandomStream;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

const MAX_STATES: f64 = (1u32 << 20) as f64;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("state space too large to enumerate: about {estimate:.3e} states")]
    TooLarge { estimate: f64 },
    #[error("exact enumeration needs a countable family")]
    NotDiscrete,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("observed counts are all zero")]
    DegenerateObservations,
    #[error("cell counts disagree: {0} vs {1}")]
    CellMismatch(usize, usize),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// A finite law over configurations, with its enumeration tail estimate.
#[derive(Debug, Clone)]
pub struct ExactLaw {
    states: Vec<(Configuration, f64)>,
    cumulative: Vec<f64>,
    /// Free-process mass beyond the multiplicity cap, an upper estimate of
    /// the probability the enumeration missed.
    pub truncation_tail: f64,
}

impl ExactLaw {
    pub fn states(&self) -> &[(Configuration, f64)] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn prob_of(&self, config: &Configuration) -> f64 {
        match self
            .states
            .binary_search_by(|(c, _)| c.cmp(config))
        {
            Ok(i) => self.states[i].1,
            Err(_) => 0.0,
        }
    }

    /// Inverse-distribution draw.
    pub fn sample(&self, stream: &mut RandomStream) -> &Configuration {
        let idx = stream.next_index(&self.cumulative);
        &self.states[idx].0
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Enumerate the stationary law of a countable-family model on a window.
pub fn enumerate_exact(
    model: &dyn Model,
    window: &Window,
    multiplicity_cap: u32,
) -> Result<ExactLaw, OracleError> {
    let family = match model.domination() {
        Domination::Discrete(f) => f,
        Domination::Continuous(_) => return Err(OracleError::NotDiscrete),
    };
    let members = family.window_members(window)?;
    let caps: Vec<u32> = members
        .iter()
        .map(|m| {
            if model.incompatible(m, m).expect("catalog member") {
                1
            } else {
                multiplicity_cap
            }
        })
        .collect();
    let estimate = caps.iter().map(|&c| (c + 1) as f64).product::<f64>();
    if estimate > MAX_STATES {
        return Err(OracleError::TooLarge { estimate });
    }
    let mut states: Vec<(Configuration, f64)> = Vec::new();
    let mut counts = vec![0u32; members.len()];
    loop {
        let mut mass = 1.0f64;
        let mut items: Vec<crate::model::Individual> = Vec::new();
        for (i, &c) in counts.iter().enumerate() {
            if c > 0 {
                mass *= family.weight(&members[i]).powi(c as i32) / factorial(c);
                for _ in 0..c {
                    items.push(members[i].clone());
                }
            }
        }
        if mass > 0.0 {
            let config = Configuration::from_items(items);
            let mut psi = 1.0f64;
            let sorted = config.items();
            for i in 0..sorted.len() {
                let prefix = Configuration::from_items(sorted[..i].to_vec());
                psi *= model.acceptance(&sorted[i], &prefix);
                if psi == 0.0 {
                    break;
                }
            }
            if psi > 0.0 {
                states.push((config, mass * psi));
            }
        }
        let mut pos = 0;
        loop {
            if pos == counts.len() {
                break;
            }
            if counts[pos] < caps[pos] {
                counts[pos] += 1;
                break;
            }
            counts[pos] = 0;
            pos += 1;
        }
        if pos == counts.len() {
            break;
        }
    }
    states.sort_by(|a, b| a.0.cmp(&b.0));
    let z: f64 = states.iter().map(|(_, m)| m).sum();
    let mut cumulative = Vec::with_capacity(states.len());
    let mut acc = 0.0;
    for (_, m) in states.iter_mut() {
        *m /= z;
        acc += *m;
        cumulative.push(acc);
    }
    let mut tail = 0.0f64;
    for (i, &cap) in caps.iter().enumerate() {
        if cap > 1 {
            let w = family.weight(&members[i]);
            let mut term = (-w).exp() * w.powi(cap as i32) / factorial(cap);
            for k in (cap + 1)..(cap + 40) {
                term *= w / k as f64;
                tail += term;
            }
        }
    }
    Ok(ExactLaw {
        states,
        cumulative,
        truncation_tail: tail,
    })
}

/// Half the absolute difference between the empirical law of `samples` and
/// the exact law, mass outside the enumerated support included.
pub fn tv_distance(samples: &[Configuration], law: &ExactLaw) -> f64 {
    let n = samples.len() as f64;
    let mut counts: std::collections::BTreeMap<&Configuration, u64> = Default::default();
    for s in samples {
        *counts.entry(s).or_insert(0) += 1;
    }
    let mut total = 0.0f64;
    for (config, p) in &law.states {
        let emp = counts.remove(config).unwrap_or(0) as f64 / n;
        total += (emp - p).abs();
    }
    for (_, c) in counts {
        total += c as f64 / n;
    }
    total / 2.0
}

#[derive(Debug, Clone)]
pub struct ChisqReport {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Cells actually used after pooling.
    pub cells: usize,
}

/// Pool cells whose expected count is below five, smallest kept last.
fn pool_cells(observed: &[u64], expected_counts: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut kept_obs: Vec<f64> = Vec::new();
    let mut kept_exp: Vec<f64> = Vec::new();
    let mut pool_obs = 0.0f64;
    let mut pool_exp = 0.0f64;
    for (&o, &e) in observed.iter().zip(expected_counts) {
        if e < 5.0 {
            pool_obs += o as f64;
            pool_exp += e;
        } else {
            kept_obs.push(o as f64);
            kept_exp.push(e);
        }
    }
    if pool_exp > 0.0 {
        if pool_exp >= 5.0 || kept_exp.is_empty() {
            kept_obs.push(pool_obs);
            kept_exp.push(pool_exp);
        } else {
            let last = kept_exp.len() - 1;
            kept_obs[last] += pool_obs;
            kept_exp[last] += pool_exp;
        }
    }
    (kept_obs, kept_exp)
}

/// Pearson goodness-of-fit against expected cell probabilities.
pub fn chisq_gof(observed: &[u64], expected: &[f64]) -> Result<ChisqReport, OracleError> {
    if observed.len() != expected.len() {
        return Err(OracleError::CellMismatch(observed.len(), expected.len()));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(OracleError::DegenerateObservations);
    }
    let total_p: f64 = expected.iter().sum();
    let expected_counts: Vec<f64> = expected.iter().map(|p| p / total_p * n as f64).collect();
    let (obs, exp) = pool_cells(observed, &expected_counts);
    if obs.len() < 2 {
        return Ok(ChisqReport {
            statistic: 0.0,
            df: 0,
            p_value: 1.0,
            cells: obs.len(),
        });
    }
    let statistic: f64 = obs
        .iter()
        .zip(&exp)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let df = obs.len() - 1;
    let dist = ChiSquared::new(df as f64).expect("positive df");
    Ok(ChisqReport {
        statistic,
        df,
        p_value: 1.0 - dist.cdf(statistic),
        cells: obs.len(),
    })
}

/// Two-sample homogeneity test on matching cell counts.
pub fn two_sample_chisq(a: &[u64], b: &[u64]) -> Result<ChisqReport, OracleError> {
    if a.len() != b.len() {
        return Err(OracleError::CellMismatch(a.len(), b.len()));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(OracleError::DegenerateObservations);
    }
    let total = na + nb;
    let mut obs_a: Vec<u64> = Vec::new();
    let mut exp_a: Vec<f64> = Vec::new();
    let mut obs_b: Vec<u64> = Vec::new();
    let mut exp_b: Vec<f64> = Vec::new();
    let mut pa = (0u64, 0.0f64);
    let mut pb = (0u64, 0.0f64);
    for (&ca, &cb) in a.iter().zip(b) {
        let row = (ca + cb) as f64;
        let (ea, eb) = (na * row / total, nb * row / total);
        if ea < 5.0 || eb < 5.0 {
            pa = (pa.0 + ca, pa.1 + ea);
            pb = (pb.0 + cb, pb.1 + eb);
        } else {
            obs_a.push(ca);
            exp_a.push(ea);
            obs_b.push(cb);
            exp_b.push(eb);
        }
    }
    if pa.1 + pb.1 > 0.0 {
        obs_a.push(pa.0);
        exp_a.push(pa.1);
        obs_b.push(pb.0);
        exp_b.push(pb.1);
    }
    if obs_a.len() < 2 {
        return Ok(ChisqReport {
            statistic: 0.0,
            df: 0,
            p_value: 1.0,
            cells: obs_a.len(),
        });
    }
    let statistic: f64 = obs_a
        .iter()
        .zip(&exp_a)
        .chain(obs_b.iter().zip(&exp_b))
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let df = obs_a.len() - 1;
    let dist = ChiSquared::new(df as f64).expect("positive df");
    Ok(ChisqReport {
        statistic,
        df,
        p_value: 1.0 - dist.cdf(statistic),
        cells: obs_a.len(),
    })
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub n: usize,
    pub tv: f64,
    pub off_support: u64,
    pub chisq: ChisqReport,
    pub level: f64,
    pub pass: bool,
}

/// Compare samples against an exact law: total variation plus a pooled
/// chi-square at the given level.  Refuses underpowered comparisons.
pub fn compare(
    samples: &[Configuration],
    law: &ExactLaw,
    level: f64,
) -> Result<CompareReport, OracleError> {
    const NEEDED: usize = 1000;
    if samples.len() < NEEDED {
        return Err(OracleError::TooFewSamples {
            needed: NEEDED,
            got: samples.len(),
        });
    }
    let tv = tv_distance(samples, law);
    let mut observed = vec![0u64; law.len()];
    let mut off_support = 0u64;
    for s in samples {
        match law.states.binary_search_by(|(c, _)| c.cmp(s)) {
            Ok(i) => observed[i] += 1,
            Err(_) => off_support += 1,
        }
    }
    let expected: Vec<f64> = law.states.iter().map(|(_, p)| *p).collect();
    let chisq = if off_support > 0 {
        ChisqReport {
            statistic: f64::INFINITY,
            df: law.len().saturating_sub(1),
            p_value: 0.0,
            cells: law.len(),
        }
    } else {
        chisq_gof(&observed, &expected)?
    };
    let pass = chisq.p_value >= level && off_support == 0;
    Ok(CompareReport {
        n: samples.len(),
        tv,
        off_support,
        chisq,
        level,
        pass,
    })
}
