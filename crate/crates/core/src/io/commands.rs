//! The five commands behind the binary: check, sample, oracle, compare,
//! plot.  Each returns the process exit code: 0 success or certified, 1 a
//! failed verdict, with usage and runtime failures mapped by the caller.

use super::config::{ConfigError, RunSpec};
use super::records::{
    ledger_path, read_samples, write_ledger, write_samples, SampleHeader, SampleRecord,
};
use super::svg::render_sample;
use crate::clan::ClanBuilder;
use crate::cleaner::{clean, clean_biased, project, CleanError};
use crate::diagnostics::{alpha, BiasLedger, DiagnosticsError, LedgerEntry};
use crate::forward::{stationary_window, ForwardError};
use crate::model::{Configuration, ModelError};
use crate::oracle::{compare, enumerate_exact, two_sample_chisq, OracleError};
use crate::stream::RandomStream;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Forward(#[from] ForwardError),
    #[error(transparent)]
    Clean(#[from] CleanError),
    #[error(transparent)]
    Record(#[from] super::records::RecordError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Usage(_) | CommandError::Config(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SampleOpts {
    pub seed: Option<u64>,
    pub n: Option<u64>,
    pub out: Option<PathBuf>,
    pub force: bool,
    pub serial: bool,
    pub margin: Option<f64>,
}

fn resolved_out(spec: &RunSpec, opts: &SampleOpts, fallback: &str) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| spec.run.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(fallback))
}

pub fn cmd_check(spec: &RunSpec, out: &mut dyn Write) -> Result<i32, CommandError> {
    let model = spec.build_model()?;
    model.check_window(&spec.window)?;
    let report = alpha(model.as_ref())?;
    writeln!(out, "model: {}", model.name())?;
    writeln!(out, "window: {}", spec.window.describe())?;
    for (name, value) in &report.bounds {
        writeln!(out, "bound {name} = {value}")?;
    }
    writeln!(out, "alpha = {}", report.alpha)?;
    if report.certified {
        writeln!(out, "verdict: certified subcritical")?;
        Ok(0)
    } else {
        writeln!(
            out,
            "verdict: not certified (no bound below one; finiteness not guaranteed by this criterion)"
        )?;
        Ok(1)
    }
}

pub fn cmd_sample(
    spec: &RunSpec,
    opts: &SampleOpts,
    out: &mut dyn Write,
) -> Result<i32, CommandError> {
    let model = spec.build_model()?;
    model.check_window(&spec.window)?;
    let report = alpha(model.as_ref())?;
    if !report.certified && !opts.force {
        writeln!(
            out,
            "refusing to sample: branching bound {} is not below one (use --force to override)",
            report.alpha
        )?;
        return Ok(1);
    }
    let seed = opts.seed.unwrap_or(spec.run.seed);
    let n = opts.n.unwrap_or(spec.run.n);
    let path = resolved_out(spec, opts, "samples.jsonl");
    let builder = ClanBuilder::new(model.as_ref(), spec.window.clone())?.limits(spec.clan_limits());
    let root = RandomStream::from_seed(seed);
    let worker = |i: u64| -> (SampleRecord, LedgerEntry) {
        let per = root.derive(i as u32);
        let mut build_stream = per.derive(0);
        let mut clean_stream = per.derive(1);
        let clan = builder.build(&mut build_stream);
        let entry = LedgerEntry::from_clan(i, &clan, model.as_ref());
        let outcome = if clan.truncated {
            clean_biased(&clan, model.as_ref(), &mut clean_stream)
        } else {
            clean(&clan, model.as_ref(), &mut clean_stream).expect("complete clan")
        };
        let config = project(&clan.cylinders, &outcome, model.as_ref(), &spec.window);
        let record = SampleRecord {
            index: i,
            model: spec.model_kind().to_string(),
            window: spec.window.describe(),
            individuals: config.items().to_vec(),
            clan_depth: entry.generation_depth,
            clan_size: entry.cylinders,
            truncated: clan.truncated,
        };
        (record, entry)
    };
    let results: Vec<(SampleRecord, LedgerEntry)> = if opts.serial {
        (0..n).map(worker).collect()
    } else {
        (0..n).into_par_iter().map(worker).collect()
    };
    let mut ledger = BiasLedger::new();
    let mut records = Vec::with_capacity(results.len());
    for (record, entry) in results {
        ledger.push(entry);
        records.push(record);
    }
    let header = SampleHeader {
        model: spec.model_kind().to_string(),
        window: spec.window.describe(),
        seed,
        n,
    };
    write_samples(&path, &header, &records)?;
    let summary = ledger.summarize(spec.limits.max_depth, spec.limits.size_cutoff as f64);
    write_ledger(&ledger_path(&path), &ledger.entries, &summary)?;
    let truncated = records.iter().filter(|r| r.truncated).count();
    writeln!(out, "wrote {} samples to {}", records.len(), path.display())?;
    writeln!(
        out,
        "truncated {truncated} of {n}; abort fraction {}; bias bound {}",
        summary.p_any_exceed,
        summary
            .bias
            .map(|b| b.to_string())
            .unwrap_or_else(|| "unavailable".to_string())
    )?;
    Ok(0)
}

pub fn cmd_oracle(
    spec: &RunSpec,
    opts: &SampleOpts,
    out: &mut dyn Write,
) -> Result<i32, CommandError> {
    let model = spec.build_model()?;
    let margin = opts.margin.unwrap_or(spec.run.oracle_margin);
    let search = spec.dilated_window(margin);
    model.check_window(&search)?;
    let seed = opts.seed.unwrap_or(spec.run.seed);
    let n = opts.n.unwrap_or(spec.run.n);
    let path = resolved_out(spec, opts, "oracle.jsonl");
    let root = RandomStream::from_seed(seed);
    let worker = |i: u64| -> Result<SampleRecord, ForwardError> {
        let per = root.derive(i as u32);
        let mut stream = per.derive(2);
        let outcome = stationary_window(
            model.as_ref(),
            &search,
            &spec.window,
            spec.limits.max_size,
            &mut stream,
        );
        let record = match outcome {
            Ok(sample) => SampleRecord {
                index: i,
                model: spec.model_kind().to_string(),
                window: spec.window.describe(),
                individuals: sample.config.items().to_vec(),
                clan_depth: sample.events.min(u32::MAX as usize) as u32,
                clan_size: sample.events,
                truncated: false,
            },
            Err(ForwardError::SearchTruncated { events, .. }) => SampleRecord {
                index: i,
                model: spec.model_kind().to_string(),
                window: spec.window.describe(),
                individuals: Vec::new(),
                clan_depth: events.min(u32::MAX as usize) as u32,
                clan_size: events,
                truncated: true,
            },
            Err(e) => return Err(e),
        };
        Ok(record)
    };
    let results: Vec<Result<SampleRecord, ForwardError>> = if opts.serial {
        (0..n).map(worker).collect()
    } else {
        (0..n).into_par_iter().map(worker).collect()
    };
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        records.push(r?);
    }
    let header = SampleHeader {
        model: spec.model_kind().to_string(),
        window: spec.window.describe(),
        seed,
        n,
    };
    write_samples(&path, &header, &records)?;
    let truncated = records.iter().filter(|r| r.truncated).count();
    writeln!(
        out,
        "wrote {} stationary draws to {} (search window {}, truncated {})",
        records.len(),
        path.display(),
        search.describe(),
        truncated
    )?;
    Ok(0)
}

pub fn cmd_compare(
    spec: &RunSpec,
    sample_path: &Path,
    baseline: Option<&Path>,
    level: f64,
    out: &mut dyn Write,
) -> Result<i32, CommandError> {
    if !(0.0..1.0).contains(&level) || level <= 0.0 {
        return Err(CommandError::Usage(format!(
            "level must be in (0, 1), got {level}"
        )));
    }
    let (_, records) = read_samples(sample_path)?;
    let truncated = records.iter().filter(|r| r.truncated).count();
    if truncated > 0 {
        writeln!(
            out,
            "note: {truncated} truncated records included; their law is biased"
        )?;
    }
    let configs: Vec<Configuration> = records.iter().map(|r| r.configuration()).collect();
    match baseline {
        None => {
            let model = spec.build_model()?;
            let law = enumerate_exact(model.as_ref(), &spec.window, spec.limits.multiplicity_cap)?;
            let report = compare(&configs, &law, level)?;
            writeln!(
                out,
                "n = {}; support {} states (tail {:.3e}); off-support {}",
                report.n,
                law.len(),
                law.truncation_tail,
                report.off_support
            )?;
            writeln!(out, "tv = {}", report.tv)?;
            writeln!(
                out,
                "chi-square: stat = {}, df = {}, p = {}",
                report.chisq.statistic, report.chisq.df, report.chisq.p_value
            )?;
            writeln!(out, "verdict: {}", if report.pass { "pass" } else { "fail" })?;
            Ok(if report.pass { 0 } else { 1 })
        }
        Some(base_path) => {
            let (_, base_records) = read_samples(base_path)?;
            let base_configs: Vec<Configuration> =
                base_records.iter().map(|r| r.configuration()).collect();
            let mut labels: BTreeMap<&Configuration, (u64, u64)> = BTreeMap::new();
            for c in &configs {
                labels.entry(c).or_default().0 += 1;
            }
            for c in &base_configs {
                labels.entry(c).or_default().1 += 1;
            }
            let (a, b): (Vec<u64>, Vec<u64>) = labels.values().copied().unzip();
            let report = two_sample_chisq(&a, &b)?;
            let (na, nb) = (configs.len() as f64, base_configs.len() as f64);
            let tv: f64 = labels
                .values()
                .map(|&(ca, cb)| (ca as f64 / na - cb as f64 / nb).abs())
                .sum::<f64>()
                / 2.0;
            writeln!(out, "n = {} vs {}; {} distinct states", na, nb, labels.len())?;
            writeln!(out, "tv = {tv}")?;
            writeln!(
                out,
                "chi-square: stat = {}, df = {}, p = {}",
                report.statistic, report.df, report.p_value
            )?;
            let pass = report.p_value >= level;
            writeln!(out, "verdict: {}", if pass { "pass" } else { "fail" })?;
            Ok(if pass { 0 } else { 1 })
        }
    }
}

pub fn cmd_plot(
    spec: &RunSpec,
    sample_path: &Path,
    index: usize,
    out_path: &Path,
    out: &mut dyn Write,
) -> Result<i32, CommandError> {
    let (_, records) = read_samples(sample_path)?;
    let record = records.get(index).ok_or_else(|| {
        CommandError::Usage(format!(
            "index {index} out of range: file holds {} records",
            records.len()
        ))
    })?;
    let svg = render_sample(spec, &record.individuals)?;
    std::fs::write(out_path, svg)?;
    writeln!(
        out,
        "wrote plot of record {index} ({} individuals) to {}",
        record.individuals.len(),
        out_path.display()
    )?;
    Ok(0)
}
