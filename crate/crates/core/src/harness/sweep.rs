use std::collections::BTreeMap;
use std::fmt::Write as _;

use log::warn;
use rayon::prelude::*;

use crate::envs::Domain;
use crate::error::{Error, Result};

use super::config::{Method, RunConfig};
use super::record::{EvalPoint, RunRecord};
use super::run::{mean_std, run};

/// Runs every configuration, at most `workers` at a time. Results keep the
/// input order.
pub fn run_pool(configs: &[RunConfig], workers: usize) -> Result<Vec<Result<RunRecord>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(|| configs.par_iter().map(run).collect()))
}

/// Copies of `base`, one per seed.
pub fn seeded(base: &RunConfig, seeds: &[u64]) -> Vec<RunConfig> {
    seeds
        .iter()
        .map(|&seed| RunConfig { seed, ..base.clone() })
        .collect()
}

fn collect_ok(results: Vec<Result<RunRecord>>) -> Result<Vec<RunRecord>> {
    results.into_iter().collect()
}

/// Final-performance summary for one sweep setting.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalRow {
    pub method: Method,
    pub setting: String,
    pub mean: f64,
    pub std: f64,
    pub seeds: usize,
}

pub fn final_table(records: &[RunRecord], setting: impl Fn(&RunConfig) -> String) -> Vec<FinalRow> {
    let mut groups: BTreeMap<(Method, String), Vec<(u64, f64)>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.config.method, setting(&r.config)))
            .or_default()
            .push((r.config.seed, r.final_return()));
    }
    groups
        .into_iter()
        .map(|((method, setting), mut xs)| {
            xs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let vals: Vec<f64> = xs.iter().map(|x| x.1).collect();
            let (mean, std) = mean_std(&vals);
            FinalRow {
                method,
                setting,
                mean,
                std,
                seeds: vals.len(),
            }
        })
        .collect()
}

pub fn final_table_csv(key: &str, rows: &[FinalRow]) -> String {
    let mut s = format!("method,{key},mean_final_return,std_final_return,seeds\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.method, r.setting, r.mean, r.std, r.seeds);
    }
    s
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub records: Vec<RunRecord>,
    pub table: Vec<FinalRow>,
}

/// One run per `beta` per seed. Each setting writes below `<out>/beta-<value>/`.
pub fn sweep_beta(base: &RunConfig, betas: &[f64], seeds: &[u64], workers: usize) -> Result<Sweep> {
    if betas.is_empty() {
        return Err(Error::InvalidConfig("beta sweep needs at least one value".into()));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one seed".into()));
    }
    let mut configs = Vec::new();
    for &beta in betas {
        let mut c = base.clone();
        c.beta = beta;
        c.out_dir = base.out_dir.as_ref().map(|o| o.join(format!("beta-{beta}")));
        configs.extend(seeded(&c, seeds));
    }
    let records = collect_ok(run_pool(&configs, workers)?)?;
    let table = final_table(&records, |c| c.beta.to_string());
    Ok(Sweep { records, table })
}

/// One run per episode length per method per seed on delayed Foraging.
pub fn sweep_episode_length(
    base: &RunConfig,
    lengths: &[usize],
    methods: &[Method],
    seeds: &[u64],
    workers: usize,
) -> Result<Sweep> {
    if lengths.is_empty() || methods.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidConfig(
            "episode-length sweep needs lengths, methods and seeds".into(),
        ));
    }
    let mut configs = Vec::new();
    for &len in lengths {
        for &method in methods {
            let mut c = RunConfig {
                domain: Domain::Foraging,
                method,
                max_episode_len: len,
                delay: 10,
                ..base.clone()
            };
            c.out_dir = base.out_dir.as_ref().map(|o| o.join(format!("eplen-{len}")));
            configs.extend(seeded(&c, seeds));
        }
    }
    let records = collect_ok(run_pool(&configs, workers)?)?;
    let table = final_table(&records, |c| c.max_episode_len.to_string());
    Ok(Sweep { records, table })
}

/// An evaluation curve tagged with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub method: String,
    pub domain: String,
    pub seed: u64,
    pub points: Vec<EvalPoint>,
}

impl From<&RunRecord> for Curve {
    fn from(r: &RunRecord) -> Self {
        Self {
            method: r.config.method.to_string(),
            domain: r.config.domain.to_string(),
            seed: r.config.seed,
            points: r.evals.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub domain: String,
    pub step: usize,
    pub mean: f64,
    pub std: f64,
    pub seeds: usize,
}

/// Mean and standard deviation across seeds per (method, domain, step).
/// Curves of one group are cut to their shortest length.
pub fn aggregate(curves: &[Curve]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(&str, &str), Vec<&Curve>> = BTreeMap::new();
    for c in curves {
        groups.entry((&c.method, &c.domain)).or_default().push(c);
    }
    let mut out = Vec::new();
    for ((method, domain), mut group) in groups {
        group.sort_by(|a, b| {
            a.seed.cmp(&b.seed).then_with(|| {
                let key = |c: &Curve| c.points.iter().map(|p| p.mean_return.to_bits()).collect::<Vec<_>>();
                key(a).cmp(&key(b))
            })
        });
        let horizon = group.iter().map(|c| c.points.len()).min().unwrap_or(0);
        if group.iter().any(|c| c.points.len() != horizon) {
            warn!("{domain}/{method}: curves of unequal length, truncating to {horizon} points");
        }
        for i in 0..horizon {
            let vals: Vec<f64> = group.iter().map(|c| c.points[i].mean_return).collect();
            let (mean, std) = mean_std(&vals);
            out.push(SummaryRow {
                method: method.to_string(),
                domain: domain.to_string(),
                step: group[0].points[i].step,
                mean,
                std,
                seeds: vals.len(),
            });
        }
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from("method,domain,step,mean,std,seeds\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.method, r.domain, r.step, r.mean, r.std, r.seeds);
    }
    s
}
