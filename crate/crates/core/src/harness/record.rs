use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub step: usize,
    pub mean_return: f64,
    pub std_return: f64,
}

/// Outer-step diagnostics, present only for MBRD runs.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterRow {
    /// Weights after the outer step.
    pub w: Vec<f64>,
    pub cosine: f64,
    pub z_ex_norm: f64,
    pub z_in_norm: f64,
    /// Norm of the regularizer's gradient contribution.
    pub reg_norm: f64,
    pub objective: f64,
    /// False when the step was skipped on a non-finite gradient.
    pub applied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateRow {
    pub update: usize,
    pub step: usize,
    /// Mean extrinsic return of episodes finished in this batch; NaN if none.
    pub train_return: f64,
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub outer: Option<OuterRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: RunConfig,
    pub event_names: Vec<String>,
    pub evals: Vec<EvalPoint>,
    pub updates: Vec<UpdateRow>,
    pub policy_params: Vec<f64>,
    /// Set when the run stopped early on a numerical failure.
    pub aborted: Option<String>,
}

impl RunRecord {
    /// Mean of the last (up to) five evaluation means.
    pub fn final_return(&self) -> f64 {
        let k = self.evals.len().min(5);
        if k == 0 {
            return f64::NAN;
        }
        self.evals[self.evals.len() - k..].iter().map(|e| e.mean_return).sum::<f64>() / k as f64
    }

    pub fn final_weights(&self) -> Option<&[f64]> {
        self.updates.iter().rev().find_map(|u| u.outer.as_ref().map(|o| o.w.as_slice()))
    }

    /// Final weight of the named event channel.
    pub fn final_weight(&self, event: &str) -> Option<f64> {
        let i = self.event_names.iter().position(|n| n == event)?;
        self.final_weights().map(|w| w[i])
    }
}

pub const EVAL_HEADER: &str = "step,mean_return,std_return";

pub fn eval_line(e: &EvalPoint) -> String {
    format!("{},{},{}", e.step, e.mean_return, e.std_return)
}

pub fn updates_header(num_weights: Option<usize>) -> String {
    let mut h = String::from("update,step,train_return,surrogate,value_loss,entropy,approx_kl");
    if let Some(n) = num_weights {
        for i in 0..n {
            h.push_str(&format!(",w_{i}"));
        }
        h.push_str(",cosine,z_ex_norm,z_in_norm,reg_norm,objective,applied");
    }
    h
}

pub fn update_line(u: &UpdateRow) -> String {
    let mut s = format!(
        "{},{},{},{},{},{},{}",
        u.update, u.step, u.train_return, u.surrogate, u.value_loss, u.entropy, u.approx_kl
    );
    if let Some(o) = &u.outer {
        for w in &o.w {
            s.push_str(&format!(",{w}"));
        }
        s.push_str(&format!(
            ",{},{},{},{},{},{}",
            o.cosine,
            o.z_ex_norm,
            o.z_in_norm,
            o.reg_norm,
            o.objective,
            u8::from(o.applied)
        ));
    }
    s
}

/// Streams a run's files into its directory as results arrive.
pub(crate) struct RecordWriter {
    dir: PathBuf,
    eval: BufWriter<File>,
    updates: BufWriter<File>,
}

impl RecordWriter {
    pub fn create(dir: &Path, config: &RunConfig, event_names: &[String], num_weights: Option<usize>) -> Result<Self> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.txt"), config.to_kv())?;
        fs::write(dir.join("events.txt"), event_names.join("\n") + "\n")?;
        let _ = fs::remove_file(dir.join("status.txt"));
        let mut eval = BufWriter::new(File::create(dir.join("eval.csv"))?);
        writeln!(eval, "{EVAL_HEADER}")?;
        let mut updates = BufWriter::new(File::create(dir.join("updates.csv"))?);
        writeln!(updates, "{}", updates_header(num_weights))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            eval,
            updates,
        })
    }

    pub fn eval(&mut self, e: &EvalPoint) -> Result<()> {
        writeln!(self.eval, "{}", eval_line(e))?;
        self.eval.flush()?;
        Ok(())
    }

    pub fn update(&mut self, u: &UpdateRow) -> Result<()> {
        writeln!(self.updates, "{}", update_line(u))?;
        self.updates.flush()?;
        Ok(())
    }

    pub fn finish(mut self, policy: &[f64], aborted: Option<&str>) -> Result<()> {
        self.eval.flush()?;
        self.updates.flush()?;
        write_params(&self.dir.join("policy.txt"), policy)?;
        let status = aborted.map_or_else(|| "ok\n".to_string(), |m| format!("aborted: {m}\n"));
        fs::write(self.dir.join("status.txt"), status)?;
        Ok(())
    }
}

pub fn write_params(path: &Path, params: &[f64]) -> Result<()> {
    let mut s = String::with_capacity(params.len() * 24);
    for p in params {
        s.push_str(&format!("{p:?}\n"));
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn read_params(path: &Path) -> Result<Vec<f64>> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("{}: bad parameter `{l}`", path.display())))
        })
        .collect()
}

/// A numeric CSV file with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Parse("empty CSV".into()))?
            .split(',')
            .map(|h| h.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Parse(format!("row {}: not numeric", i + 1)))?;
            if row.len() != header.len() {
                return Err(Error::Parse(format!(
                    "row {}: {} fields, header has {}",
                    i + 1,
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_eval_csv(path: &Path) -> Result<Vec<EvalPoint>> {
    let t = Table::read(path)?;
    let missing = || Error::Parse(format!("{}: expected header {EVAL_HEADER}", path.display()));
    let steps = t.column("step").ok_or_else(missing)?;
    let means = t.column("mean_return").ok_or_else(missing)?;
    let stds = t.column("std_return").ok_or_else(missing)?;
    Ok(steps
        .into_iter()
        .zip(means)
        .zip(stds)
        .map(|((s, m), d)| EvalPoint {
            step: s as usize,
            mean_return: m,
            std_return: d,
        })
        .collect())
}
