//! Line-delimited episode traces for golden regression tests.
//!
//! One transition per line, tab separated:
//! `step  obs_hash  action  reward  events  done`
//! where `obs_hash` is the 64-bit FNV-1a hash of the next observation's f64
//! bit patterns (hex), `events` is a comma-separated count list, `done` is 0/1,
//! and `reward` is printed in shortest round-trip form.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::{Environment, EventVector};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceLine {
    pub step: usize,
    pub obs_hash: u64,
    pub action: usize,
    pub reward: f64,
    pub events: EventVector,
    pub done: bool,
}

pub fn obs_hash(obs: &[f64]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    obs.iter()
        .flat_map(|v| v.to_bits().to_le_bytes())
        .fold(OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let events: Vec<String> = self.events.counts().iter().map(u32::to_string).collect();
        write!(
            f,
            "{}\t{:016x}\t{}\t{:?}\t{}\t{}",
            self.step,
            self.obs_hash,
            self.action,
            self.reward,
            events.join(","),
            u8::from(self.done)
        )
    }
}

impl FromStr for TraceLine {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed trace line `{line}`"));
        let fields: Vec<&str> = line.split('\t').collect();
        let [step, hash, action, reward, events, done] = fields[..] else {
            return Err(bad());
        };
        let events = if events.is_empty() {
            Vec::new()
        } else {
            events
                .split(',')
                .map(|c| c.parse::<u32>().map_err(|_| bad()))
                .collect::<Result<_>>()?
        };
        Ok(Self {
            step: step.parse().map_err(|_| bad())?,
            obs_hash: u64::from_str_radix(hash, 16).map_err(|_| bad())?,
            action: action.parse().map_err(|_| bad())?,
            reward: reward.parse().map_err(|_| bad())?,
            events: EventVector(events),
            done: match done {
                "0" => false,
                "1" => true,
                _ => return Err(bad()),
            },
        })
    }
}

/// Runs `actions` from `reset(seed)` until the list or the episode ends.
pub fn record_trace<E: Environment + ?Sized>(env: &mut E, seed: u64, actions: &[usize]) -> Result<Vec<TraceLine>> {
    env.reset(seed);
    let mut lines = Vec::with_capacity(actions.len());
    for (step, &action) in actions.iter().enumerate() {
        let r = env.step(action)?;
        lines.push(TraceLine {
            step,
            obs_hash: obs_hash(&r.obs),
            action,
            reward: r.reward,
            events: r.events,
            done: r.done,
        });
        if r.done {
            break;
        }
    }
    Ok(lines)
}

pub fn write_trace(lines: &[TraceLine]) -> String {
    lines.iter().map(|l| format!("{l}\n")).collect()
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceLine>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::parse)
        .collect()
}
