//! Environments emitting per-step event counts alongside extrinsic reward.
//!
//! Three 5x5 grid-worlds (Foraging, Hungry-Thirsty, Fight Monster), a 1-D
//! synthetic chain with two continuous reward streams, and wrappers for reward
//! delay and end-of-episode reward with bucketed game-point events.

mod buckets;
mod fight_monster;
mod foraging;
mod grid;
mod hungry_thirsty;
mod synth;
mod trace;
mod wrappers;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use buckets::{BucketStream, BucketTable};
pub use fight_monster::{FightMonster, FightMonsterConfig};
pub use foraging::{Foraging, ForagingConfig};
pub use grid::{GridAction, Pos, GRID_SIZE};
pub use hungry_thirsty::{HungryThirsty, HungryThirstyConfig};
pub use synth::{SynthChain, SYNTH_ACTIONS};
pub use trace::{parse_trace, record_trace, write_trace, TraceLine};
pub use wrappers::{sparsify_episode, Delayed, PayoutQueue, SparseEpisode, StreamEnv, StreamStep};

/// Per-step event counts `rho(s, a)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct EventVector(pub Vec<u32>);

impl EventVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn one_hot(n: usize, index: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[index] = 1;
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub events: EventVector,
    pub done: bool,
}

/// Episodic environment with event features.
pub trait Environment: Send {
    fn obs_dim(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn num_events(&self) -> usize;
    fn max_episode_len(&self) -> usize;
    /// Starts a new episode; layouts and any in-episode randomness derive from `seed`.
    fn reset(&mut self, seed: u64) -> Vec<f64>;
    fn step(&mut self, action: usize) -> Result<StepResult>;
    /// Shaping potential of the current state, used by potential-based shaping.
    fn potential(&self) -> f64 {
        0.0
    }
    fn event_names(&self) -> Vec<String> {
        (0..self.num_events()).map(|i| format!("event{i}")).collect()
    }
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn obs_dim(&self) -> usize {
        (**self).obs_dim()
    }
    fn num_actions(&self) -> usize {
        (**self).num_actions()
    }
    fn num_events(&self) -> usize {
        (**self).num_events()
    }
    fn max_episode_len(&self) -> usize {
        (**self).max_episode_len()
    }
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        (**self).reset(seed)
    }
    fn step(&mut self, action: usize) -> Result<StepResult> {
        (**self).step(action)
    }
    fn potential(&self) -> f64 {
        (**self).potential()
    }
    fn event_names(&self) -> Vec<String> {
        (**self).event_names()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Domain {
    Foraging,
    HungryThirsty,
    FightMonster,
    /// Synthetic chain, episode-end reward, Hopper-style buckets on the summed reward.
    SynthHopper,
    /// Synthetic chain, episode-end reward, Swimmer-style buckets per stream.
    SynthSwimmer,
}

impl Domain {
    pub const ALL: [Domain; 5] = [
        Domain::Foraging,
        Domain::HungryThirsty,
        Domain::FightMonster,
        Domain::SynthHopper,
        Domain::SynthSwimmer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Foraging => "foraging",
            Domain::HungryThirsty => "hungry-thirsty",
            Domain::FightMonster => "fight-monster",
            Domain::SynthHopper => "synth-hopper",
            Domain::SynthSwimmer => "synth-swimmer",
        }
    }

    pub fn is_grid_world(self) -> bool {
        matches!(
            self,
            Domain::Foraging | Domain::HungryThirsty | Domain::FightMonster
        )
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Domain::ALL
            .into_iter()
            .find(|d| d.as_str() == norm)
            .ok_or_else(|| Error::UnknownDomain(s.to_string()))
    }
}

/// Domain knobs shared by `make_env`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub max_episode_len: usize,
    /// Foraging payout delay in steps.
    pub delay: usize,
    /// Hungry-Thirsty: steps a drink keeps the agent non-thirsty.
    pub thirst_period: usize,
    /// Fight Monster: extra reward added every step (0 = cost only at the fight).
    pub per_step_cost: f64,
}

impl EnvConfig {
    pub fn for_domain(domain: Domain) -> Self {
        Self {
            max_episode_len: if domain.is_grid_world() { 200 } else { 1000 },
            delay: 10,
            thirst_period: 5,
            per_step_cost: 0.0,
        }
    }
}

pub fn make_env(domain: Domain, cfg: &EnvConfig) -> Box<dyn Environment> {
    match domain {
        Domain::Foraging => Box::new(Foraging::new(ForagingConfig {
            max_episode_len: cfg.max_episode_len,
            delay: cfg.delay,
        })),
        Domain::HungryThirsty => Box::new(HungryThirsty::new(HungryThirstyConfig {
            max_episode_len: cfg.max_episode_len,
            thirst_period: cfg.thirst_period,
        })),
        Domain::FightMonster => Box::new(FightMonster::new(FightMonsterConfig {
            max_episode_len: cfg.max_episode_len,
            per_step_cost: cfg.per_step_cost,
        })),
        Domain::SynthHopper => Box::new(SparseEpisode::new(
            SynthChain::new(cfg.max_episode_len),
            BucketTable::hopper(),
        )),
        Domain::SynthSwimmer => Box::new(SparseEpisode::new(
            SynthChain::new(cfg.max_episode_len),
            BucketTable::swimmer(),
        )),
    }
}

/// Resolves a domain name and resets a fresh instance with default settings.
pub fn reset(domain: &str, seed: u64) -> Result<(Vec<f64>, Box<dyn Environment>)> {
    let domain: Domain = domain.parse()?;
    let mut env = make_env(domain, &EnvConfig::for_domain(domain));
    let obs = env.reset(seed);
    Ok((obs, env))
}
