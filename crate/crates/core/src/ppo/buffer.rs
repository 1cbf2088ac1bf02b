use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::envs::{Environment, EventVector};
use crate::error::Result;
use crate::funcapprox::{PolicyNet, Trace};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: usize,
    /// Extrinsic reward as delivered by the environment.
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub events: EventVector,
    pub done: bool,
    /// Log-probability of `action` under the behavior policy.
    pub log_prob: f64,
    pub potential: f64,
    pub next_potential: f64,
}

/// On-policy batch of consecutive transitions. Episode boundaries are the
/// `done` flags; a trailing transition without `done` is a cut-off episode.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub transitions: Vec<Transition>,
    /// Undiscounted extrinsic returns of the episodes that finished during collection.
    pub finished_returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
        self.finished_returns.clear();
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.transitions.iter().map(|t| t.reward).collect()
    }

    pub fn dones(&self) -> Vec<bool> {
        self.transitions.iter().map(|t| t.done).collect()
    }

    pub fn num_events(&self) -> usize {
        self.transitions.first().map_or(0, |t| t.events.len())
    }
}

pub fn sample_categorical<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    WeightedIndex::new(probs)
        .map(|d| d.sample(rng))
        .unwrap_or_else(|_| rng.gen_range(0..probs.len()))
}

/// Steps an environment under a stochastic policy, carrying the current
/// episode across successive collections.
pub struct Collector<E> {
    env: E,
    rng: ChaCha8Rng,
    obs: Vec<f64>,
    episode_return: f64,
    trace: Trace,
    probs: Vec<f64>,
}

impl<E: Environment> Collector<E> {
    pub fn new(mut env: E, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let obs = env.reset(rng.gen());
        Self {
            env,
            rng,
            obs,
            episode_return: 0.0,
            trace: Trace::default(),
            probs: Vec::new(),
        }
    }

    pub fn env(&self) -> &E {
        &self.env
    }

    /// Appends exactly `steps` transitions to `buffer`.
    pub fn collect_into(
        &mut self,
        policy: &PolicyNet,
        params: &[f64],
        steps: usize,
        buffer: &mut RolloutBuffer,
    ) -> Result<()> {
        policy.net().check_params(params)?;
        policy.net().check_input(&self.obs)?;
        buffer.transitions.reserve(steps);
        for _ in 0..steps {
            policy.probs_traced(params, &self.obs, &mut self.trace, &mut self.probs);
            let action = sample_categorical(&self.probs, &mut self.rng);
            let log_prob = self.probs[action].ln();
            let potential = self.env.potential();
            let step = self.env.step(action)?;
            self.episode_return += step.reward;
            let next_potential = self.env.potential();
            let next_obs = if step.done {
                self.env.reset(self.rng.gen())
            } else {
                step.obs.clone()
            };
            buffer.transitions.push(Transition {
                obs: std::mem::replace(&mut self.obs, next_obs),
                action,
                reward: step.reward,
                next_obs: step.obs,
                events: step.events,
                done: step.done,
                log_prob,
                potential,
                next_potential,
            });
            if step.done {
                buffer.finished_returns.push(self.episode_return);
                self.episode_return = 0.0;
            }
        }
        Ok(())
    }

    pub fn collect(&mut self, policy: &PolicyNet, params: &[f64], steps: usize) -> Result<RolloutBuffer> {
        let mut buffer = RolloutBuffer::default();
        self.collect_into(policy, params, steps, &mut buffer)?;
        Ok(buffer)
    }
}

/// Collects `steps` transitions from a fresh episode.
pub fn collect_rollout<E: Environment>(
    env: E,
    policy: &PolicyNet,
    params: &[f64],
    steps: usize,
    seed: u64,
) -> Result<RolloutBuffer> {
    if steps == 0 {
        return Err(crate::Error::InvalidConfig("rollout needs at least one step".into()));
    }
    Collector::new(env, seed).collect(policy, params, steps)
}
