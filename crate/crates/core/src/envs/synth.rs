use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{StreamEnv, StreamStep};

pub const SYNTH_ACTIONS: usize = 5;
const LENGTH: f64 = 10.0;

/// One-dimensional chain with a discretized thrust action and two reward streams.
///
/// * position `p` in `[0, 10]`, reset to `U[0, 2)`
/// * action `a` in `0..5` applies thrust `u = 0.5 * (a - 2)`
/// * `p' = clamp(p + u, 0, 10)`
/// * progress stream `2 (p' - p) + 0.01 p'`
/// * control stream `-1.5 u^2`
///
/// The observation is `[p / 10]`. Episodes only end by truncation.
#[derive(Debug, Clone)]
pub struct SynthChain {
    max_episode_len: usize,
    pub position: f64,
    pub t: usize,
}

impl SynthChain {
    pub fn new(max_episode_len: usize) -> Self {
        Self {
            max_episode_len,
            position: 0.0,
            t: 0,
        }
    }

    pub fn thrust(action: usize) -> f64 {
        0.5 * (action as f64 - 2.0)
    }
}

impl StreamEnv for SynthChain {
    fn obs_dim(&self) -> usize {
        1
    }

    fn num_actions(&self) -> usize {
        SYNTH_ACTIONS
    }

    fn num_streams(&self) -> usize {
        2
    }

    fn max_episode_len(&self) -> usize {
        self.max_episode_len
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.position = rng.gen_range(0.0..2.0);
        self.t = 0;
        vec![self.position / LENGTH]
    }

    fn step(&mut self, action: usize) -> Result<StreamStep> {
        if action >= SYNTH_ACTIONS {
            return Err(Error::InvalidAction {
                action,
                num_actions: SYNTH_ACTIONS,
            });
        }
        let u = Self::thrust(action);
        let next = (self.position + u).clamp(0.0, LENGTH);
        let progress = 2.0 * (next - self.position) + 0.01 * next;
        let control = -1.5 * u * u;
        self.position = next;
        self.t += 1;
        Ok(StreamStep {
            obs: vec![next / LENGTH],
            streams: vec![progress, control],
            done: self.t >= self.max_episode_len,
        })
    }
}
