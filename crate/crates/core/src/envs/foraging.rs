use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

use super::grid::{self, GridAction, Pos};
use super::{Environment, EventVector, PayoutQueue, StepResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ForagingConfig {
    pub max_episode_len: usize,
    pub delay: usize,
}

impl Default for ForagingConfig {
    fn default() -> Self {
        Self {
            max_episode_len: 200,
            delay: 10,
        }
    }
}

/// Agent collects an apple (+1) or a poison (-1); the payout arrives `delay`
/// steps after the event. Eaten items respawn on a random free cell.
///
/// Events: `[eats apple, eats poison]`. Actions: up, down, left, right.
#[derive(Debug, Clone)]
pub struct Foraging {
    cfg: ForagingConfig,
    rng: ChaCha8Rng,
    payouts: PayoutQueue,
    pub agent: Pos,
    pub apple: Pos,
    pub poison: Pos,
    pub t: usize,
}

impl Foraging {
    pub const EVENT_APPLE: usize = 0;
    pub const EVENT_POISON: usize = 1;

    pub fn new(cfg: ForagingConfig) -> Self {
        let mut env = Self {
            payouts: PayoutQueue::new(cfg.delay),
            cfg,
            rng: ChaCha8Rng::seed_from_u64(0),
            agent: Pos::new(0, 0),
            apple: Pos::new(0, 0),
            poison: Pos::new(0, 0),
            t: 0,
        };
        env.reset(0);
        env
    }

    fn observe(&self) -> Vec<f64> {
        grid::encode(&[Some(self.agent), Some(self.apple), Some(self.poison)], &[])
    }
}

impl Default for Foraging {
    fn default() -> Self {
        Self::new(ForagingConfig::default())
    }
}

impl Environment for Foraging {
    fn obs_dim(&self) -> usize {
        grid::obs_len(3, 0)
    }

    fn num_actions(&self) -> usize {
        4
    }

    fn num_events(&self) -> usize {
        2
    }

    fn max_episode_len(&self) -> usize {
        self.cfg.max_episode_len
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let cells = grid::distinct_cells(&mut self.rng, 3);
        self.agent = cells[0];
        self.apple = cells[1];
        self.poison = cells[2];
        self.t = 0;
        self.payouts.clear();
        self.observe()
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        let action = GridAction::decode(action, 4)?;
        self.agent = self.agent.moved(action);
        self.t += 1;

        let mut events = EventVector::zeros(2);
        let mut earned = 0.0;
        if self.agent == self.apple {
            events.0[Self::EVENT_APPLE] = 1;
            earned = 1.0;
            self.apple = grid::free_cell(&mut self.rng, &[self.agent, self.poison]);
        } else if self.agent == self.poison {
            events.0[Self::EVENT_POISON] = 1;
            earned = -1.0;
            self.poison = grid::free_cell(&mut self.rng, &[self.agent, self.apple]);
        }

        let done = self.t >= self.cfg.max_episode_len;
        Ok(StepResult {
            obs: self.observe(),
            reward: self.payouts.push(earned, done),
            events,
            done,
        })
    }

    fn potential(&self) -> f64 {
        grid::distance_potential(self.agent, &[self.apple])
    }

    fn event_names(&self) -> Vec<String> {
        vec!["eat_apple".into(), "eat_poison".into()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_towards(from: Pos, to: Pos) -> usize {
        if to.y < from.y {
            0
        } else if to.y > from.y {
            1
        } else if to.x < from.x {
            2
        } else {
            3
        }
    }

    #[test]
    fn layout_is_distinct_and_seeded() {
        let mut env = Foraging::default();
        for seed in 0..1000 {
            env.reset(seed);
            assert!(env.agent != env.apple && env.agent != env.poison && env.apple != env.poison);
        }
        let mut a = Foraging::default();
        let mut b = Foraging::default();
        assert_eq!(a.reset(42), b.reset(42));
    }

    #[test]
    fn wall_move_is_clipped_without_reward() {
        let mut env = Foraging::default();
        env.reset(1);
        env.agent = Pos::new(0, 0);
        env.apple = Pos::new(4, 4);
        env.poison = Pos::new(3, 4);
        let r = env.step(0).unwrap();
        assert_eq!(env.agent, Pos::new(0, 0));
        assert!(r.events.is_zero());
        assert_eq!(r.reward, 0.0);
    }

    #[test]
    fn apple_payout_arrives_ten_steps_later() {
        let mut env = Foraging::default();
        env.reset(5);
        env.agent = Pos::new(2, 2);
        env.apple = Pos::new(3, 2);
        env.poison = Pos::new(0, 0);
        let r = env.step(3).unwrap();
        assert_eq!(r.events, EventVector(vec![1, 0]));
        assert_eq!(r.reward, 0.0);
        assert_ne!(env.apple, env.agent);
        // wander in a corner-free loop avoiding items is hard to guarantee, so
        // park the items out of reach instead
        env.apple = Pos::new(0, 4);
        env.poison = Pos::new(0, 3);
        let mut got = Vec::new();
        for k in 1..=10 {
            let a = if k % 2 == 0 { 3 } else { 2 };
            got.push(env.step(a).unwrap().reward);
        }
        assert_eq!(got[..9], [0.0; 9]);
        assert_eq!(got[9], 1.0);
    }

    #[test]
    fn poison_emits_negative_payout() {
        let mut env = Foraging::new(ForagingConfig {
            max_episode_len: 200,
            delay: 0,
        });
        env.reset(9);
        env.agent = Pos::new(1, 1);
        env.poison = Pos::new(1, 0);
        env.apple = Pos::new(4, 4);
        let r = env.step(step_towards(env.agent, env.poison)).unwrap();
        assert_eq!(r.events, EventVector(vec![0, 1]));
        assert_eq!(r.reward, -1.0);
    }
}
