use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

use super::grid::{self, GridAction, Pos};
use super::{Environment, EventVector, StepResult};

#[derive(Debug, Clone, PartialEq)]
pub struct FightMonsterConfig {
    pub max_episode_len: usize,
    /// Reward added on every step; zero charges the draw penalty only at the fight.
    pub per_step_cost: f64,
}

impl Default for FightMonsterConfig {
    fn default() -> Self {
        Self {
            max_episode_len: 200,
            per_step_cost: 0.0,
        }
    }
}

/// Picking up the weapon grants a buff, touching the poison a debuff (each
/// item is consumed). Walking into the monster ends the episode: +1 with the
/// buff, -1 with only the debuff, -0.1 otherwise.
///
/// Events: `[gets buff, gets debuff, wins, loses, draws]`. Actions: up, down, left, right.
#[derive(Debug, Clone)]
pub struct FightMonster {
    cfg: FightMonsterConfig,
    pub agent: Pos,
    pub weapon: Option<Pos>,
    pub poison: Option<Pos>,
    pub monster: Pos,
    pub buff: bool,
    pub debuff: bool,
    pub t: usize,
}

impl FightMonster {
    pub const EVENT_BUFF: usize = 0;
    pub const EVENT_DEBUFF: usize = 1;
    pub const EVENT_WIN: usize = 2;
    pub const EVENT_LOSE: usize = 3;
    pub const EVENT_DRAW: usize = 4;

    pub fn new(cfg: FightMonsterConfig) -> Self {
        let mut env = Self {
            cfg,
            agent: Pos::new(0, 0),
            weapon: None,
            poison: None,
            monster: Pos::new(0, 0),
            buff: false,
            debuff: false,
            t: 0,
        };
        env.reset(0);
        env
    }

    fn observe(&self) -> Vec<f64> {
        grid::encode(
            &[Some(self.agent), self.weapon, self.poison, Some(self.monster)],
            &[f64::from(u8::from(self.buff)), f64::from(u8::from(self.debuff))],
        )
    }
}

impl Default for FightMonster {
    fn default() -> Self {
        Self::new(FightMonsterConfig::default())
    }
}

impl Environment for FightMonster {
    fn obs_dim(&self) -> usize {
        grid::obs_len(4, 2)
    }

    fn num_actions(&self) -> usize {
        4
    }

    fn num_events(&self) -> usize {
        5
    }

    fn max_episode_len(&self) -> usize {
        self.cfg.max_episode_len
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cells = grid::distinct_cells(&mut rng, 4);
        self.agent = cells[0];
        self.weapon = Some(cells[1]);
        self.poison = Some(cells[2]);
        self.monster = cells[3];
        self.buff = false;
        self.debuff = false;
        self.t = 0;
        self.observe()
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        let action = GridAction::decode(action, 4)?;
        self.agent = self.agent.moved(action);
        self.t += 1;

        let mut events = EventVector::zeros(5);
        let mut reward = self.cfg.per_step_cost;
        let mut fought = false;
        if Some(self.agent) == self.weapon {
            self.weapon = None;
            self.buff = true;
            events.0[Self::EVENT_BUFF] = 1;
        } else if Some(self.agent) == self.poison {
            self.poison = None;
            self.debuff = true;
            events.0[Self::EVENT_DEBUFF] = 1;
        } else if self.agent == self.monster {
            fought = true;
            let (r, e) = if self.buff {
                (1.0, Self::EVENT_WIN)
            } else if self.debuff {
                (-1.0, Self::EVENT_LOSE)
            } else {
                (-0.1, Self::EVENT_DRAW)
            };
            reward += r;
            events.0[e] = 1;
        }

        Ok(StepResult {
            obs: self.observe(),
            reward,
            events,
            done: fought || self.t >= self.cfg.max_episode_len,
        })
    }

    fn potential(&self) -> f64 {
        match self.weapon {
            Some(w) if !self.buff => grid::distance_potential(self.agent, &[w]),
            _ => grid::distance_potential(self.agent, &[self.monster]),
        }
    }

    fn event_names(&self) -> Vec<String> {
        ["buff", "debuff", "win", "lose", "draw"]
            .map(String::from)
            .to_vec()
    }
}
