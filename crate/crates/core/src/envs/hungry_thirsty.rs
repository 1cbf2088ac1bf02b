use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

use super::grid::{self, GridAction, Pos};
use super::{Environment, EventVector, StepResult};

#[derive(Debug, Clone, PartialEq)]
pub struct HungryThirstyConfig {
    pub max_episode_len: usize,
    pub thirst_period: usize,
}

impl Default for HungryThirstyConfig {
    fn default() -> Self {
        Self {
            max_episode_len: 200,
            thirst_period: 5,
        }
    }
}

/// Eating at the food cell pays 1 unless the agent is thirsty, in which case
/// it fails silently. Drinking at the water cell (no reward) keeps the agent
/// non-thirsty for `thirst_period` steps.
///
/// Events: `[eat, drink]`. Actions: up, down, left, right, eat, drink.
#[derive(Debug, Clone)]
pub struct HungryThirsty {
    cfg: HungryThirstyConfig,
    pub agent: Pos,
    pub food: Pos,
    pub water: Pos,
    pub hungry: bool,
    pub thirsty: bool,
    pub thirst_timer: usize,
    pub t: usize,
}

impl HungryThirsty {
    pub const EVENT_EAT: usize = 0;
    pub const EVENT_DRINK: usize = 1;

    pub fn new(cfg: HungryThirstyConfig) -> Self {
        let mut env = Self {
            thirst_timer: cfg.thirst_period,
            cfg,
            agent: Pos::new(0, 0),
            food: Pos::new(0, 0),
            water: Pos::new(0, 0),
            hungry: false,
            thirsty: false,
            t: 0,
        };
        env.reset(0);
        env
    }

    fn observe(&self) -> Vec<f64> {
        let timer = self.thirst_timer as f64 / self.cfg.thirst_period.max(1) as f64;
        grid::encode(
            &[Some(self.agent), Some(self.food), Some(self.water)],
            &[
                f64::from(u8::from(self.hungry)),
                f64::from(u8::from(self.thirsty)),
                timer,
            ],
        )
    }
}

impl Default for HungryThirsty {
    fn default() -> Self {
        Self::new(HungryThirstyConfig::default())
    }
}

impl Environment for HungryThirsty {
    fn obs_dim(&self) -> usize {
        grid::obs_len(3, 3)
    }

    fn num_actions(&self) -> usize {
        6
    }

    fn num_events(&self) -> usize {
        2
    }

    fn max_episode_len(&self) -> usize {
        self.cfg.max_episode_len
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cells = grid::distinct_cells(&mut rng, 3);
        self.agent = cells[0];
        self.food = cells[1];
        self.water = cells[2];
        self.hungry = false;
        self.thirsty = false;
        self.thirst_timer = self.cfg.thirst_period;
        self.t = 0;
        self.observe()
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        let action = GridAction::decode(action, 6)?;
        self.t += 1;
        // non-hungry lasts only for the step in which the agent ate
        self.hungry = true;

        let mut events = EventVector::zeros(2);
        let mut reward = 0.0;
        let mut drank = false;
        match action {
            GridAction::Eat if self.agent == self.food && !self.thirsty => {
                events.0[Self::EVENT_EAT] = 1;
                reward = 1.0;
                self.hungry = false;
            }
            GridAction::Drink if self.agent == self.water => {
                events.0[Self::EVENT_DRINK] = 1;
                self.thirst_timer = self.cfg.thirst_period;
                self.thirsty = false;
                drank = true;
            }
            GridAction::Eat | GridAction::Drink => {}
            mv => self.agent = self.agent.moved(mv),
        }
        if !drank {
            self.thirst_timer = self.thirst_timer.saturating_sub(1);
            self.thirsty = self.thirst_timer == 0;
        }

        Ok(StepResult {
            obs: self.observe(),
            reward,
            events,
            done: self.t >= self.cfg.max_episode_len,
        })
    }

    fn potential(&self) -> f64 {
        let target = if self.thirsty { self.water } else { self.food };
        grid::distance_potential(self.agent, &[target])
    }

    fn event_names(&self) -> Vec<String> {
        vec!["eat".into(), "drink".into()]
    }
}
