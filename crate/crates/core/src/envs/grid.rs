use rand::Rng;

use crate::error::{Error, Result};

pub const GRID_SIZE: usize = 5;
const CELLS: usize = GRID_SIZE * GRID_SIZE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pos {
    pub x: usize,
    pub y: usize,
}

impl Pos {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn index(self) -> usize {
        self.y * GRID_SIZE + self.x
    }

    pub fn from_index(i: usize) -> Self {
        Self {
            x: i % GRID_SIZE,
            y: i / GRID_SIZE,
        }
    }

    pub fn manhattan(self, other: Pos) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    /// Moves one cell, clipped at the walls. Non-movement actions stay put.
    pub fn moved(self, action: GridAction) -> Pos {
        let max = GRID_SIZE - 1;
        match action {
            GridAction::Up => Pos::new(self.x, self.y.saturating_sub(1)),
            GridAction::Down => Pos::new(self.x, (self.y + 1).min(max)),
            GridAction::Left => Pos::new(self.x.saturating_sub(1), self.y),
            GridAction::Right => Pos::new((self.x + 1).min(max), self.y),
            GridAction::Eat | GridAction::Drink => self,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAction {
    Up,
    Down,
    Left,
    Right,
    Eat,
    Drink,
}

impl GridAction {
    pub fn decode(action: usize, num_actions: usize) -> Result<Self> {
        use GridAction::*;
        const ALL: [GridAction; 6] = [Up, Down, Left, Right, Eat, Drink];
        if action < num_actions {
            Ok(ALL[action])
        } else {
            Err(Error::InvalidAction {
                action,
                num_actions,
            })
        }
    }
}

/// Draws `k` distinct cells uniformly at random.
pub(crate) fn distinct_cells<R: Rng>(rng: &mut R, k: usize) -> Vec<Pos> {
    rand::seq::index::sample(rng, CELLS, k)
        .into_iter()
        .map(Pos::from_index)
        .collect()
}

/// A uniformly random cell not in `occupied`.
pub(crate) fn free_cell<R: Rng>(rng: &mut R, occupied: &[Pos]) -> Pos {
    let free: Vec<usize> = (0..CELLS)
        .filter(|&i| occupied.iter().all(|p| p.index() != i))
        .collect();
    Pos::from_index(free[rng.gen_range(0..free.len())])
}

/// Writes one-hot cell channels (a missing object leaves its channel zero)
/// followed by the given flag values.
pub(crate) fn encode(channels: &[Option<Pos>], flags: &[f64]) -> Vec<f64> {
    let mut obs = vec![0.0; channels.len() * CELLS + flags.len()];
    for (c, pos) in channels.iter().enumerate() {
        if let Some(p) = pos {
            obs[c * CELLS + p.index()] = 1.0;
        }
    }
    obs[channels.len() * CELLS..].copy_from_slice(flags);
    obs
}

pub(crate) fn obs_len(channels: usize, flags: usize) -> usize {
    channels * CELLS + flags
}

/// Shaping potential: negative normalized distance to the nearest target.
pub(crate) fn distance_potential(agent: Pos, targets: &[Pos]) -> f64 {
    targets
        .iter()
        .map(|&t| agent.manhattan(t))
        .min()
        .map_or(0.0, |d| -(d as f64) / (2 * GRID_SIZE) as f64)
}
