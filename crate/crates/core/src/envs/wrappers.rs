use std::collections::VecDeque;

use crate::error::Result;

use super::{BucketTable, Environment, EventVector, StepResult};

/// FIFO of pending payouts: a reward pushed at step `t` is released at `t + k`.
#[derive(Debug, Clone)]
pub struct PayoutQueue {
    delay: usize,
    pending: VecDeque<f64>,
}

impl PayoutQueue {
    pub fn new(delay: usize) -> Self {
        let mut q = Self {
            delay,
            pending: VecDeque::with_capacity(delay + 1),
        };
        q.clear();
        q
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn clear(&mut self) {
        self.pending.clear();
        self.pending.extend(std::iter::repeat_n(0.0, self.delay));
    }

    /// Queues this step's reward and returns what is due now. At episode end
    /// every outstanding payout is released as well.
    pub fn push(&mut self, reward: f64, done: bool) -> f64 {
        self.pending.push_back(reward);
        let mut due = self.pending.pop_front().unwrap_or(0.0);
        if done {
            due += self.pending.drain(..).sum::<f64>();
            self.clear();
        }
        due
    }
}

/// Delays every extrinsic reward of the inner environment by `k` steps.
/// Events pass through immediately.
#[derive(Debug, Clone)]
pub struct Delayed<E> {
    inner: E,
    queue: PayoutQueue,
}

impl<E: Environment> Delayed<E> {
    pub fn new(inner: E, delay: usize) -> Self {
        Self {
            inner,
            queue: PayoutQueue::new(delay),
        }
    }

    /// Signed constructor for callers holding untrusted input.
    pub fn try_new(inner: E, delay: i64) -> Result<Self> {
        let delay = usize::try_from(delay).map_err(|_| {
            crate::Error::InvalidConfig(format!("reward delay must be >= 0, got {delay}"))
        })?;
        Ok(Self::new(inner, delay))
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }
}

impl<E: Environment> Environment for Delayed<E> {
    fn obs_dim(&self) -> usize {
        self.inner.obs_dim()
    }
    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }
    fn num_events(&self) -> usize {
        self.inner.num_events()
    }
    fn max_episode_len(&self) -> usize {
        self.inner.max_episode_len()
    }
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.queue.clear();
        self.inner.reset(seed)
    }
    fn step(&mut self, action: usize) -> Result<StepResult> {
        let mut r = self.inner.step(action)?;
        r.reward = self.queue.push(r.reward, r.done);
        Ok(r)
    }
    fn potential(&self) -> f64 {
        self.inner.potential()
    }
    fn event_names(&self) -> Vec<String> {
        self.inner.event_names()
    }
}

/// One step of an environment that reports its reward as separate scalar streams.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamStep {
    pub obs: Vec<f64>,
    pub streams: Vec<f64>,
    pub done: bool,
}

pub trait StreamEnv: Send {
    fn obs_dim(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn num_streams(&self) -> usize;
    fn max_episode_len(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Vec<f64>;
    fn step(&mut self, action: usize) -> Result<StreamStep>;
}

/// Withholds reward until the episode ends, then pays the cumulative sum; each
/// step still emits the game-point events of its per-stream rewards.
///
/// A single-stream table applied to a multi-stream environment buckets the
/// summed reward.
#[derive(Debug, Clone)]
pub struct SparseEpisode<E> {
    inner: E,
    table: BucketTable,
    total: f64,
}

impl<E: StreamEnv> SparseEpisode<E> {
    pub fn new(inner: E, table: BucketTable) -> Self {
        assert!(
            table.num_streams() == 1 || table.num_streams() == inner.num_streams(),
            "bucket table has {} streams, environment has {}",
            table.num_streams(),
            inner.num_streams()
        );
        Self {
            inner,
            table,
            total: 0.0,
        }
    }

    pub fn table(&self) -> &BucketTable {
        &self.table
    }
}

fn stream_events(table: &BucketTable, streams: &[f64]) -> EventVector {
    let mut events = EventVector::zeros(table.num_events());
    if table.num_streams() == 1 {
        events.0[table.bucketize(streams.iter().sum(), 0)] += 1;
    } else {
        for (s, &r) in streams.iter().enumerate() {
            events.0[table.bucketize(r, s)] += 1;
        }
    }
    events
}

impl<E: StreamEnv> Environment for SparseEpisode<E> {
    fn obs_dim(&self) -> usize {
        self.inner.obs_dim()
    }
    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }
    fn num_events(&self) -> usize {
        self.table.num_events()
    }
    fn max_episode_len(&self) -> usize {
        self.inner.max_episode_len()
    }
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.total = 0.0;
        self.inner.reset(seed)
    }
    fn step(&mut self, action: usize) -> Result<StepResult> {
        let s = self.inner.step(action)?;
        self.total += s.streams.iter().sum::<f64>();
        let reward = if s.done {
            std::mem::take(&mut self.total)
        } else {
            0.0
        };
        Ok(StepResult {
            events: stream_events(&self.table, &s.streams),
            obs: s.obs,
            reward,
            done: s.done,
        })
    }
    fn event_names(&self) -> Vec<String> {
        (0..self.num_events()).map(|i| format!("point{i}")).collect()
    }
}

/// Applies the episode-end reward scheme to a recorded episode of per-step
/// stream rewards: returns the delivered reward stream and per-step events.
pub fn sparsify_episode(steps: &[Vec<f64>], table: &BucketTable) -> (Vec<f64>, Vec<EventVector>) {
    let mut rewards = vec![0.0; steps.len()];
    if let Some(last) = rewards.last_mut() {
        *last = steps.iter().flatten().sum();
    }
    let events = steps.iter().map(|s| stream_events(table, s)).collect();
    (rewards, events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_delay_is_identity() {
        let mut q = PayoutQueue::new(0);
        for r in [1.0, -2.0, 0.5] {
            assert_eq!(q.push(r, false), r);
        }
    }

    #[test]
    fn reward_arrives_k_steps_later() {
        let mut q = PayoutQueue::new(10);
        let delivered: Vec<f64> = (0..20)
            .map(|t| q.push(if t == 3 { 1.0 } else { 0.0 }, t == 19))
            .collect();
        for (t, &d) in delivered.iter().enumerate() {
            assert_eq!(d, if t == 13 { 1.0 } else { 0.0 }, "t = {t}");
        }
    }

    #[test]
    fn pending_payout_folds_into_terminal_step() {
        let mut q = PayoutQueue::new(10);
        let mut delivered = Vec::new();
        for t in 0..8 {
            delivered.push(q.push(if t == 4 { 1.0 } else { 0.0 }, t == 7));
        }
        assert_eq!(delivered[7], 1.0);
        assert_eq!(delivered.iter().sum::<f64>(), 1.0);
        // queue is clean for the next episode
        assert_eq!(q.push(0.0, false), 0.0);
    }

    #[test]
    fn negative_delay_rejected() {
        let env = super::super::Foraging::new(Default::default());
        assert!(Delayed::try_new(env.clone(), -1).is_err());
        assert!(Delayed::try_new(env, 3).is_ok());
    }

    #[test]
    fn sparse_scheme_on_recorded_episode() {
        let table = BucketTable::hopper();
        let steps = vec![vec![0.6], vec![0.6], vec![0.6]];
        let (rewards, events) = sparsify_episode(&steps, &table);
        assert_eq!(rewards[..2], [0.0, 0.0]);
        assert!((rewards[2] - 1.8).abs() < 1e-12);
        for e in &events {
            assert_eq!(*e, EventVector::one_hot(11, 6));
        }
        let (rewards, events) = sparsify_episode(&[], &table);
        assert!(rewards.is_empty() && events.is_empty());
    }
}
