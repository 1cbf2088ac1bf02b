//! Intrinsic reward, motivation alignment, and the count-bonus and
//! potential-shaping baselines.

mod motivation;

use log::warn;

use crate::envs::EventVector;
use crate::error::{check_len, Result};
use crate::funcapprox::Adam;
use crate::ppo::RolloutBuffer;

pub(crate) use motivation::norm;
pub use motivation::{
    alignment_cosine, event_returns, motivation_ex, motivation_in, outer_grad, Motivation, MotivationBatch,
    OuterGrad, RegMode,
};

/// `w . rho`
pub fn intrinsic_reward(w: &[f64], events: &EventVector) -> Result<f64> {
    check_len("event vector", w.len(), events.len())?;
    Ok(w.iter().zip(events.counts()).map(|(wi, &c)| wi * f64::from(c)).sum())
}

/// Learned event weights with their regularization anchor and optimizer.
#[derive(Debug, Clone)]
pub struct IntrinsicWeights {
    pub w: Vec<f64>,
    pub w_init: Vec<f64>,
    opt: Adam,
    skipped: usize,
}

impl IntrinsicWeights {
    /// Every channel starts at, and is anchored to, `init`.
    pub fn new(n: usize, init: f64, lr: f64) -> Self {
        Self {
            w: vec![init; n],
            w_init: vec![init; n],
            opt: Adam::new(n, lr),
            skipped: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Number of updates skipped because of a non-finite gradient.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// One adaptive ascent step on the alignment objective. Returns `false`
    /// (weights untouched) when the gradient is unusable.
    pub fn update(&mut self, grad: &[f64]) -> bool {
        match self.opt.ascend(&mut self.w, grad) {
            Ok(()) => true,
            Err(e) => {
                warn!("skipping intrinsic weight update: {e}");
                self.skipped += 1;
                false
            }
        }
    }
}

/// Lifetime occurrence counts per event channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventCounts(pub Vec<u64>);

impl EventCounts {
    pub fn new(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn observe(&mut self, events: &EventVector) {
        for (c, &e) in self.0.iter_mut().zip(events.counts()) {
            *c += u64::from(e);
        }
    }

    /// Records `events`, then returns their bonus.
    pub fn observe_and_bonus(&mut self, events: &EventVector) -> f64 {
        self.observe(events);
        count_bonus(self, events)
    }

    /// Bonuses for a buffer in transition order, updating the counts as it goes.
    pub fn bonuses(&mut self, buffer: &RolloutBuffer) -> Vec<f64> {
        buffer
            .transitions
            .iter()
            .map(|t| self.observe_and_bonus(&t.events))
            .collect()
    }
}

/// `sum over triggered channels of sqrt(1 / count)`; counts must already
/// include the current occurrence.
pub fn count_bonus(counts: &EventCounts, events: &EventVector) -> f64 {
    counts
        .0
        .iter()
        .zip(events.counts())
        .filter(|(&c, &e)| e > 0 && c > 0)
        .map(|(&c, _)| (1.0 / c as f64).sqrt())
        .sum()
}

/// `gamma * phi(s') - phi(s)`, with `phi(s') = 0` on terminal transitions.
pub fn pbrs_shape<S, F: Fn(&S) -> f64>(potential: F, s: &S, s_next: &S, gamma: f64, done: bool) -> f64 {
    shaping_term(potential(s), potential(s_next), gamma, done)
}

pub fn shaping_term(phi: f64, phi_next: f64, gamma: f64, done: bool) -> f64 {
    let next = if done { 0.0 } else { phi_next };
    gamma * next - phi
}

/// Shaping terms for every transition from the stored potentials.
pub fn pbrs_terms(buffer: &RolloutBuffer, gamma: f64) -> Vec<f64> {
    buffer
        .transitions
        .iter()
        .map(|t| shaping_term(t.potential, t.next_potential, gamma, t.done))
        .collect()
}
