use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::funcapprox::{Adam, NetSpec, ParamVector, PolicyNet, Trace, ValueNet};

use super::buffer::{RolloutBuffer, Transition};
use super::returns::{gae, AdvantageBatch, RewardTag};

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub epochs: usize,
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub policy_lr: f64,
    pub value_lr: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// `None` runs full-batch epochs.
    pub minibatch: Option<usize>,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            clip: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.0,
            policy_lr: 3e-4,
            value_lr: 1e-3,
            gamma: 0.999,
            lambda: 0.95,
            minibatch: None,
        }
    }
}

/// Which reward the inner learner maximizes.
#[derive(Debug, Clone, Copy)]
pub enum RewardSource<'a> {
    Extrinsic,
    /// Linear intrinsic reward `w . rho`; the extrinsic reward is never read.
    Intrinsic(&'a [f64]),
    /// Extrinsic reward plus a per-transition term (count bonus or shaping).
    ExtrinsicPlus(&'a [f64]),
}

impl RewardSource<'_> {
    pub fn tag(&self) -> RewardTag {
        match self {
            RewardSource::Extrinsic => RewardTag::Extrinsic,
            RewardSource::Intrinsic(_) => RewardTag::Intrinsic,
            RewardSource::ExtrinsicPlus(_) => RewardTag::Shaped,
        }
    }

    pub fn rewards(&self, buffer: &RolloutBuffer) -> Result<Vec<f64>> {
        match *self {
            RewardSource::Extrinsic => Ok(buffer.rewards()),
            RewardSource::Intrinsic(w) => buffer
                .transitions
                .iter()
                .map(|t| crate::reward::intrinsic_reward(w, &t.events))
                .collect(),
            RewardSource::ExtrinsicPlus(extra) => {
                check_len("per-transition reward terms", buffer.len(), extra.len())?;
                Ok(buffer
                    .transitions
                    .iter()
                    .zip(extra)
                    .map(|(t, e)| t.reward + e)
                    .collect())
            }
        }
    }
}

/// Policy and value networks with their optimizer states.
#[derive(Debug, Clone)]
pub struct ActorCritic {
    pub policy: PolicyNet,
    pub value: ValueNet,
    pub policy_params: ParamVector,
    pub value_params: ParamVector,
    pub policy_opt: Adam,
    pub value_opt: Adam,
}

impl ActorCritic {
    pub fn new(
        obs_dim: usize,
        num_actions: usize,
        policy_hidden: &[usize],
        value_hidden: &[usize],
        cfg: &PpoConfig,
        seed: u64,
    ) -> Result<Self> {
        let policy_spec = NetSpec::new(obs_dim, policy_hidden.to_vec(), num_actions)?;
        let value_spec = NetSpec::new(obs_dim, value_hidden.to_vec(), 1)?;
        let policy_params = ParamVector::init(&policy_spec, seed);
        let value_params = ParamVector::init(&value_spec, seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
        Ok(Self {
            policy_opt: Adam::new(policy_params.len(), cfg.policy_lr),
            value_opt: Adam::new(value_params.len(), cfg.value_lr),
            policy: PolicyNet::new(policy_spec)?,
            value: ValueNet::new(obs_dim, value_hidden.to_vec())?,
            policy_params,
            value_params,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SurrogateEval {
    /// Mean clipped surrogate (plus entropy bonus when enabled).
    pub objective: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Evaluates the clipped surrogate over `idx`, accumulating its gradient
/// (ascent direction) into `grad` when given.
#[allow(clippy::too_many_arguments)]
pub fn surrogate(
    policy: &PolicyNet,
    params: &[f64],
    samples: &[Transition],
    advantages: &[f64],
    idx: &[usize],
    clip: f64,
    entropy_coef: f64,
    mut grad: Option<&mut [f64]>,
) -> SurrogateEval {
    let mut trace = Trace::default();
    let mut probs = Vec::new();
    let mut dlogits = Vec::new();
    let mut eval = SurrogateEval::default();
    let scale = 1.0 / idx.len().max(1) as f64;
    for &i in idx {
        let s = &samples[i];
        let adv = advantages[i];
        policy.probs_traced(params, &s.obs, &mut trace, &mut probs);
        let logp = probs[s.action].ln();
        let log_ratio = logp - s.log_prob;
        let ratio = log_ratio.exp();
        let clipped = ratio.clamp(1.0 - clip, 1.0 + clip);
        let obj = (ratio * adv).min(clipped * adv);
        let entropy: f64 = -probs.iter().map(|&p| if p > 0.0 { p * p.ln() } else { 0.0 }).sum::<f64>();
        eval.objective += scale * (obj + entropy_coef * entropy);
        eval.entropy += scale * entropy;
        eval.approx_kl += scale * ((ratio - 1.0) - log_ratio);
        if (ratio - 1.0).abs() > clip {
            eval.clip_fraction += scale;
        }
        if let Some(g) = grad.as_deref_mut() {
            // The unclipped branch carries the gradient unless the clip binds.
            let active = if adv >= 0.0 { ratio <= 1.0 + clip } else { ratio >= 1.0 - clip };
            let coef = if active { adv * ratio } else { 0.0 };
            dlogits.clear();
            dlogits.extend(probs.iter().enumerate().map(|(j, &p)| {
                let score = f64::from(u8::from(j == s.action)) - p;
                let dent = if p > 0.0 { -p * (p.ln() + entropy) } else { 0.0 };
                coef * score + entropy_coef * dent
            }));
            policy.net().backward(params, &mut trace, &dlogits, scale, g);
        }
    }
    eval
}

/// Mean squared value error over `idx`; accumulates `coef * d(mse)/d(params)` into `grad`.
pub fn value_loss(
    value: &ValueNet,
    params: &[f64],
    samples: &[Transition],
    targets: &[f64],
    idx: &[usize],
    coef: f64,
    mut grad: Option<&mut [f64]>,
) -> f64 {
    let mut trace = Trace::default();
    let scale = 1.0 / idx.len().max(1) as f64;
    let mut loss = 0.0;
    for &i in idx {
        let v = value.value_traced(params, &samples[i].obs, &mut trace);
        let err = v - targets[i];
        loss += scale * err * err;
        if let Some(g) = grad.as_deref_mut() {
            value.net().backward(params, &mut trace, &[2.0 * err], coef * scale, g);
        }
    }
    loss
}

pub fn advantages_for(agent: &ActorCritic, buffer: &RolloutBuffer, rewards: &[f64], tag: RewardTag, cfg: &PpoConfig) -> AdvantageBatch {
    let mut trace = Trace::default();
    let vp = agent.value_params.values();
    let values: Vec<f64> = buffer
        .transitions
        .iter()
        .map(|t| agent.value.value_traced(vp, &t.obs, &mut trace))
        .collect();
    let next_values: Vec<f64> = buffer
        .transitions
        .iter()
        .map(|t| if t.done { 0.0 } else { agent.value.value_traced(vp, &t.next_obs, &mut trace) })
        .collect();
    gae(rewards, &values, &next_values, &buffer.dones(), cfg.gamma, cfg.lambda, tag)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    /// Surrogate objective at the start of the update, averaged over epochs.
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Runs `cfg.epochs` of clipped-surrogate ascent on the policy and squared-error
/// descent on the value head. On a numerical failure both networks are left
/// as they were.
pub fn ppo_update<R: Rng>(
    agent: &mut ActorCritic,
    buffer: &RolloutBuffer,
    source: RewardSource<'_>,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats> {
    if buffer.is_empty() {
        return Err(Error::InvalidConfig("empty rollout buffer".into()));
    }
    let rewards = source.rewards(buffer)?;
    let batch = advantages_for(agent, buffer, &rewards, source.tag(), cfg);
    if batch.advantages.iter().chain(&batch.targets).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("advantage estimates".into()));
    }

    let snapshot = (
        agent.policy_params.clone(),
        agent.value_params.clone(),
        agent.policy_opt.clone(),
        agent.value_opt.clone(),
    );
    let result = run_epochs(agent, buffer, &batch, cfg, rng);
    if result.is_err() {
        (agent.policy_params, agent.value_params, agent.policy_opt, agent.value_opt) = snapshot;
    }
    result
}

fn run_epochs<R: Rng>(
    agent: &mut ActorCritic,
    buffer: &RolloutBuffer,
    batch: &AdvantageBatch,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats> {
    let samples = &buffer.transitions;
    let n = samples.len();
    let mut order: Vec<usize> = (0..n).collect();
    let chunk = cfg.minibatch.unwrap_or(n).clamp(1, n);
    let mut pgrad = vec![0.0; agent.policy_params.len()];
    let mut vgrad = vec![0.0; agent.value_params.len()];
    let mut stats = UpdateStats::default();
    let mut evals = 0usize;

    for _ in 0..cfg.epochs {
        if chunk < n {
            order.shuffle(rng);
        }
        for idx in order.chunks(chunk) {
            pgrad.iter_mut().for_each(|g| *g = 0.0);
            vgrad.iter_mut().for_each(|g| *g = 0.0);
            let s = surrogate(
                &agent.policy,
                agent.policy_params.values(),
                samples,
                &batch.advantages,
                idx,
                cfg.clip,
                cfg.entropy_coef,
                Some(&mut pgrad),
            );
            let vl = value_loss(
                &agent.value,
                agent.value_params.values(),
                samples,
                &batch.targets,
                idx,
                cfg.value_coef,
                Some(&mut vgrad),
            );
            if !s.objective.is_finite() || !vl.is_finite() {
                return Err(Error::NonFinite("PPO loss".into()));
            }
            agent.policy_opt.ascend(agent.policy_params.values_mut(), &pgrad)?;
            agent.value_opt.descend(agent.value_params.values_mut(), &vgrad)?;
            stats.surrogate += s.objective;
            stats.value_loss += vl;
            stats.entropy += s.entropy;
            stats.approx_kl += s.approx_kl;
            stats.clip_fraction += s.clip_fraction;
            evals += 1;
        }
    }
    let k = evals.max(1) as f64;
    stats.surrogate /= k;
    stats.value_loss /= k;
    stats.entropy /= k;
    stats.approx_kl /= k;
    stats.clip_fraction /= k;
    Ok(stats)
}
