/// Discounted suffix sums within each episode: `G_t = r_t + gamma * G_{t+1}`,
/// restarting after every `done`.
pub fn mc_returns(rewards: &[f64], dones: &[bool], gamma: f64) -> Vec<f64> {
    assert_eq!(rewards.len(), dones.len());
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        if dones[t] {
            acc = 0.0;
        }
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardTag {
    Extrinsic,
    Intrinsic,
    Shaped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageBatch {
    /// GAE estimates before normalization.
    pub raw: Vec<f64>,
    /// Zero-mean, unit-variance advantages used by the surrogate.
    pub advantages: Vec<f64>,
    /// Regression targets for the value head: raw advantage + baseline.
    pub targets: Vec<f64>,
    pub source: RewardTag,
}

/// Generalized advantage estimation. `next_values[t]` is `V(s_{t+1})`; it is
/// ignored when `dones[t]` is set.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    next_values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
    source: RewardTag,
) -> AdvantageBatch {
    let n = rewards.len();
    assert!(values.len() == n && next_values.len() == n && dones.len() == n);
    let mut raw = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_values[t] * live - values[t];
        acc = delta + gamma * lambda * live * acc;
        raw[t] = acc;
    }
    let targets = raw.iter().zip(values).map(|(a, v)| a + v).collect();
    AdvantageBatch {
        advantages: normalize(&raw),
        raw,
        targets,
        source,
    }
}

pub fn normalize(xs: &[f64]) -> Vec<f64> {
    if xs.is_empty() {
        return Vec::new();
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    xs.iter().map(|x| (x - mean) / (std + 1e-8)).collect()
}
