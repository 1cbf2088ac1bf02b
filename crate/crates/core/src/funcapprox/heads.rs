use crate::error::{Error, Result};

use super::mlp::{Mlp, NetSpec, Trace};

/// Numerically stable softmax written into `out`.
pub fn softmax_into(logits: &[f64], out: &mut Vec<f64>) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    out.clear();
    out.extend(logits.iter().map(|&l| (l - max).exp()));
    let sum: f64 = out.iter().sum();
    for p in out.iter_mut() {
        *p /= sum;
    }
}

/// Categorical policy: softmax over the MLP's linear outputs.
#[derive(Debug, Clone)]
pub struct PolicyNet {
    net: Mlp,
}

impl PolicyNet {
    pub fn new(spec: NetSpec) -> Result<Self> {
        Ok(Self { net: Mlp::new(spec)? })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn num_actions(&self) -> usize {
        self.net.output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count()
    }

    pub fn probs(&self, params: &[f64], obs: &[f64]) -> Result<Vec<f64>> {
        self.net.check_params(params)?;
        self.net.check_input(obs)?;
        let mut trace = Trace::default();
        let mut probs = Vec::new();
        self.probs_traced(params, obs, &mut trace, &mut probs);
        Ok(probs)
    }

    /// Unchecked hot-path variant; leaves the activations in `trace` for
    /// a following `backward`.
    pub fn probs_traced(&self, params: &[f64], obs: &[f64], trace: &mut Trace, probs: &mut Vec<f64>) {
        let logits = self.net.forward(params, obs, trace);
        softmax_into(logits, probs);
    }

    pub fn log_prob(&self, params: &[f64], obs: &[f64], action: usize) -> Result<f64> {
        self.check_action(action)?;
        Ok(self.probs(params, obs)?[action].ln())
    }

    /// `log pi(action | obs)` and its gradient with respect to every policy parameter.
    pub fn log_prob_grad(&self, params: &[f64], obs: &[f64], action: usize) -> Result<(f64, Vec<f64>)> {
        self.net.check_params(params)?;
        self.net.check_input(obs)?;
        self.check_action(action)?;
        let mut trace = Trace::default();
        let mut probs = Vec::new();
        let mut grad = vec![0.0; self.param_count()];
        let lp = self.accumulate_log_prob_grad(params, obs, action, 1.0, &mut trace, &mut probs, &mut grad);
        Ok((lp, grad))
    }

    /// `grad += scale * d log pi(action|obs) / d params`; returns the log-probability.
    #[allow(clippy::too_many_arguments)]
    pub fn accumulate_log_prob_grad(
        &self,
        params: &[f64],
        obs: &[f64],
        action: usize,
        scale: f64,
        trace: &mut Trace,
        probs: &mut Vec<f64>,
        grad: &mut [f64],
    ) -> f64 {
        self.probs_traced(params, obs, trace, probs);
        let lp = probs[action].ln();
        // d log softmax_a / d logit_j = 1[j = a] - p_j
        let mut dlogits: Vec<f64> = probs.iter().map(|p| -p).collect();
        dlogits[action] += 1.0;
        self.net.backward(params, trace, &dlogits, scale, grad);
        lp
    }

    pub fn greedy_action(&self, params: &[f64], obs: &[f64], trace: &mut Trace) -> usize {
        let logits = self.net.forward(params, obs, trace);
        let mut best = 0;
        for (a, &l) in logits.iter().enumerate() {
            if l > logits[best] {
                best = a;
            }
        }
        best
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action < self.num_actions() {
            Ok(())
        } else {
            Err(Error::InvalidAction {
                action,
                num_actions: self.num_actions(),
            })
        }
    }
}

/// Scalar state-value head.
#[derive(Debug, Clone)]
pub struct ValueNet {
    net: Mlp,
}

impl ValueNet {
    pub fn new(input_dim: usize, hidden: Vec<usize>) -> Result<Self> {
        Ok(Self {
            net: Mlp::new(NetSpec::new(input_dim, hidden, 1)?)?,
        })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count()
    }

    pub fn value(&self, params: &[f64], obs: &[f64]) -> Result<f64> {
        self.net.check_params(params)?;
        self.net.check_input(obs)?;
        Ok(self.value_traced(params, obs, &mut Trace::default()))
    }

    pub fn value_traced(&self, params: &[f64], obs: &[f64], trace: &mut Trace) -> f64 {
        self.net.forward(params, obs, trace)[0]
    }

    pub fn value_grad(&self, params: &[f64], obs: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.net.check_params(params)?;
        self.net.check_input(obs)?;
        let mut trace = Trace::default();
        let v = self.value_traced(params, obs, &mut trace);
        let mut grad = vec![0.0; self.param_count()];
        self.net.backward(params, &mut trace, &[1.0], 1.0, &mut grad);
        Ok((v, grad))
    }
}
