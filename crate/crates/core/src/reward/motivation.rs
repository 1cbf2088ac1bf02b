//! Motivation vectors and the alignment objective.
//!
//! For a batch of `B` transitions with score vectors `g_t = d log pi(a_t|s_t) / d theta`,
//! extrinsic Monte-Carlo returns `G_t` and discounted event returns `Grho_t`:
//!
//! * `z_ex = (1/B) sum_t g_t G_t`
//! * `z_in(w) = (1/B) sum_t g_t (w . Grho_t) = M w` with `M = (1/B) sum_t g_t (x) Grho_t`
//! * `J_o(w) = z_ex . z_in(w) - beta * reg(w)`
//! * `dJ_o/dw = M^T z_ex - beta * dreg/dw`
//!
//! `M^T v` is evaluated as `(1/B) sum_t (v . g_t) Grho_t`, so the `|theta| x n`
//! Jacobian is never formed.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_len, Error, Result};
use crate::funcapprox::{PolicyNet, Trace};
use crate::ppo::{mc_returns, RolloutBuffer};

/// Policy-gradient direction of a reward stream, over the policy parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Motivation(pub Vec<f64>);

impl Motivation {
    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn dot(&self, other: &Motivation) -> f64 {
        dot(&self.0, &other.0)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

const TINY: f64 = 1e-12;

/// `a . b / (|a| |b|)`, or 0 when either norm is below 1e-12.
pub fn alignment_cosine(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na < TINY || nb < TINY {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

/// Regularizer on the intrinsic side of the alignment objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegMode {
    /// `beta * |z_in|`
    ZNorm,
    /// `beta * |w - w_init|^2`
    WeightAnchor,
}

impl RegMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RegMode::ZNorm => "z-norm",
            RegMode::WeightAnchor => "weight-anchor",
        }
    }
}

impl fmt::Display for RegMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "z-norm" => Ok(RegMode::ZNorm),
            "weight-anchor" => Ok(RegMode::WeightAnchor),
            other => Err(Error::Parse(format!("unknown regularizer `{other}`"))),
        }
    }
}

/// Per-channel discounted event counts `Grho_t = sum_{i>=t} gamma^(i-t) rho_i`
/// within each episode.
pub fn event_returns(buffer: &RolloutBuffer, gamma: f64) -> Vec<Vec<f64>> {
    let n = buffer.num_events();
    let mut out = vec![vec![0.0; n]; buffer.len()];
    let mut acc = vec![0.0; n];
    for (t, tr) in buffer.transitions.iter().enumerate().rev() {
        if tr.done {
            acc.iter_mut().for_each(|a| *a = 0.0);
        }
        for (a, &c) in acc.iter_mut().zip(tr.events.counts()) {
            *a = f64::from(c) + gamma * *a;
        }
        out[t].copy_from_slice(&acc);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterGrad {
    /// `dJ_o/dw`
    pub grad: Vec<f64>,
    /// `M^T z_ex`
    pub alignment: Vec<f64>,
    /// `beta * dreg/dw`
    pub regularizer: Vec<f64>,
    pub objective: f64,
    pub cosine: f64,
    pub z_ex_norm: f64,
    pub z_in_norm: f64,
}

/// Everything the outer step needs from one batch: score vectors, extrinsic
/// returns and event returns.
#[derive(Debug, Clone)]
pub struct MotivationBatch {
    dim: usize,
    scores: Vec<f64>,
    ext_returns: Vec<f64>,
    event_returns: Vec<Vec<f64>>,
}

impl MotivationBatch {
    /// Scores are taken at `params` (the current policy); returns are plain
    /// Monte-Carlo sums with no baseline.
    pub fn from_buffer(buffer: &RolloutBuffer, policy: &PolicyNet, params: &[f64], gamma: f64) -> Result<Self> {
        if buffer.is_empty() {
            return Err(Error::InvalidConfig("motivation needs a non-empty batch".into()));
        }
        policy.net().check_params(params)?;
        let dim = policy.param_count();
        let mut scores = vec![0.0; dim * buffer.len()];
        let mut trace = Trace::default();
        let mut probs = Vec::new();
        for (tr, row) in buffer.transitions.iter().zip(scores.chunks_mut(dim)) {
            policy.net().check_input(&tr.obs)?;
            policy.accumulate_log_prob_grad(params, &tr.obs, tr.action, 1.0, &mut trace, &mut probs, row);
        }
        Ok(Self {
            dim,
            scores,
            ext_returns: mc_returns(&buffer.rewards(), &buffer.dones(), gamma),
            event_returns: event_returns(buffer, gamma),
        })
    }

    pub fn from_parts(score_rows: Vec<Vec<f64>>, ext_returns: Vec<f64>, event_returns: Vec<Vec<f64>>) -> Result<Self> {
        let b = score_rows.len();
        if b == 0 {
            return Err(Error::InvalidConfig("motivation needs a non-empty batch".into()));
        }
        check_len("extrinsic returns", b, ext_returns.len())?;
        check_len("event returns", b, event_returns.len())?;
        let dim = score_rows[0].len();
        let n = event_returns[0].len();
        for (row, er) in score_rows.iter().zip(&event_returns) {
            check_len("score vector", dim, row.len())?;
            check_len("event return", n, er.len())?;
        }
        Ok(Self {
            dim,
            scores: score_rows.concat(),
            ext_returns,
            event_returns,
        })
    }

    pub fn len(&self) -> usize {
        self.ext_returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ext_returns.is_empty()
    }

    pub fn num_events(&self) -> usize {
        self.event_returns[0].len()
    }

    pub fn policy_dim(&self) -> usize {
        self.dim
    }

    pub fn score(&self, t: usize) -> &[f64] {
        &self.scores[t * self.dim..(t + 1) * self.dim]
    }

    pub fn ext_returns(&self) -> &[f64] {
        &self.ext_returns
    }

    pub fn event_returns(&self) -> &[Vec<f64>] {
        &self.event_returns
    }

    /// `(1/B) sum_t g_t c_t`
    fn weighted_score_mean(&self, coef: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut z = vec![0.0; self.dim];
        let scale = 1.0 / self.len() as f64;
        for (t, row) in self.scores.chunks(self.dim).enumerate() {
            let c = coef(t) * scale;
            if c == 0.0 {
                continue;
            }
            for (zi, gi) in z.iter_mut().zip(row) {
                *zi += c * gi;
            }
        }
        z
    }

    pub fn z_ex(&self) -> Motivation {
        Motivation(self.weighted_score_mean(|t| self.ext_returns[t]))
    }

    pub fn z_in(&self, w: &[f64]) -> Result<Motivation> {
        check_len("intrinsic weights", self.num_events(), w.len())?;
        Ok(Motivation(self.weighted_score_mean(|t| dot(w, &self.event_returns[t]))))
    }

    /// `M^T v = (1/B) sum_t (v . g_t) Grho_t`
    pub fn jacobian_transpose_apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("motivation", self.dim, v.len())?;
        let n = self.num_events();
        let scale = 1.0 / self.len() as f64;
        let mut out = vec![0.0; n];
        for (row, er) in self.scores.chunks(self.dim).zip(&self.event_returns) {
            let c = dot(v, row) * scale;
            for (o, e) in out.iter_mut().zip(er) {
                *o += c * e;
            }
        }
        Ok(out)
    }

    pub fn objective(&self, w: &[f64], w_init: &[f64], beta: f64, mode: RegMode) -> Result<f64> {
        let z_ex = self.z_ex();
        let z_in = self.z_in(w)?;
        let reg = match mode {
            RegMode::ZNorm => z_in.norm(),
            RegMode::WeightAnchor => {
                check_len("anchor weights", w.len(), w_init.len())?;
                w.iter().zip(w_init).map(|(a, b)| (a - b).powi(2)).sum()
            }
        };
        Ok(z_ex.dot(&z_in) - beta * reg)
    }

    pub fn outer_grad(&self, w: &[f64], w_init: &[f64], beta: f64, mode: RegMode) -> Result<OuterGrad> {
        check_len("anchor weights", w.len(), w_init.len())?;
        let z_ex = self.z_ex();
        let z_in = self.z_in(w)?;
        let alignment = self.jacobian_transpose_apply(&z_ex.0)?;
        let z_in_norm = z_in.norm();
        let (reg_value, reg_grad) = match mode {
            RegMode::ZNorm => {
                if z_in_norm < TINY {
                    (z_in_norm, vec![0.0; w.len()])
                } else {
                    let mut g = self.jacobian_transpose_apply(&z_in.0)?;
                    g.iter_mut().for_each(|x| *x /= z_in_norm);
                    (z_in_norm, g)
                }
            }
            RegMode::WeightAnchor => {
                let diff: Vec<f64> = w.iter().zip(w_init).map(|(a, b)| a - b).collect();
                (dot(&diff, &diff), diff.iter().map(|d| 2.0 * d).collect())
            }
        };
        let regularizer: Vec<f64> = reg_grad.iter().map(|g| beta * g).collect();
        let grad: Vec<f64> = alignment.iter().zip(&regularizer).map(|(a, r)| a - r).collect();
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("outer gradient entry {i}")));
        }
        Ok(OuterGrad {
            objective: z_ex.dot(&z_in) - beta * reg_value,
            cosine: alignment_cosine(&z_ex.0, &z_in.0),
            z_ex_norm: z_ex.norm(),
            z_in_norm,
            grad,
            alignment,
            regularizer,
        })
    }
}

pub fn motivation_ex(buffer: &RolloutBuffer, policy: &PolicyNet, params: &[f64], gamma: f64) -> Result<Motivation> {
    Ok(MotivationBatch::from_buffer(buffer, policy, params, gamma)?.z_ex())
}

pub fn motivation_in(
    buffer: &RolloutBuffer,
    policy: &PolicyNet,
    params: &[f64],
    w: &[f64],
    gamma: f64,
) -> Result<Motivation> {
    MotivationBatch::from_buffer(buffer, policy, params, gamma)?.z_in(w)
}

#[allow(clippy::too_many_arguments)]
pub fn outer_grad(
    buffer: &RolloutBuffer,
    policy: &PolicyNet,
    params: &[f64],
    w: &[f64],
    w_init: &[f64],
    gamma: f64,
    beta: f64,
    mode: RegMode,
) -> Result<OuterGrad> {
    MotivationBatch::from_buffer(buffer, policy, params, gamma)?.outer_grad(w, w_init, beta, mode)
}
