//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use mbrd::envs::{Delayed, Environment, EventVector, Foraging, ForagingConfig};
use mbrd::funcapprox::{NetSpec, ParamVector, PolicyNet, ValueNet};
use mbrd::ppo::{surrogate, value_loss, Transition};
use mbrd::reward::{pbrs_shape, MotivationBatch, RegMode};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// `|a - b| / max(|a|, |b|, 1e-6)`
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Central difference of `f` along every coordinate of `x`.
pub fn central_diff(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let dn = f(&p);
            p[i] = orig;
            (up - dn) / (2.0 * h)
        })
        .collect()
}

pub fn max_rel_err(fd: &[f64], analytic: &[f64]) -> f64 {
    fd.iter().zip(analytic).map(|(&a, &b)| rel_err(a, b)).fold(0.0, f64::max)
}

pub fn random_spec(rng: &mut ChaCha8Rng, output_dim: usize) -> NetSpec {
    let input = rng.gen_range(2..=6);
    let depth = rng.gen_range(0..=2);
    let hidden = (0..depth).map(|_| rng.gen_range(3..=8)).collect();
    NetSpec::new(input, hidden, output_dim).unwrap()
}

pub fn random_params(rng: &mut ChaCha8Rng, spec: &NetSpec) -> Vec<f64> {
    let mut p = ParamVector::init(spec, rng.gen()).into_values();
    // non-zero biases so the bias gradients are exercised too
    for x in &mut p {
        *x += 0.3 * normal(rng);
    }
    p
}

/// Max relative error of `log_prob_grad` against central differences on a random instance.
pub fn log_prob_grad_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let actions = r.gen_range(2..=5);
    let spec = random_spec(&mut r, actions);
    let policy = PolicyNet::new(spec.clone()).unwrap();
    let params = random_params(&mut r, &spec);
    let obs = normals(&mut r, spec.input_dim);
    let a = r.gen_range(0..actions);
    let (_, g) = policy.log_prob_grad(&params, &obs, a).unwrap();
    let fd = central_diff(&params, 1e-6, |p| policy.log_prob(p, &obs, a).unwrap());
    max_rel_err(&fd, &g)
}

/// Max relative error of `value_grad` and of the value-loss gradient.
pub fn value_grad_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let spec = random_spec(&mut r, 1);
    let value = ValueNet::new(spec.input_dim, spec.hidden.clone()).unwrap();
    let params = random_params(&mut r, &spec);
    let obs = normals(&mut r, spec.input_dim);
    let (_, g) = value.value_grad(&params, &obs).unwrap();
    let fd = central_diff(&params, 1e-6, |p| value.value(p, &obs).unwrap());
    let head = max_rel_err(&fd, &g);

    let batch = random_batch(&mut r, None, spec.input_dim, 6);
    let targets = normals(&mut r, batch.len());
    let idx: Vec<usize> = (0..batch.len()).collect();
    let mut lg = vec![0.0; params.len()];
    value_loss(&value, &params, &batch, &targets, &idx, 1.0, Some(&mut lg));
    let lfd = central_diff(&params, 1e-6, |p| value_loss(&value, p, &batch, &targets, &idx, 1.0, None));
    head.max(max_rel_err(&lfd, &lg))
}

/// Transitions with random observations; stored log-probabilities sit near
/// the current policy's so ratios straddle the clip range.
pub fn random_batch(rng: &mut ChaCha8Rng, policy: Option<(&PolicyNet, &[f64])>, obs_dim: usize, n: usize) -> Vec<Transition> {
    (0..n)
        .map(|_| {
            let obs = normals(rng, obs_dim);
            let (action, log_prob) = match policy {
                Some((pi, params)) => {
                    let a = rng.gen_range(0..pi.num_actions());
                    (a, pi.log_prob(params, &obs, a).unwrap() + 0.3 * normal(rng))
                }
                None => (0, 0.0),
            };
            Transition {
                obs: obs.clone(),
                action,
                reward: 0.0,
                next_obs: obs,
                events: EventVector::zeros(1),
                done: false,
                log_prob,
                potential: 0.0,
                next_potential: 0.0,
            }
        })
        .collect()
}

/// Max relative error of the clipped-surrogate gradient (with entropy bonus).
pub fn surrogate_grad_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let actions = r.gen_range(2..=4);
    let spec = random_spec(&mut r, actions);
    let policy = PolicyNet::new(spec.clone()).unwrap();
    let params = random_params(&mut r, &spec);
    let n = r.gen_range(2..=8);
    let batch = random_batch(&mut r, Some((&policy, &params)), spec.input_dim, n);
    let adv = normals(&mut r, n);
    let idx: Vec<usize> = (0..n).collect();
    let mut g = vec![0.0; params.len()];
    surrogate(&policy, &params, &batch, &adv, &idx, 0.2, 0.01, Some(&mut g));
    let fd = central_diff(&params, 1e-6, |p| {
        surrogate(&policy, p, &batch, &adv, &idx, 0.2, 0.01, None).objective
    });
    max_rel_err(&fd, &g)
}

/// `M^T z_ex` with `M` built explicitly as a sum of outer products.
pub fn naive_alignment(scores: &[Vec<f64>], ext: &[f64], evr: &[Vec<f64>]) -> Vec<f64> {
    let b = scores.len() as f64;
    let p = scores[0].len();
    let n = evr[0].len();
    let mut z_ex = vec![0.0; p];
    let mut m = vec![vec![0.0; n]; p];
    for t in 0..scores.len() {
        for i in 0..p {
            z_ex[i] += scores[t][i] * ext[t] / b;
            for k in 0..n {
                m[i][k] += scores[t][i] * evr[t][k] / b;
            }
        }
    }
    (0..n).map(|k| (0..p).map(|i| m[i][k] * z_ex[i]).sum()).collect()
}

/// Finite tabular MDP with an absorbing "episode over" outcome.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    pub states: usize,
    pub actions: usize,
    /// `p[s][a][s']`; the remainder up to 1 is the termination probability.
    pub p: Vec<Vec<Vec<f64>>>,
    pub r: Vec<Vec<f64>>,
    /// Event counts per (s, a).
    pub rho: Vec<Vec<Vec<f64>>>,
    pub d0: Vec<f64>,
    pub gamma: f64,
}

impl TabularMdp {
    pub fn random(rng: &mut ChaCha8Rng, states: usize, actions: usize, events: usize, terminal: bool) -> Self {
        let p = (0..states)
            .map(|_| {
                (0..actions)
                    .map(|_| {
                        let raw: Vec<f64> = (0..states).map(|_| rng.gen::<f64>() + 0.05).collect();
                        let stay = if terminal { 1.0 - rng.gen_range(0.0..0.3) } else { 1.0 };
                        let z: f64 = raw.iter().sum();
                        raw.iter().map(|x| stay * x / z).collect()
                    })
                    .collect()
            })
            .collect();
        let r = (0..states).map(|_| normals(rng, actions)).collect();
        let rho = (0..states)
            .map(|_| {
                (0..actions)
                    .map(|_| (0..events).map(|_| f64::from(u8::from(rng.gen_bool(0.5)))).collect())
                    .collect()
            })
            .collect();
        let raw: Vec<f64> = (0..states).map(|_| rng.gen::<f64>() + 0.1).collect();
        let z: f64 = raw.iter().sum();
        Self {
            states,
            actions,
            p,
            r,
            rho,
            d0: raw.iter().map(|x| x / z).collect(),
            gamma: 0.9,
        }
    }

    pub fn one_hot(&self, s: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.states];
        v[s] = 1.0;
        v
    }

    /// Tabular softmax policy: one-hot state input, no hidden layer.
    pub fn policy(&self) -> PolicyNet {
        PolicyNet::new(NetSpec::new(self.states, vec![], self.actions).unwrap()).unwrap()
    }

    pub fn probs(&self, policy: &PolicyNet, theta: &[f64]) -> Vec<Vec<f64>> {
        (0..self.states)
            .map(|s| policy.probs(theta, &self.one_hot(s)).unwrap())
            .collect()
    }

    /// `(I - gamma P_pi)^-1`
    fn resolvent(&self, pi: &[Vec<f64>]) -> DMatrix<f64> {
        let n = self.states;
        let mut m = DMatrix::<f64>::identity(n, n);
        for s in 0..n {
            for a in 0..self.actions {
                for s2 in 0..n {
                    m[(s, s2)] -= self.gamma * pi[s][a] * self.p[s][a][s2];
                }
            }
        }
        m.try_inverse().expect("discounted resolvent is invertible")
    }

    /// Exact `Q` for the per-(s, a) reward `reward`.
    pub fn q_values(&self, pi: &[Vec<f64>], reward: impl Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
        let n = self.states;
        let r_pi = DVector::from_fn(n, |s, _| (0..self.actions).map(|a| pi[s][a] * reward(s, a)).sum());
        let v = self.resolvent(pi) * r_pi;
        (0..n)
            .map(|s| {
                (0..self.actions)
                    .map(|a| reward(s, a) + self.gamma * (0..n).map(|s2| self.p[s][a][s2] * v[s2]).sum::<f64>())
                    .collect()
            })
            .collect()
    }

    /// Discounted state visitation `sum_t gamma^t P(s_t = s)`.
    pub fn visitation(&self, pi: &[Vec<f64>]) -> Vec<f64> {
        let d0 = DVector::from_vec(self.d0.clone());
        let d = self.resolvent(pi).transpose() * d0;
        d.iter().copied().collect()
    }

    /// `J = sum_s d0(s) V(s)` for the given reward.
    pub fn objective(&self, pi: &[Vec<f64>], reward: impl Fn(usize, usize) -> f64) -> f64 {
        let q = self.q_values(pi, &reward);
        (0..self.states)
            .map(|s| self.d0[s] * (0..self.actions).map(|a| pi[s][a] * q[s][a]).sum::<f64>())
            .sum()
    }

    /// Greedy policy of the optimal Q under `reward(s, a, s', done)` by value iteration.
    pub fn greedy_optimal(&self, reward: impl Fn(usize, usize, Option<usize>) -> f64) -> Vec<usize> {
        let n = self.states;
        let mut q = vec![vec![0.0; self.actions]; n];
        for _ in 0..100_000 {
            let v: Vec<f64> = q.iter().map(|row| row.iter().copied().fold(f64::MIN, f64::max)).collect();
            let mut delta: f64 = 0.0;
            for s in 0..n {
                for a in 0..self.actions {
                    let stay: f64 = self.p[s][a].iter().sum();
                    let mut x = (1.0 - stay) * reward(s, a, None);
                    for s2 in 0..n {
                        x += self.p[s][a][s2] * (reward(s, a, Some(s2)) + self.gamma * v[s2]);
                    }
                    delta = delta.max((x - q[s][a]).abs());
                    q[s][a] = x;
                }
            }
            if delta < 1e-13 {
                break;
            }
        }
        q.iter()
            .map(|row| (0..row.len()).fold(0, |b, a| if row[a] > row[b] { a } else { b }))
            .collect()
    }
}

/// Exact `grad_theta J` for a tabular softmax policy, by central differences
/// on the exact objective.
pub fn exact_policy_gradient(mdp: &TabularMdp, policy: &PolicyNet, theta: &[f64], reward: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    central_diff(theta, 1e-6, |t| mdp.objective(&mdp.probs(policy, t), &reward))
}

/// Cosine between the analytic outer direction at `theta` and the
/// finite-difference gradient of `J_ex(theta + alpha * grad J_in(theta; w))`
/// with respect to `w`.
pub fn lookahead_cosine(seed: u64, alpha: f64) -> f64 {
    let mut r = rng(seed);
    let states = r.gen_range(2..=4);
    let events = r.gen_range(1..=3);
    let mdp = TabularMdp::random(&mut r, states, 2, events, false);
    let policy = mdp.policy();
    let theta: Vec<f64> = normals(&mut r, policy.param_count());
    let w = normals(&mut r, events);
    let pi = mdp.probs(&policy, &theta);

    // A: the implementation's outer direction with exact expectations. Each
    // (s, a) pair is one "transition" whose returns are scaled by B * d(s) pi(a|s).
    let d = mdp.visitation(&pi);
    let q_ex = mdp.q_values(&pi, |s, a| mdp.r[s][a]);
    let q_rho: Vec<Vec<Vec<f64>>> = (0..events)
        .map(|k| mdp.q_values(&pi, |s, a| mdp.rho[s][a][k]))
        .collect();
    let b = (mdp.states * mdp.actions) as f64;
    let (mut scores, mut ext, mut evr) = (Vec::new(), Vec::new(), Vec::new());
    for s in 0..mdp.states {
        for a in 0..mdp.actions {
            let weight = b * d[s] * pi[s][a];
            scores.push(policy.log_prob_grad(&theta, &mdp.one_hot(s), a).unwrap().1);
            ext.push(weight * q_ex[s][a]);
            evr.push((0..events).map(|k| weight * q_rho[k][s][a]).collect::<Vec<_>>());
        }
    }
    let batch = MotivationBatch::from_parts(scores, ext, evr).unwrap();
    let a_dir = batch.outer_grad(&w, &w, 0.0, mbrd::reward::RegMode::WeightAnchor).unwrap().alignment;

    // D: one plain inner step on the intrinsic objective, then differentiate
    // the extrinsic objective through it. grad J_in is linear in w, so the
    // per-channel gradients are computed once.
    let channel_grads: Vec<Vec<f64>> = (0..events)
        .map(|k| exact_policy_gradient(&mdp, &policy, &theta, |s, a| mdp.rho[s][a][k]))
        .collect();
    let outer = |w: &[f64]| {
        let stepped: Vec<f64> = (0..theta.len())
            .map(|i| theta[i] + alpha * (0..events).map(|k| w[k] * channel_grads[k][i]).sum::<f64>())
            .collect();
        mdp.objective(&mdp.probs(&policy, &stepped), |s, a| mdp.r[s][a])
    };
    let d_dir = central_diff(&w, 1e-3, outer);
    cosine(&a_dir, &d_dir)
}

/// True when greedy optimal policies with and without potential-based shaping agree.
pub fn pbrs_invariant(seed: u64) -> bool {
    let mut r = rng(seed);
    let states = r.gen_range(2..=6);
    let actions = r.gen_range(2..=3);
    let mdp = TabularMdp::random(&mut r, states, actions, 1, true);
    let phi: Vec<f64> = (0..states).map(|_| 3.0 * normal(&mut r)).collect();
    let plain = mdp.greedy_optimal(|s, a, _| mdp.r[s][a]);
    let shaped = mdp.greedy_optimal(|s, a, next| {
        let f = match next {
            Some(s2) => pbrs_shape(|&i: &usize| phi[i], &s, &s2, mdp.gamma, false),
            None => pbrs_shape(|&i: &usize| phi[i], &s, &s, mdp.gamma, true),
        };
        mdp.r[s][a] + f
    });
    plain == shaped
}

/// Random-action episodes through the delay wrapper: the delivered reward of
/// every episode equals the sum of the undelayed rewards.
pub fn delay_conserves(k: usize, episodes: usize, seed: u64) -> bool {
    let mut r = rng(seed);
    for _ in 0..episodes {
        let len = r.gen_range(1..=40);
        let cfg = ForagingConfig {
            max_episode_len: len,
            delay: 0,
        };
        let env_seed = r.gen();
        let actions: Vec<usize> = (0..len).map(|_| r.gen_range(0..4)).collect();
        let mut plain = Foraging::new(cfg.clone());
        let mut delayed = Delayed::new(Foraging::new(cfg), k);
        plain.reset(env_seed);
        delayed.reset(env_seed);
        let (mut a, mut b) = (0.0, 0.0);
        for &act in &actions {
            let x = plain.step(act).unwrap();
            let y = delayed.step(act).unwrap();
            a += x.reward;
            b += y.reward;
            if x.events != y.events || x.done != y.done {
                return false;
            }
            if x.done {
                break;
            }
        }
        if (a - b).abs() > 1e-12 {
            return false;
        }
    }
    true
}

/// Largest relative gap between the contracted outer alignment and the
/// materialized-Jacobian product on a random batch with |theta| <= 50, n <= 5.
pub fn contraction_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let b = r.gen_range(1..=12);
    let p = r.gen_range(1..=50);
    let n = r.gen_range(1..=5);
    let scores: Vec<Vec<f64>> = (0..b).map(|_| normals(&mut r, p)).collect();
    let ext = normals(&mut r, b);
    let evr: Vec<Vec<f64>> = (0..b).map(|_| (0..n).map(|_| r.gen_range(0.0..4.0)).collect()).collect();
    let naive = naive_alignment(&scores, &ext, &evr);
    let batch = MotivationBatch::from_parts(scores, ext, evr).expect("batch");
    let w = normals(&mut r, n);
    let g = batch.outer_grad(&w, &w, 0.0, RegMode::WeightAnchor).expect("outer grad");
    g.alignment
        .iter()
        .zip(&naive)
        .map(|(a, e)| (a - e).abs() / e.abs().max(1.0))
        .fold(0.0, f64::max)
}
