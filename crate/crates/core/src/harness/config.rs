use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::envs::{Domain, EnvConfig};
use crate::error::{Error, Result};
use crate::ppo::PpoConfig;
use crate::reward::RegMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Learned intrinsic reward aligned with the extrinsic motivation.
    Mbrd,
    /// Extrinsic reward only.
    Ppo,
    /// Extrinsic reward plus a count-based event bonus.
    Cb,
    /// Extrinsic reward plus potential-based shaping.
    Pbrs,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mbrd, Method::Ppo, Method::Cb, Method::Pbrs];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mbrd => "mbrd",
            Method::Ppo => "ppo",
            Method::Cb => "cb",
            Method::Pbrs => "pbrs",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mbrd" => Ok(Method::Mbrd),
            "ppo" => Ok(Method::Ppo),
            "cb" => Ok(Method::Cb),
            "pbrs" => Ok(Method::Pbrs),
            // Meta-gradient reward learning through the full PPO update is a
            // separate method and is deliberately not provided here.
            "lirpg" => Err(Error::InvalidConfig(
                "the lirpg baseline is not part of this project".into(),
            )),
            other => Err(Error::Parse(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Paper,
    /// A quarter of the full step budget.
    Desk,
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" => Ok(Scale::Paper),
            "desk" => Ok(Scale::Desk),
            other => Err(Error::Parse(format!("unknown scale `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: Domain,
    pub method: Method,
    pub total_steps: usize,
    pub max_episode_len: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub beta: f64,
    pub reg_mode: RegMode,
    pub policy_hidden: Vec<usize>,
    pub value_hidden: Vec<usize>,
    pub update_period: usize,
    pub epochs: usize,
    /// 0 means full-batch epochs.
    pub minibatch: usize,
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub policy_lr: f64,
    pub value_lr: f64,
    pub outer_lr: f64,
    pub w_init: f64,
    pub eval_interval: usize,
    pub eval_episodes: usize,
    pub delay: usize,
    pub thirst_period: usize,
    pub per_step_cost: f64,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(domain: Domain, method: Method) -> Self {
        let grid = domain.is_grid_world();
        let env = EnvConfig::for_domain(domain);
        Self {
            domain,
            method,
            total_steps: match domain {
                Domain::HungryThirsty => 4_000_000,
                Domain::Foraging | Domain::FightMonster => 2_000_000,
                Domain::SynthHopper | Domain::SynthSwimmer => 3_000_000,
            },
            max_episode_len: env.max_episode_len,
            gamma: if grid { 0.999 } else { 0.99 },
            lambda: 0.95,
            beta: if domain == Domain::HungryThirsty { 1e-2 } else { 1e-3 },
            reg_mode: RegMode::WeightAnchor,
            policy_hidden: if grid { vec![8, 8] } else { vec![64, 64] },
            value_hidden: if grid { vec![32, 32] } else { vec![64, 64] },
            update_period: if grid { 1024 } else { 20_000 },
            epochs: if grid { 50 } else { 5 },
            minibatch: if grid { 0 } else { 1024 },
            clip: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.0,
            policy_lr: 3e-4,
            value_lr: 1e-3,
            outer_lr: 1e-3,
            w_init: 0.1,
            eval_interval: 10_240,
            eval_episodes: 20,
            delay: env.delay,
            thirst_period: env.thirst_period,
            per_step_cost: env.per_step_cost,
            seed: 0,
            out_dir: None,
        }
    }

    pub fn with_scale(mut self, scale: Scale) -> Self {
        if scale == Scale::Desk {
            self.total_steps /= 4;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.total_steps == 0 || self.update_period == 0 || self.max_episode_len == 0 {
            return bad("total_steps, update_period and max_episode_len must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("gamma {} and lambda {} must lie in [0, 1]", self.gamma, self.lambda));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad(format!("beta must be a finite non-negative number, got {}", self.beta));
        }
        if self.eval_interval == 0 || self.eval_episodes == 0 {
            return bad("eval_interval and eval_episodes must be positive".into());
        }
        if self.policy_hidden.contains(&0) || self.value_hidden.contains(&0) {
            return bad("hidden layer widths must be positive".into());
        }
        Ok(())
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            max_episode_len: self.max_episode_len,
            delay: self.delay,
            thirst_period: self.thirst_period,
            per_step_cost: self.per_step_cost,
        }
    }

    pub fn ppo_config(&self) -> PpoConfig {
        PpoConfig {
            epochs: self.epochs,
            clip: self.clip,
            value_coef: self.value_coef,
            entropy_coef: self.entropy_coef,
            policy_lr: self.policy_lr,
            value_lr: self.value_lr,
            gamma: self.gamma,
            lambda: self.lambda,
            minibatch: (self.minibatch > 0).then_some(self.minibatch),
        }
    }

    /// `<out>/<domain>/<method>/<seed>`
    pub fn run_dir(&self) -> Option<PathBuf> {
        self.out_dir.as_ref().map(|o| {
            o.join(self.domain.as_str())
                .join(self.method.as_str())
                .join(self.seed.to_string())
        })
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad value `{v}` for `{key}`")))
        }
        fn widths(key: &str, v: &str) -> Result<Vec<usize>> {
            if v.trim().is_empty() {
                return Ok(Vec::new());
            }
            v.split(',').map(|x| num(key, x)).collect()
        }
        let v = value.trim();
        match key.trim() {
            "domain" => self.domain = v.parse()?,
            "method" => self.method = v.parse()?,
            "total_steps" | "steps" => self.total_steps = num(key, v)?,
            "max_episode_len" | "max_ep_len" => self.max_episode_len = num(key, v)?,
            "gamma" => self.gamma = num(key, v)?,
            "lambda" => self.lambda = num(key, v)?,
            "beta" => self.beta = num(key, v)?,
            "reg_mode" => self.reg_mode = v.parse()?,
            "policy_hidden" => self.policy_hidden = widths(key, v)?,
            "value_hidden" => self.value_hidden = widths(key, v)?,
            "update_period" => self.update_period = num(key, v)?,
            "epochs" => self.epochs = num(key, v)?,
            "minibatch" => self.minibatch = num(key, v)?,
            "clip" => self.clip = num(key, v)?,
            "value_coef" => self.value_coef = num(key, v)?,
            "entropy_coef" => self.entropy_coef = num(key, v)?,
            "policy_lr" => self.policy_lr = num(key, v)?,
            "value_lr" => self.value_lr = num(key, v)?,
            "outer_lr" => self.outer_lr = num(key, v)?,
            "w_init" => self.w_init = num(key, v)?,
            "eval_interval" => self.eval_interval = num(key, v)?,
            "eval_episodes" => self.eval_episodes = num(key, v)?,
            "delay" => self.delay = num(key, v)?,
            "thirst_period" => self.thirst_period = num(key, v)?,
            "per_step_cost" => self.per_step_cost = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "out" | "out_dir" => self.out_dir = Some(PathBuf::from(v)),
            other => return Err(Error::Parse(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Parses a flat `key=value` file. `domain` and `method` select the
    /// defaults; every other key overrides them regardless of order.
    pub fn from_kv(text: &str) -> Result<Self> {
        let pairs = parse_kv(text)?;
        let lookup = |k: &str| pairs.iter().rev().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
        let domain = lookup("domain").map_or(Ok(Domain::Foraging), str::parse)?;
        let method = lookup("method").map_or(Ok(Method::Mbrd), str::parse)?;
        let mut cfg = Self::new(domain, method);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn to_kv(&self) -> String {
        let join = |xs: &[usize]| xs.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        };
        put("domain", self.domain.to_string());
        put("method", self.method.to_string());
        put("total_steps", self.total_steps.to_string());
        put("max_episode_len", self.max_episode_len.to_string());
        put("gamma", self.gamma.to_string());
        put("lambda", self.lambda.to_string());
        put("beta", self.beta.to_string());
        put("reg_mode", self.reg_mode.to_string());
        put("policy_hidden", join(&self.policy_hidden));
        put("value_hidden", join(&self.value_hidden));
        put("update_period", self.update_period.to_string());
        put("epochs", self.epochs.to_string());
        put("minibatch", self.minibatch.to_string());
        put("clip", self.clip.to_string());
        put("value_coef", self.value_coef.to_string());
        put("entropy_coef", self.entropy_coef.to_string());
        put("policy_lr", self.policy_lr.to_string());
        put("value_lr", self.value_lr.to_string());
        put("outer_lr", self.outer_lr.to_string());
        put("w_init", self.w_init.to_string());
        put("eval_interval", self.eval_interval.to_string());
        put("eval_episodes", self.eval_episodes.to_string());
        put("delay", self.delay.to_string());
        put("thirst_period", self.thirst_period.to_string());
        put("per_step_cost", self.per_step_cost.to_string());
        put("seed", self.seed.to_string());
        s
    }
}

/// `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{l}`")))
        })
        .collect()
}
