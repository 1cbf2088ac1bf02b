use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::envs::{make_env, Environment};
use crate::error::Result;
use crate::funcapprox::{PolicyNet, Trace};
use crate::ppo::{ppo_update, ActorCritic, Collector, RewardSource};
use crate::reward::{pbrs_terms, EventCounts, IntrinsicWeights, MotivationBatch};

use super::config::{Method, RunConfig};
use super::record::{EvalPoint, OuterRow, RecordWriter, RunRecord, UpdateRow};

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Episode seeds for evaluation point `index`. They depend only on the run
/// seed, so every method is scored on the same layouts.
pub fn eval_seeds(run_seed: u64, index: u64, episodes: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    rng.set_stream(index + 1);
    (0..episodes).map(|_| rng.gen()).collect()
}

/// Cumulative extrinsic reward of one greedy episode.
pub fn greedy_episode(env: &mut dyn Environment, policy: &PolicyNet, params: &[f64], seed: u64) -> Result<f64> {
    let mut trace = Trace::default();
    let mut obs = env.reset(seed);
    let mut total = 0.0;
    loop {
        let a = policy.greedy_action(params, &obs, &mut trace);
        let step = env.step(a)?;
        total += step.reward;
        if step.done {
            return Ok(total);
        }
        obs = step.obs;
    }
}

/// Greedy evaluation over the given episode seeds.
pub fn evaluate(env: &mut dyn Environment, policy: &PolicyNet, params: &[f64], seeds: &[u64]) -> Result<(f64, f64)> {
    policy.net().check_params(params)?;
    let returns = seeds
        .iter()
        .map(|&s| greedy_episode(env, policy, params, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_std(&returns))
}

/// Runs one configuration to completion. Files are streamed to the run
/// directory when `out_dir` is set. A numerical failure truncates the record
/// and sets `aborted`; configuration and I/O problems are returned as errors.
pub fn run(config: &RunConfig) -> Result<RunRecord> {
    config.validate()?;
    let env_cfg = config.env_config();
    let env = make_env(config.domain, &env_cfg);
    let mut eval_env = make_env(config.domain, &env_cfg);
    let event_names = env.event_names();
    let n_events = env.num_events();
    let ppo_cfg = config.ppo_config();

    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let mut agent = ActorCritic::new(
        env.obs_dim(),
        env.num_actions(),
        &config.policy_hidden,
        &config.value_hidden,
        &ppo_cfg,
        master.gen(),
    )?;
    let mut collector = Collector::new(env, master.gen());
    let mut update_rng = ChaCha8Rng::seed_from_u64(master.gen());

    let mut weights = (config.method == Method::Mbrd).then(|| IntrinsicWeights::new(n_events, config.w_init, config.outer_lr));
    let mut counts = (config.method == Method::Cb).then(|| EventCounts::new(n_events));

    let mut writer = match config.run_dir() {
        Some(dir) => Some(RecordWriter::create(&dir, config, &event_names, weights.as_ref().map(|w| w.len()))?),
        None => None,
    };
    let mut record = RunRecord {
        config: config.clone(),
        event_names,
        evals: Vec::new(),
        updates: Vec::new(),
        policy_params: Vec::new(),
        aborted: None,
    };

    let mut step = 0usize;
    let mut eval_index = 0u64;
    let mut next_eval = 0usize;
    let mut update = 0usize;
    let result: Result<()> = (|| {
        loop {
            if step >= next_eval || step >= config.total_steps {
                let seeds = eval_seeds(config.seed, eval_index, config.eval_episodes);
                let (mean, std) = evaluate(eval_env.as_mut(), &agent.policy, agent.policy_params.values(), &seeds)?;
                let point = EvalPoint {
                    step,
                    mean_return: mean,
                    std_return: std,
                };
                if let Some(w) = writer.as_mut() {
                    w.eval(&point)?;
                }
                record.evals.push(point);
                eval_index += 1;
                while next_eval <= step {
                    next_eval += config.eval_interval;
                }
            }
            if step >= config.total_steps {
                return Ok(());
            }

            let k = config.update_period.min(config.total_steps - step);
            let buffer = collector.collect(&agent.policy, agent.policy_params.values(), k)?;
            step += k;
            update += 1;

            // Motivation vectors are taken under the policy that generated the batch.
            let motivation = match &weights {
                Some(_) => Some(MotivationBatch::from_buffer(
                    &buffer,
                    &agent.policy,
                    agent.policy_params.values(),
                    config.gamma,
                )?),
                None => None,
            };

            let extra: Vec<f64>;
            let source = match config.method {
                Method::Mbrd => RewardSource::Intrinsic(&weights.as_ref().expect("mbrd weights").w),
                Method::Ppo => RewardSource::Extrinsic,
                Method::Cb => {
                    extra = counts.as_mut().expect("cb counts").bonuses(&buffer);
                    RewardSource::ExtrinsicPlus(&extra)
                }
                Method::Pbrs => {
                    extra = pbrs_terms(&buffer, config.gamma);
                    RewardSource::ExtrinsicPlus(&extra)
                }
            };
            let stats = ppo_update(&mut agent, &buffer, source, &ppo_cfg, &mut update_rng)?;

            let outer = match (weights.as_mut(), motivation) {
                (Some(w), Some(batch)) => {
                    let row = match batch.outer_grad(&w.w, &w.w_init, config.beta, config.reg_mode) {
                        Ok(g) => {
                            let applied = w.update(&g.grad);
                            OuterRow {
                                w: w.w.clone(),
                                cosine: g.cosine,
                                z_ex_norm: g.z_ex_norm,
                                z_in_norm: g.z_in_norm,
                                reg_norm: crate::reward::norm(&g.regularizer),
                                objective: g.objective,
                                applied,
                            }
                        }
                        Err(e) => {
                            warn!("update {update}: outer step skipped: {e}");
                            OuterRow {
                                w: w.w.clone(),
                                cosine: f64::NAN,
                                z_ex_norm: f64::NAN,
                                z_in_norm: f64::NAN,
                                reg_norm: f64::NAN,
                                objective: f64::NAN,
                                applied: false,
                            }
                        }
                    };
                    Some(row)
                }
                _ => None,
            };

            let train_return = if buffer.finished_returns.is_empty() {
                f64::NAN
            } else {
                mean_std(&buffer.finished_returns).0
            };
            let row = UpdateRow {
                update,
                step,
                train_return,
                surrogate: stats.surrogate,
                value_loss: stats.value_loss,
                entropy: stats.entropy,
                approx_kl: stats.approx_kl,
                outer,
            };
            if let Some(w) = writer.as_mut() {
                w.update(&row)?;
            }
            record.updates.push(row);
        }
    })();

    if let Err(e) = result {
        match e {
            crate::Error::Io(_) => return Err(e),
            other => {
                warn!(
                    "{}/{}/seed {}: run aborted at step {step}: {other}",
                    config.domain, config.method, config.seed
                );
                record.aborted = Some(other.to_string());
            }
        }
    }
    record.policy_params = agent.policy_params.values().to_vec();
    if let Some(w) = writer {
        w.finish(&record.policy_params, record.aborted.as_deref())?;
    }
    info!(
        "{}/{}/seed {}: finished at step {step}, final return {:.3}",
        config.domain,
        config.method,
        config.seed,
        record.final_return()
    );
    Ok(record)
}

