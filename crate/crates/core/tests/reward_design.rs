mod common;

use proptest::prelude::*;
use rand::Rng;

use mbrd::envs::{EventVector, Foraging};
use mbrd::funcapprox::{NetSpec, ParamVector, PolicyNet};
use mbrd::ppo::{collect_rollout, mc_returns, RolloutBuffer, Transition};
use mbrd::reward::{
    alignment_cosine, event_returns, intrinsic_reward, motivation_ex, motivation_in, outer_grad, MotivationBatch,
    RegMode,
};

fn buffer_from(events: &[[u32; 2]], rewards: &[f64], dones: &[bool]) -> RolloutBuffer {
    RolloutBuffer {
        transitions: events
            .iter()
            .zip(rewards)
            .zip(dones)
            .enumerate()
            .map(|(t, ((e, &r), &done))| Transition {
                obs: vec![t as f64 * 0.1, 1.0, -0.5],
                action: t % 2,
                reward: r,
                next_obs: vec![0.0; 3],
                events: EventVector(e.to_vec()),
                done,
                log_prob: 0.0,
                potential: 0.0,
                next_potential: 0.0,
            })
            .collect(),
        finished_returns: Vec::new(),
    }
}

fn toy_policy(seed: u64) -> (PolicyNet, Vec<f64>) {
    let spec = NetSpec::new(3, vec![4], 2).unwrap();
    (PolicyNet::new(spec.clone()).unwrap(), ParamVector::init(&spec, seed).into_values())
}

fn random_batch(seed: u64) -> MotivationBatch {
    let mut r = common::rng(seed);
    let b = r.gen_range(1..=12);
    let p = r.gen_range(1..=50);
    let n = r.gen_range(1..=5);
    let scores = (0..b).map(|_| common::normals(&mut r, p)).collect();
    let ext = common::normals(&mut r, b);
    let evr = (0..b).map(|_| (0..n).map(|_| r.gen_range(0.0..4.0)).collect()).collect();
    MotivationBatch::from_parts(scores, ext, evr).unwrap()
}

#[test]
fn event_return_examples() {
    let buf = buffer_from(&[[1, 0], [0, 1]], &[0.0, 0.0], &[false, true]);
    assert_eq!(event_returns(&buf, 0.5), vec![vec![1.0, 0.5], vec![0.0, 1.0]]);
    let buf = buffer_from(&[[1, 0], [0, 1], [1, 1]], &[0.0; 3], &[false, true, false]);
    assert_eq!(event_returns(&buf, 0.0), vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
    // terminal step's event return is its own event vector
    let g = event_returns(&buf, 0.9);
    assert_eq!(g[1], vec![0.0, 1.0]);
}

#[test]
fn intrinsic_returns_agree_with_event_returns() {
    let mut r = common::rng(5);
    for _ in 0..200 {
        let len = r.gen_range(1..30);
        let events: Vec<[u32; 2]> = (0..len).map(|_| [r.gen_range(0..2), r.gen_range(0..2)]).collect();
        let dones: Vec<bool> = (0..len).map(|_| r.gen_bool(0.15)).collect();
        let buf = buffer_from(&events, &vec![0.0; len], &dones);
        let w = common::normals(&mut r, 2);
        let gamma = r.gen_range(0.0..=1.0);
        let rin: Vec<f64> = buf.transitions.iter().map(|t| intrinsic_reward(&w, &t.events).unwrap()).collect();
        let g = mc_returns(&rin, &dones, gamma);
        for (gt, er) in g.iter().zip(event_returns(&buf, gamma)) {
            let wg: f64 = w.iter().zip(&er).map(|(a, b)| a * b).sum();
            assert!((gt - wg).abs() < 1e-12);
        }
    }
}

#[test]
fn motivation_examples() {
    let (policy, params) = toy_policy(1);
    let buf = buffer_from(&[[0, 0], [1, 0], [0, 1]], &[0.0; 3], &[false, false, true]);
    assert!(motivation_ex(&buf, &policy, &params, 0.9).unwrap().0.iter().all(|&z| z == 0.0));
    assert!(motivation_in(&buf, &policy, &params, &[0.0, 0.0], 0.9)
        .unwrap()
        .0
        .iter()
        .all(|&z| z == 0.0));

    let single = buffer_from(&[[0, 0]], &[2.5], &[true]);
    let (_, g0) = policy.log_prob_grad(&params, &single.transitions[0].obs, 0).unwrap();
    let z = motivation_ex(&single, &policy, &params, 0.9).unwrap();
    for (a, b) in z.0.iter().zip(&g0) {
        assert!((a - 2.5 * b).abs() < 1e-12);
    }
    assert!(motivation_ex(&RolloutBuffer::default(), &policy, &params, 0.9).is_err());
}

#[test]
fn motivation_matches_weighted_log_likelihood_gradient() {
    let (policy, params) = toy_policy(2);
    let buf = buffer_from(&[[1, 0], [0, 0], [0, 1], [1, 1]], &[0.3, -1.0, 0.0, 2.0], &[false, true, false, false]);
    let g = mc_returns(&buf.rewards(), &buf.dones(), 0.95);
    let z = motivation_ex(&buf, &policy, &params, 0.95).unwrap();
    let fd = common::central_diff(&params, 1e-6, |p| {
        buf.transitions
            .iter()
            .zip(&g)
            .map(|(t, gt)| gt * policy.log_prob(p, &t.obs, t.action).unwrap())
            .sum::<f64>()
            / buf.len() as f64
    });
    assert!(common::max_rel_err(&fd, &z.0) < 1e-4);
}

#[test]
fn intrinsic_motivation_is_extrinsic_motivation_of_substituted_rewards() {
    let (policy, params) = toy_policy(3);
    let events = [[1, 0], [0, 0], [0, 1], [1, 1], [0, 1]];
    let dones = [false, false, true, false, false];
    let w = [0.7, -0.4];
    let buf = buffer_from(&events, &[0.0; 5], &dones);
    let mut sub = buf.clone();
    for t in &mut sub.transitions {
        t.reward = intrinsic_reward(&w, &t.events).unwrap();
    }
    let a = motivation_in(&buf, &policy, &params, &w, 0.99).unwrap();
    let b = motivation_ex(&sub, &policy, &params, 0.99).unwrap();
    for (x, y) in a.0.iter().zip(&b.0) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn contraction_equals_materialized_jacobian() {
    let mut r = common::rng(77);
    for _ in 0..100 {
        let b = r.gen_range(1..=12);
        let p = r.gen_range(1..=50);
        let n = r.gen_range(1..=5);
        let scores: Vec<Vec<f64>> = (0..b).map(|_| common::normals(&mut r, p)).collect();
        let ext = common::normals(&mut r, b);
        let evr: Vec<Vec<f64>> = (0..b).map(|_| (0..n).map(|_| r.gen_range(0.0..4.0)).collect()).collect();
        let naive = common::naive_alignment(&scores, &ext, &evr);
        let batch = MotivationBatch::from_parts(scores, ext, evr).unwrap();
        let w = common::normals(&mut r, n);
        let g = batch.outer_grad(&w, &w, 0.0, RegMode::WeightAnchor).unwrap();
        for (a, e) in g.alignment.iter().zip(&naive) {
            assert!((a - e).abs() < 1e-10 * e.abs().max(1.0), "{a} vs {e}");
        }
        assert_eq!(g.grad, g.alignment);
    }
}

#[test]
fn outer_grad_zero_and_anchor_cases() {
    let (policy, params) = toy_policy(4);
    let buf = buffer_from(&[[1, 0], [0, 1]], &[0.0, 0.0], &[false, true]);
    let g = outer_grad(&buf, &policy, &params, &[0.3, 0.2], &[0.1, 0.1], 0.9, 0.0, RegMode::WeightAnchor).unwrap();
    assert!(g.grad.iter().all(|&x| x == 0.0));

    let buf = buffer_from(&[[1, 0], [0, 1]], &[1.0, -2.0], &[false, true]);
    let g = outer_grad(&buf, &policy, &params, &[0.1, 0.1], &[0.1, 0.1], 0.9, 0.5, RegMode::WeightAnchor).unwrap();
    assert!(g.regularizer.iter().all(|&x| x == 0.0));
    let g = outer_grad(&buf, &policy, &params, &[0.3, 0.1], &[0.1, 0.1], 0.9, 0.5, RegMode::WeightAnchor).unwrap();
    assert!((g.regularizer[0] - 0.5 * 2.0 * 0.2).abs() < 1e-12);
    // z_in = 0 in z-norm mode gives a zero regularizer
    let g = outer_grad(&buf, &policy, &params, &[0.0, 0.0], &[0.1, 0.1], 0.9, 0.5, RegMode::ZNorm).unwrap();
    assert!(g.regularizer.iter().all(|&x| x == 0.0));
    assert!(outer_grad(&buf, &policy, &params, &[0.0], &[0.1], 0.9, 0.5, RegMode::ZNorm).is_err());
}

#[test]
fn outer_gradient_matches_objective_finite_differences() {
    for seed in 0..50 {
        let batch = random_batch(300 + seed);
        let mut r = common::rng(seed);
        let n = batch.num_events();
        let w = common::normals(&mut r, n);
        let w0 = common::normals(&mut r, n);
        for mode in [RegMode::WeightAnchor, RegMode::ZNorm] {
            let g = batch.outer_grad(&w, &w0, 0.3, mode).unwrap();
            let fd = common::central_diff(&w, 1e-6, |x| batch.objective(x, &w0, 0.3, mode).unwrap());
            for (a, b) in g.grad.iter().zip(&fd) {
                assert!((a - b).abs() < 1e-6 * b.abs().max(1.0), "{mode}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn small_ascent_step_does_not_decrease_objective() {
    for seed in 0..100 {
        let batch = random_batch(seed);
        let mut r = common::rng(1000 + seed);
        let n = batch.num_events();
        let w = common::normals(&mut r, n);
        let w0 = vec![0.1; n];
        for mode in [RegMode::WeightAnchor, RegMode::ZNorm] {
            let g = batch.outer_grad(&w, &w0, 0.05, mode).unwrap();
            let gn = g.grad.iter().map(|x| x * x).sum::<f64>().sqrt();
            if gn == 0.0 {
                continue;
            }
            let eta = 1e-6 / gn;
            let w2: Vec<f64> = w.iter().zip(&g.grad).map(|(a, b)| a + eta * b).collect();
            let before = batch.objective(&w, &w0, 0.05, mode).unwrap();
            let after = batch.objective(&w2, &w0, 0.05, mode).unwrap();
            assert!(after >= before - 1e-15 * before.abs().max(1.0), "seed {seed} {mode}: {before} -> {after}");
        }
    }
}

#[test]
fn unregularized_step_does_not_decrease_alignment() {
    for seed in 0..100 {
        let batch = random_batch(500 + seed);
        let mut r = common::rng(seed);
        let w = common::normals(&mut r, batch.num_events());
        let g = batch.outer_grad(&w, &w, 0.0, RegMode::WeightAnchor).unwrap();
        let gn = g.grad.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        let w2: Vec<f64> = w.iter().zip(&g.grad).map(|(a, b)| a + 1e-6 / gn * b).collect();
        let z_ex = batch.z_ex();
        let before = z_ex.dot(&batch.z_in(&w).unwrap());
        let after = z_ex.dot(&batch.z_in(&w2).unwrap());
        assert!(after >= before - 1e-15 * before.abs().max(1.0));
    }
}

#[test]
fn extrinsic_scale_leaves_cosine_unchanged() {
    let env = Foraging::default();
    let spec = NetSpec::new(75, vec![8, 8], 4).unwrap();
    let policy = PolicyNet::new(spec.clone()).unwrap();
    let params = ParamVector::init(&spec, 8).into_values();
    let buf = collect_rollout(env, &policy, &params, 400, 2).unwrap();
    let w = [0.4, -0.1];
    let z_in = motivation_in(&buf, &policy, &params, &w, 0.999).unwrap();
    let z_ex = motivation_ex(&buf, &policy, &params, 0.999).unwrap();
    for c in [0.01, 3.0, 250.0] {
        let mut scaled = buf.clone();
        scaled.transitions.iter_mut().for_each(|t| t.reward *= c);
        let z_c = motivation_ex(&scaled, &policy, &params, 0.999).unwrap();
        for (a, b) in z_c.0.iter().zip(&z_ex.0) {
            assert!((a - c * b).abs() < 1e-10 * (c * b).abs().max(1.0));
        }
        let cos = alignment_cosine(&z_c.0, &z_in.0);
        assert!((cos - alignment_cosine(&z_ex.0, &z_in.0)).abs() < 1e-10);
    }
}

proptest! {
    #[test]
    fn intrinsic_motivation_is_linear_in_w(
        seed in 0u64..1000,
        w1 in prop::collection::vec(-3.0f64..3.0, 3),
        w2 in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let mut r = common::rng(seed);
        let b = 8;
        let scores = (0..b).map(|_| common::normals(&mut r, 20)).collect();
        let ext = common::normals(&mut r, b);
        let evr = (0..b).map(|_| (0..3).map(|_| r.gen_range(0.0..3.0)).collect()).collect();
        let batch = MotivationBatch::from_parts(scores, ext, evr).unwrap();
        let sum: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| a + b).collect();
        let lhs = batch.z_in(&sum).unwrap();
        let a = batch.z_in(&w1).unwrap();
        let c = batch.z_in(&w2).unwrap();
        for i in 0..lhs.0.len() {
            prop_assert!((lhs.0[i] - a.0[i] - c.0[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn intrinsic_reward_is_linear(
        w1 in prop::collection::vec(-5.0f64..5.0, 4),
        w2 in prop::collection::vec(-5.0f64..5.0, 4),
        e in prop::collection::vec(0u32..2, 4),
    ) {
        let ev = EventVector(e);
        let sum: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| a + b).collect();
        let lhs = intrinsic_reward(&sum, &ev).unwrap();
        let rhs = intrinsic_reward(&w1, &ev).unwrap() + intrinsic_reward(&w2, &ev).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }
}
