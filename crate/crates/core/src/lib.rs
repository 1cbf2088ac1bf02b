//! Motivation-based reward design.
//!
//! An inner PPO learner is trained on a linear intrinsic reward `w . rho` over
//! per-step event counts. After every policy update the event weights `w` are
//! moved by one ascent step on the alignment objective
//! `z_ex . z_in - beta * reg`, where `z_ex` and `z_in` are the Monte-Carlo
//! policy-gradient vectors ("motivations") of the extrinsic and intrinsic returns.

pub mod error;
pub mod envs;
pub mod funcapprox;
pub mod harness;
pub mod ppo;
pub mod reward;

pub use error::{Error, Result};
