//! Inner optimization: rollout collection, return and advantage estimation,
//! and the clipped-surrogate policy update against a selectable reward source.

mod buffer;
mod returns;
mod update;

pub use buffer::{collect_rollout, sample_categorical, Collector, RolloutBuffer, Transition};
pub use returns::{gae, mc_returns, normalize, AdvantageBatch, RewardTag};
pub use update::{
    advantages_for, ppo_update, surrogate, value_loss, ActorCritic, PpoConfig, RewardSource, SurrogateEval,
    UpdateStats,
};
