//! Small MLP function approximators over flat parameter vectors: categorical
//! policy, state-value head, and an adaptive first-order optimizer.

mod adam;
mod heads;
mod mlp;

pub use adam::Adam;
pub use heads::{softmax_into, PolicyNet, ValueNet};
pub use mlp::{Mlp, NetSpec, ParamSlice, ParamVector, Trace};
