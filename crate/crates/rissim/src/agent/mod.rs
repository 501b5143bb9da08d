//! From-scratch PPO actor-critic over the discrete scheduling catalog.

mod net;
mod ppo;

pub use net::{log_softmax, softmax, AdamState, ForwardCache, Layer, Mlp, MlpGrads};
pub use ppo::{
    advantage_estimates, backward, build_batch, greedy_action, policy_forward, policy_log_probs,
    ppo_loss, rollout, sample_action, train, value_forward, AgentError, Batch, CurvePoint,
    EpisodeStats, LossParts, PolicyParams, TrainConfig, Trainer, Trajectory, HIDDEN_WIDTH,
};
