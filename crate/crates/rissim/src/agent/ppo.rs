//! Clipped-surrogate PPO over the discrete action catalog.
//!
//! Actor and critic are separate three-affine-layer networks (tanh hidden,
//! softmax on the actor output). Returns are plain discounted reward-to-go;
//! advantages subtract the critic value recorded at sampling time and are
//! normalized per batch. Gradients are fully analytic and validated against
//! central finite differences.

use super::net::{log_softmax, softmax, AdamState, Mlp, MlpGrads};
use crate::env::{discounted_return, Environment, EnvError};
use crate::parallel::{self, Parallelism};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("checkpoint io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format error: {0}")]
    Format(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// PPO hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Reward discount.
    pub gamma: f64,
    /// Probability-ratio clip width.
    pub clip_epsilon: f64,
    pub episodes_per_update: usize,
    pub update_epochs: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub normalize_advantages: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    /// Experiment defaults: learning rate 0.002, discount 0.08, clip 0.02;
    /// batching, entropy bonus 0.01, value coefficient 0.5 and advantage
    /// normalization are artifact choices.
    fn default() -> Self {
        Self {
            learning_rate: 0.002,
            gamma: 0.08,
            clip_epsilon: 0.02,
            episodes_per_update: 8,
            update_epochs: 4,
            entropy_coef: 0.01,
            value_coef: 0.5,
            normalize_advantages: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Companion configuration for the sensitivity study: a conventional
    /// discount and clip width.
    pub fn wide_discount() -> Self {
        Self {
            gamma: 0.98,
            clip_epsilon: 0.2,
            ..Self::default()
        }
    }
}

pub const HIDDEN_WIDTH: usize = 64;

/// Actor-critic parameters plus the fixed per-feature input scaling.
///
/// State features arrive in SI units (meters, m/s, bps/Hz); the scaler
/// divides each feature by a config-derived constant before layer 1 so that
/// tanh units start in their linear range. It is part of the checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyParams {
    pub actor: Mlp,
    pub critic: Mlp,
    pub obs_scale: Vec<f64>,
}

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    params: PolicyParams,
}

impl PolicyParams {
    /// Fresh seeded parameters: input -> 64 -> 64 -> U actor and
    /// input -> 64 -> 64 -> 1 critic.
    pub fn new(input_dim: usize, action_dim: usize, obs_scale: Vec<f64>, seed: u64) -> Self {
        assert_eq!(obs_scale.len(), input_dim, "one scale per feature");
        let mut rng_a = ChaCha8Rng::seed_from_u64(parallel::derive_seed(seed, 10, 0));
        let mut rng_c = ChaCha8Rng::seed_from_u64(parallel::derive_seed(seed, 11, 0));
        Self {
            actor: Mlp::init(&[input_dim, HIDDEN_WIDTH, HIDDEN_WIDTH, action_dim], &mut rng_a),
            critic: Mlp::init(&[input_dim, HIDDEN_WIDTH, HIDDEN_WIDTH, 1], &mut rng_c),
            obs_scale,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn scaled(&self, state: &[f64]) -> Vec<f64> {
        state
            .iter()
            .zip(self.obs_scale.iter())
            .map(|(x, s)| x / s)
            .collect()
    }

    pub fn save<W: Write>(&self, writer: W) -> Result<(), AgentError> {
        serde_json::to_writer(
            writer,
            &CheckpointFile {
                version: CHECKPOINT_VERSION,
                params: self.clone(),
            },
        )
        .map_err(|e| AgentError::Format(e.to_string()))
    }

    pub fn load<R: Read>(reader: R) -> Result<Self, AgentError> {
        let file: CheckpointFile =
            serde_json::from_reader(reader).map_err(|e| AgentError::Format(e.to_string()))?;
        if file.version != CHECKPOINT_VERSION {
            return Err(AgentError::Format(format!(
                "unsupported checkpoint version {}",
                file.version
            )));
        }
        Ok(file.params)
    }

    pub fn save_to_path(&self, path: &Path) -> Result<(), AgentError> {
        self.save(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load_from_path(path: &Path) -> Result<Self, AgentError> {
        Self::load(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Action distribution for a state: strictly positive, sums to one.
pub fn policy_forward(params: &PolicyParams, state: &[f64]) -> Result<Vec<f64>, AgentError> {
    if state.len() != params.input_dim() {
        return Err(AgentError::Shape(format!(
            "state width {} != network input {}",
            state.len(),
            params.input_dim()
        )));
    }
    let logits = params.actor.forward(&params.scaled(state));
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(AgentError::NonFinite("actor logits".into()));
    }
    Ok(softmax(&logits))
}

/// Log action distribution (log-softmax of the actor logits).
pub fn policy_log_probs(params: &PolicyParams, state: &[f64]) -> Result<Vec<f64>, AgentError> {
    if state.len() != params.input_dim() {
        return Err(AgentError::Shape(format!(
            "state width {} != network input {}",
            state.len(),
            params.input_dim()
        )));
    }
    let logits = params.actor.forward(&params.scaled(state));
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(AgentError::NonFinite("actor logits".into()));
    }
    Ok(log_softmax(&logits))
}

/// Critic value estimate for a state.
pub fn value_forward(params: &PolicyParams, state: &[f64]) -> Result<f64, AgentError> {
    if state.len() != params.input_dim() {
        return Err(AgentError::Shape(format!(
            "state width {} != network input {}",
            state.len(),
            params.input_dim()
        )));
    }
    let v = params.critic.forward(&params.scaled(state))[0];
    if !v.is_finite() {
        return Err(AgentError::NonFinite("critic value".into()));
    }
    Ok(v)
}

/// Greedy action: argmax of the policy distribution, lowest index on ties.
pub fn greedy_action(params: &PolicyParams, state: &[f64]) -> Result<usize, AgentError> {
    let probs = policy_forward(params, state)?;
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Samples an action index from the distribution via one uniform draw.
pub fn sample_action<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Per-slot records of one episode under the acting policy.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// End-of-episode summary used for learning curves.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeStats {
    pub discounted_return: f64,
    pub min_avg_bitrate: Option<f64>,
}

/// Runs one episode with the sampling policy.
pub fn rollout<E: Environment>(
    params: &PolicyParams,
    env: &mut E,
    gamma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Trajectory, EpisodeStats), AgentError> {
    let mut traj = Trajectory::default();
    while !env.is_done() {
        let state = env.observe();
        let log_probs = policy_log_probs(params, &state)?;
        let probs: Vec<f64> = log_probs.iter().map(|&l| l.exp()).collect();
        let action = sample_action(&probs, rng);
        let value = value_forward(params, &state)?;
        let (reward, _done) = env.step_action(action)?;
        traj.states.push(state);
        traj.actions.push(action);
        traj.rewards.push(reward);
        traj.log_probs.push(log_probs[action]);
        traj.values.push(value);
    }
    let stats = EpisodeStats {
        discounted_return: discounted_return(&traj.rewards, gamma),
        min_avg_bitrate: env.metric_min_avg_bitrate(),
    };
    Ok((traj, stats))
}

/// Discounted rewards-to-go minus the recorded value estimates.
/// Returns (returns, raw advantages); batch normalization happens later.
pub fn advantage_estimates(traj: &Trajectory, gamma: f64) -> (Vec<f64>, Vec<f64>) {
    let n = traj.len();
    let mut returns = vec![0.0; n];
    let mut acc = 0.0;
    for i in (0..n).rev() {
        acc = traj.rewards[i] + gamma * acc;
        returns[i] = acc;
    }
    let advantages = returns
        .iter()
        .zip(traj.values.iter())
        .map(|(r, v)| r - v)
        .collect();
    (returns, advantages)
}

/// Flattened update batch. Advantages are already normalized when the
/// config asks for it, so the loss treats them as constants.
#[derive(Debug, Clone, Default)]
pub struct Batch {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub old_log_probs: Vec<f64>,
    pub returns: Vec<f64>,
    pub advantages: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Concatenates trajectories in episode order and prepares advantages.
pub fn build_batch(trajectories: &[Trajectory], cfg: &TrainConfig) -> Batch {
    let mut batch = Batch::default();
    for traj in trajectories {
        let (returns, advantages) = advantage_estimates(traj, cfg.gamma);
        batch.states.extend(traj.states.iter().cloned());
        batch.actions.extend_from_slice(&traj.actions);
        batch.old_log_probs.extend_from_slice(&traj.log_probs);
        batch.returns.extend_from_slice(&returns);
        batch.advantages.extend_from_slice(&advantages);
    }
    if cfg.normalize_advantages && batch.len() > 1 {
        let n = batch.len() as f64;
        let mean = batch.advantages.iter().sum::<f64>() / n;
        let var = batch
            .advantages
            .iter()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / n;
        let std = var.sqrt().max(1e-8);
        for a in batch.advantages.iter_mut() {
            *a = (*a - mean) / std;
        }
    }
    batch
}

/// Loss components; `total` is what the optimizer descends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
}

/// Clipped-surrogate loss over a batch:
/// mean(-min(ratio * adv, clip(ratio) * adv))
///   + value_coef * mean((V - return)^2) - entropy_coef * mean(H).
pub fn ppo_loss(
    params: &PolicyParams,
    batch: &Batch,
    cfg: &TrainConfig,
) -> Result<LossParts, AgentError> {
    let n = batch.len();
    if n == 0 {
        return Err(AgentError::Shape("empty batch".into()));
    }
    let mut policy_sum = 0.0;
    let mut value_sum = 0.0;
    let mut entropy_sum = 0.0;
    for i in 0..n {
        let log_probs = policy_log_probs(params, &batch.states[i])?;
        let new_logp = log_probs[batch.actions[i]];
        let ratio = (new_logp - batch.old_log_probs[i]).exp();
        let adv = batch.advantages[i];
        let clipped = ratio.clamp(1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
        policy_sum += -(ratio * adv).min(clipped * adv);
        entropy_sum += -log_probs.iter().map(|&l| l.exp() * l).sum::<f64>();
        let v = value_forward(params, &batch.states[i])?;
        let err = v - batch.returns[i];
        value_sum += err * err;
    }
    let policy = policy_sum / n as f64;
    let value = cfg.value_coef * value_sum / n as f64;
    let entropy = entropy_sum / n as f64;
    let total = policy + value - cfg.entropy_coef * entropy;
    if !total.is_finite() {
        return Err(AgentError::NonFinite("loss".into()));
    }
    Ok(LossParts {
        policy,
        value,
        entropy,
        total,
    })
}

/// Analytic gradients of [`ppo_loss`] for every actor and critic parameter.
pub fn backward(
    params: &PolicyParams,
    batch: &Batch,
    cfg: &TrainConfig,
) -> Result<(MlpGrads, MlpGrads, LossParts), AgentError> {
    let n = batch.len();
    if n == 0 {
        return Err(AgentError::Shape("empty batch".into()));
    }
    let inv_n = 1.0 / n as f64;
    let mut actor_grads = MlpGrads::zeros_like(&params.actor);
    let mut critic_grads = MlpGrads::zeros_like(&params.critic);
    let mut policy_sum = 0.0;
    let mut value_sum = 0.0;
    let mut entropy_sum = 0.0;

    for i in 0..n {
        let scaled = params.scaled(&batch.states[i]);
        let cache = params.actor.forward_cached(&scaled);
        let logits = cache.output();
        if logits.iter().any(|l| !l.is_finite()) {
            return Err(AgentError::NonFinite("actor logits".into()));
        }
        let log_probs = log_softmax(logits);
        let probs: Vec<f64> = log_probs.iter().map(|&l| l.exp()).collect();
        let action = batch.actions[i];
        let adv = batch.advantages[i];
        let new_logp = log_probs[action];
        let ratio = (new_logp - batch.old_log_probs[i]).exp();
        let clipped = ratio.clamp(1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
        let surr_unclipped = ratio * adv;
        let surr_clipped = clipped * adv;
        policy_sum += -surr_unclipped.min(surr_clipped);
        // d(-min)/d new_logp: the clipped branch is constant in the
        // parameters, so gradient flows only when the unclipped branch is
        // the minimum (ties resolve to the unclipped branch).
        let dpolicy_dlogp = if surr_unclipped <= surr_clipped {
            -adv * ratio
        } else {
            0.0
        };
        let entropy = -log_probs.iter().map(|&l| l.exp() * l).sum::<f64>();
        entropy_sum += entropy;

        // dLoss/dlogits: policy term via (onehot - p), entropy bonus via
        // dH/dlogits_k = -p_k (logp_k + H).
        let mut grad_logits = vec![0.0; probs.len()];
        for k in 0..probs.len() {
            let indicator = if k == action { 1.0 } else { 0.0 };
            let g_policy = dpolicy_dlogp * (indicator - probs[k]);
            let g_entropy = cfg.entropy_coef * probs[k] * (log_probs[k] + entropy);
            grad_logits[k] = (g_policy + g_entropy) * inv_n;
        }
        params.actor.backward(&cache, &grad_logits, &mut actor_grads);

        let vcache = params.critic.forward_cached(&scaled);
        let v = vcache.output()[0];
        if !v.is_finite() {
            return Err(AgentError::NonFinite("critic value".into()));
        }
        let err = v - batch.returns[i];
        value_sum += err * err;
        let grad_v = [cfg.value_coef * 2.0 * err * inv_n];
        params.critic.backward(&vcache, &grad_v, &mut critic_grads);
    }

    if !actor_grads.is_finite() || !critic_grads.is_finite() {
        return Err(AgentError::NonFinite("gradients".into()));
    }
    let policy = policy_sum * inv_n;
    let value = cfg.value_coef * value_sum * inv_n;
    let entropy = entropy_sum * inv_n;
    Ok((
        actor_grads,
        critic_grads,
        LossParts {
            policy,
            value,
            entropy,
            total: policy + value - cfg.entropy_coef * entropy,
        },
    ))
}

/// One point of the learning curve CSV.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CurvePoint {
    pub update_index: usize,
    /// Mean discounted episode return of the update's rollouts.
    pub mean_return: f64,
    /// Mean minimum-average-bitrate of the update's rollouts.
    pub min_avg_bitrate: f64,
}

/// Optimizer bundle for one training run.
pub struct Trainer {
    pub params: PolicyParams,
    actor_adam: AdamState,
    critic_adam: AdamState,
    cfg: TrainConfig,
}

impl Trainer {
    pub fn new(params: PolicyParams, cfg: TrainConfig) -> Self {
        let actor_adam = AdamState::new(params.actor.param_count());
        let critic_adam = AdamState::new(params.critic.param_count());
        Self {
            params,
            actor_adam,
            critic_adam,
            cfg,
        }
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    /// Collects one batch of episodes under the current (old) policy and
    /// runs the configured number of optimization epochs. Returns the
    /// curve point for the update.
    pub fn update<E, F>(
        &mut self,
        update_index: usize,
        factory: &F,
        par: Parallelism,
    ) -> Result<CurvePoint, AgentError>
    where
        E: Environment + Send,
        F: Fn(u64) -> Result<E, EnvError> + Sync,
    {
        let cfg = self.cfg;
        let params = &self.params;
        let results = parallel::map_indexed(par, cfg.episodes_per_update, |e| {
            let env_seed = parallel::derive_seed(cfg.seed, 1_000 + update_index as u64, e as u64);
            let rng_seed = parallel::derive_seed(cfg.seed, 2_000 + update_index as u64, e as u64);
            let mut env = factory(env_seed)?;
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rollout(params, &mut env, cfg.gamma, &mut rng)
        });
        let mut trajectories = Vec::with_capacity(cfg.episodes_per_update);
        let mut stats = Vec::with_capacity(cfg.episodes_per_update);
        for r in results {
            let (t, s) = r?;
            trajectories.push(t);
            stats.push(s);
        }
        let batch = build_batch(&trajectories, &cfg);
        for _ in 0..cfg.update_epochs {
            let (ag, cg, _) = backward(&self.params, &batch, &cfg)?;
            let mut actor_flat = self.params.actor.params_flat();
            self.actor_adam.update(&mut actor_flat, &ag.flat(), cfg.learning_rate);
            self.params.actor.set_params_flat(&actor_flat);
            let mut critic_flat = self.params.critic.params_flat();
            self.critic_adam.update(&mut critic_flat, &cg.flat(), cfg.learning_rate);
            self.params.critic.set_params_flat(&critic_flat);
        }
        let mean_return =
            stats.iter().map(|s| s.discounted_return).sum::<f64>() / stats.len() as f64;
        let rate_stats: Vec<f64> = stats.iter().filter_map(|s| s.min_avg_bitrate).collect();
        let min_avg_bitrate = if rate_stats.is_empty() {
            0.0
        } else {
            rate_stats.iter().sum::<f64>() / rate_stats.len() as f64
        };
        Ok(CurvePoint {
            update_index,
            mean_return,
            min_avg_bitrate,
        })
    }
}

/// Full training run: `n_updates` PPO updates against environments from
/// `factory`. Returns the final parameters and the learning curve.
pub fn train<E, F>(
    factory: F,
    input_dim: usize,
    action_dim: usize,
    obs_scale: Vec<f64>,
    cfg: &TrainConfig,
    n_updates: usize,
    par: Parallelism,
) -> Result<(PolicyParams, Vec<CurvePoint>), AgentError>
where
    E: Environment + Send,
    F: Fn(u64) -> Result<E, EnvError> + Sync,
{
    let params = PolicyParams::new(input_dim, action_dim, obs_scale, cfg.seed);
    let mut trainer = Trainer::new(params, *cfg);
    let mut curve = Vec::with_capacity(n_updates);
    for u in 0..n_updates {
        curve.push(trainer.update(u, &factory, par)?);
    }
    Ok((trainer.params, curve))
}
