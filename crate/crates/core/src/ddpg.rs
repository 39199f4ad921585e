//! Off-policy actor-critic agent for the placement/beamforming environment:
//! replay buffer, Gaussian exploration, critic regression on the bootstrapped
//! target, deterministic policy-gradient actor update and soft target
//! synchronization after every training step.

use ndarray::{s, Array2, Axis};
use rand::Rng;

use crate::channel::{ScenarioRealization, SystemConfig};
use crate::error::Result;
use crate::link_rates::CandidateSolution;
use crate::neural::{NetSpec, Network};
use crate::rl_env::{self, action_dim, state_dim, EnvConfig, RawAction, Transition};
use crate::scalar::Scalar;
use crate::seed;

/// Fixed-capacity ring buffer of transitions; oldest entries evicted first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    data: Vec<Transition<T>>,
    capacity: usize,
    next: usize,
}

impl<T: Scalar> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        ReplayBuffer {
            data: Vec::with_capacity(capacity.min(1 << 20)),
            capacity,
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, transition: Transition<T>) {
        if self.data.len() < self.capacity {
            self.data.push(transition);
        } else {
            self.data[self.next] = transition;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Uniform sample of `batch` distinct indices (partial Fisher-Yates).
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<usize> {
        assert!(batch <= self.data.len());
        let mut pool: Vec<usize> = (0..self.data.len()).collect();
        for i in 0..batch {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        pool.truncate(batch);
        pool
    }

    pub fn get(&self, index: usize) -> &Transition<T> {
        &self.data[index]
    }
}

/// Agent hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig<T> {
    /// Reward discount factor.
    pub discount: T,
    /// Soft-update coefficient for the target networks.
    pub tau: T,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Exploration noise stddev at episode 1.
    pub noise_stddev_initial: T,
    /// Multiplicative per-episode decay of the noise stddev.
    pub noise_decay: T,
    /// Noise stddev floor.
    pub noise_floor: T,
    /// Training episodes.
    pub episodes: usize,
    /// Steps per episode.
    pub steps_per_episode: usize,
    pub actor_lr: T,
    pub critic_lr: T,
    /// Hidden layer widths shared by actor and critic.
    pub hidden: Vec<usize>,
    /// Critic-side reward scaling. Discounted returns of the raw penalty
    /// reward reach the hundreds, which a freshly initialized value network
    /// cannot track; the critic regresses on `reward_scale·r` instead. The
    /// policy argmax and the logged curve are unaffected.
    pub reward_scale: T,
}

impl<T: Scalar> Default for AgentConfig<T> {
    fn default() -> Self {
        AgentConfig {
            discount: T::of(0.99),
            tau: T::of(0.001),
            buffer_capacity: 50_000,
            batch_size: 64,
            noise_stddev_initial: T::of(0.3),
            noise_decay: T::of(0.99),
            noise_floor: T::of(0.02),
            episodes: 400,
            steps_per_episode: 100,
            actor_lr: T::of(1e-4),
            critic_lr: T::of(1e-3),
            hidden: vec![128, 128],
            reward_scale: T::of(0.01),
        }
    }
}

impl<T: Scalar> AgentConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.discount > T::zero()
            && self.discount < T::one()
            && self.tau > T::zero()
            && self.tau <= T::one()
            && self.batch_size >= 1
            && self.batch_size <= self.buffer_capacity
            && self.episodes >= 1
            && self.steps_per_episode >= 1
            && self.actor_lr > T::zero()
            && self.critic_lr > T::zero()
            && self.noise_stddev_initial >= T::zero()
            && self.noise_decay > T::zero()
            && self.noise_decay <= T::one()
            && self.reward_scale > T::zero()
            && !self.hidden.is_empty();
        if ok {
            Ok(())
        } else {
            Err(crate::error::Error::Config("invalid agent configuration".into()))
        }
    }

    /// Exploration stddev for a 0-based episode index.
    pub fn noise_stddev(&self, episode: usize) -> T {
        (self.noise_stddev_initial * self.noise_decay.powf(T::of(episode as f64)))
            .max(self.noise_floor)
    }
}

const ADAM_BETAS: (f64, f64) = (0.9, 0.999);
const ADAM_EPS: f64 = 1e-8;
const ACTOR_FINAL_SCALE: f64 = 0.01;

/// The four networks plus hyperparameters.
#[derive(Debug, Clone)]
pub struct Agent<T> {
    pub actor: Network<T>,
    pub critic: Network<T>,
    pub target_actor: Network<T>,
    pub target_critic: Network<T>,
    pub config: AgentConfig<T>,
    state_dim: usize,
    action_dim: usize,
}

impl<T: Scalar> Agent<T> {
    /// Fresh agent; targets start as exact copies of the training networks.
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        action_dim: usize,
        config: AgentConfig<T>,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let actor_spec = NetSpec::actor(state_dim, action_dim, &config.hidden);
        let critic_spec = NetSpec::critic(state_dim, action_dim, &config.hidden);
        let actor = Network::init(actor_spec, T::of(ACTOR_FINAL_SCALE), rng)?;
        let critic = Network::init(critic_spec, T::one(), rng)?;
        let target_actor = actor.clone();
        let target_critic = critic.clone();
        Ok(Agent {
            actor,
            critic,
            target_actor,
            target_critic,
            config,
            state_dim,
            action_dim,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    /// Deterministic policy output plus Gaussian exploration noise, clamped
    /// to the action box. `noise_stddev = 0` gives the deterministic policy.
    pub fn select_action<R: Rng + ?Sized>(
        &self,
        state_features: &[T],
        noise_stddev: T,
        rng: &mut R,
    ) -> Result<RawAction<T>> {
        let mut components = self.actor.forward_one(state_features)?;
        if noise_stddev > T::zero() {
            for x in components.iter_mut() {
                *x = *x + noise_stddev * T::standard_normal(rng);
            }
        }
        Ok(RawAction { components }.clamped())
    }

    fn betas(&self) -> (T, T) {
        (T::of(ADAM_BETAS.0), T::of(ADAM_BETAS.1))
    }
}

fn feature_matrix<T: Scalar>(
    states: impl Iterator<Item = Vec<T>>,
    dim: usize,
) -> Array2<T> {
    let rows: Vec<Vec<T>> = states.collect();
    let mut out = Array2::zeros((rows.len(), dim));
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[(i, j)] = *v;
        }
    }
    out
}

fn concat_columns<T: Scalar>(a: &Array2<T>, b: &Array2<T>) -> Array2<T> {
    ndarray::concatenate(Axis(1), &[a.view(), b.view()]).expect("same row count")
}

/// Bootstrapped per-sample regression target for the critic:
/// `r + γ·Q'(s', μ'(s'))`, computed with the target networks only.
pub fn critic_target<T: Scalar>(
    batch: &[&Transition<T>],
    target_actor: &Network<T>,
    target_critic: &Network<T>,
    discount: T,
    system: &SystemConfig<T>,
) -> Result<Vec<T>> {
    assert!(!batch.is_empty(), "critic target over an empty batch");
    let dim = batch[0].next_state.dim();
    let next = feature_matrix(batch.iter().map(|t| t.next_state.features(system)), dim);
    let (next_actions, _) = target_actor.forward_batch(&next)?;
    let (q_next, _) = target_critic.forward_batch(&concat_columns(&next, &next_actions))?;
    Ok(batch
        .iter()
        .zip(q_next.column(0))
        .map(|(t, q)| t.reward + discount * *q)
        .collect())
}

/// Diagnostics of one training step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStepStats<T> {
    /// Mean squared error of the critic against its bootstrapped target.
    pub critic_loss: T,
    /// Mean Q(s, μ(s)) the actor ascended on.
    pub actor_objective: T,
}

/// One minibatch update: critic regression, actor ascent through the critic,
/// then soft target updates. Returns `None` (no-op) while the buffer holds
/// fewer transitions than one batch.
pub fn train_step<T: Scalar, R: Rng + ?Sized>(
    agent: &mut Agent<T>,
    buffer: &ReplayBuffer<T>,
    system: &SystemConfig<T>,
    rng: &mut R,
) -> Result<Option<TrainStepStats<T>>> {
    let batch_size = agent.config.batch_size;
    if buffer.len() < batch_size {
        return Ok(None);
    }
    let indices = buffer.sample_indices(batch_size, rng);
    let batch: Vec<&Transition<T>> = indices.iter().map(|i| buffer.get(*i)).collect();
    let stats = train_step_on_batch(agent, &batch, system)?;
    Ok(Some(stats))
}

/// The update itself, on an explicit minibatch.
pub fn train_step_on_batch<T: Scalar>(
    agent: &mut Agent<T>,
    batch: &[&Transition<T>],
    system: &SystemConfig<T>,
) -> Result<TrainStepStats<T>> {
    let b = batch.len();
    let inv_b = T::one() / T::of(b as f64);
    let betas = agent.betas();
    let eps = T::of(ADAM_EPS);

    // the critic sees scaled rewards; see AgentConfig::reward_scale
    let scaled: Vec<Transition<T>> = batch
        .iter()
        .map(|t| Transition {
            state: t.state.clone(),
            action: t.action.clone(),
            reward: t.reward * agent.config.reward_scale,
            next_state: t.next_state.clone(),
        })
        .collect();
    let scaled_refs: Vec<&Transition<T>> = scaled.iter().collect();
    let targets = critic_target(
        &scaled_refs,
        &agent.target_actor,
        &agent.target_critic,
        agent.config.discount,
        system,
    )?;

    let sdim = batch[0].state.dim();
    let states = feature_matrix(batch.iter().map(|t| t.state.features(system)), sdim);
    let actions = feature_matrix(
        batch.iter().map(|t| t.action.components.clone()),
        batch[0].action.components.len(),
    );

    // critic regression on the bootstrapped target
    let critic_in = concat_columns(&states, &actions);
    let (q, cache) = agent.critic.forward_batch(&critic_in)?;
    let mut critic_loss = T::zero();
    let mut grad_q = Array2::zeros((b, 1));
    for (i, target) in targets.iter().enumerate() {
        let diff = q[(i, 0)] - *target;
        critic_loss += diff * diff;
        grad_q[(i, 0)] = T::of(2.0) * diff * inv_b;
    }
    critic_loss *= inv_b;
    let critic_grads = agent.critic.backward_batch(&cache, &grad_q)?;
    agent
        .critic
        .adam_step(&critic_grads.flat, agent.config.critic_lr, betas, eps);

    // actor ascent on mean Q(s, μ(s)) through the critic's action input
    let (proposed, actor_cache) = agent.actor.forward_batch(&states)?;
    let (q_actor, critic_cache) = agent
        .critic
        .forward_batch(&concat_columns(&states, &proposed))?;
    let actor_objective = q_actor.column(0).sum() * inv_b;
    let ones = Array2::from_elem((b, 1), inv_b);
    let through_critic = agent.critic.backward_batch(&critic_cache, &ones)?;
    let dq_da = through_critic.input.slice(s![.., sdim..]).to_owned();
    let actor_grads = agent.actor.backward_batch(&actor_cache, &dq_da)?;
    // ascend: adam minimizes, so feed the negated gradient
    let descend: Vec<T> = actor_grads.flat.iter().map(|g| -*g).collect();
    agent
        .actor
        .adam_step(&descend, agent.config.actor_lr, betas, eps);

    let tau = agent.config.tau;
    agent.target_critic.soft_update_from(&agent.critic, tau);
    agent.target_actor.soft_update_from(&agent.actor, tau);

    Ok(TrainStepStats {
        critic_loss,
        actor_objective,
    })
}

/// Result of a full training run.
#[derive(Debug, Clone)]
pub struct TrainResult<T> {
    pub agent: Agent<T>,
    /// Mean reward of each episode, in order.
    pub curve: Vec<T>,
}

/// Full training loop: per episode, a fresh frozen scenario; per step,
/// act-with-noise, store, sample a minibatch and update all four networks.
/// Deterministic given `(env, config, master_seed)`.
pub fn train<T: Scalar>(
    env: &EnvConfig<T>,
    config: &AgentConfig<T>,
    master_seed: u64,
) -> Result<TrainResult<T>> {
    env.system.validate()?;
    config.validate()?;
    let n = env.system.n_bs_antennas;
    let mut init_rng = seed::stream(master_seed, "init", 0);
    let mut agent = Agent::new(state_dim(n), action_dim(n), config.clone(), &mut init_rng)?;
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let mut buffer_rng = seed::stream(master_seed, "buffer", 0);
    let mut curve = Vec::with_capacity(config.episodes);

    for episode in 0..config.episodes {
        let mut scenario_rng = seed::stream(master_seed, "scenario", episode as u64);
        let (scenario, mut state) = rl_env::reset(env, &mut scenario_rng);
        let mut explore_rng = seed::stream(master_seed, "explore", episode as u64);
        let sigma = agent.config.noise_stddev(episode);
        let mut episode_reward = T::zero();
        for _ in 0..config.steps_per_episode {
            let action = agent.select_action(&state.features(&env.system), sigma, &mut explore_rng)?;
            let outcome = rl_env::step(&state, &action, &scenario, env)?;
            episode_reward += outcome.reward.total;
            buffer.push(Transition {
                state: state.clone(),
                action,
                reward: outcome.reward.total,
                next_state: outcome.next_state.clone(),
            });
            train_step(&mut agent, &buffer, &env.system, &mut buffer_rng)?;
            state = outcome.next_state;
        }
        curve.push(episode_reward / T::of(config.steps_per_episode as f64));
    }
    Ok(TrainResult { agent, curve })
}

/// Outcome of rolling out a deterministic policy on one frozen scenario.
#[derive(Debug, Clone)]
pub struct PolicyEvaluation<T> {
    /// Best feasible objective over the rollout, 0 if never feasible.
    pub best_objective: T,
    /// The solution achieving it, if any step was feasible.
    pub best_solution: Option<CandidateSolution<T>>,
    pub steps: usize,
}

/// Roll the deterministic policy out on a frozen scenario and keep the best
/// feasible solution it visits, mirroring how an operator would deploy it.
pub fn evaluate_policy<T: Scalar>(
    actor: &Network<T>,
    env: &EnvConfig<T>,
    scenario: &ScenarioRealization<T>,
    steps: usize,
) -> Result<PolicyEvaluation<T>> {
    let mut state = rl_env::initial_state(scenario, &env.system)?;
    let mut best_objective = T::zero();
    let mut best_solution = None;
    for _ in 0..steps {
        let components = actor.forward_one(&state.features(&env.system))?;
        let action = RawAction { components }.clamped();
        let outcome = rl_env::step(&state, &action, scenario, env)?;
        if outcome.evaluation.feasible && outcome.evaluation.sum_rate > best_objective {
            best_objective = outcome.evaluation.sum_rate;
            best_solution = Some(outcome.solution.clone());
        }
        state = outcome.next_state;
    }
    Ok(PolicyEvaluation {
        best_objective,
        best_solution,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl_env::EnvState;
    use crate::seed::stream;

    fn tiny_env() -> EnvConfig<f64> {
        EnvConfig {
            system: SystemConfig {
                n_bs_antennas: 2,
                l_b: 2,
                l_a: 2,
                l_r: 2,
                ..SystemConfig::default()
            },
            pen: 10.0,
        }
    }

    fn tiny_agent_config() -> AgentConfig<f64> {
        AgentConfig {
            buffer_capacity: 500,
            batch_size: 8,
            episodes: 3,
            steps_per_episode: 10,
            hidden: vec![16, 16],
            ..AgentConfig::default()
        }
    }

    fn dummy_state(dim_n: usize, fill: f64) -> EnvState<f64> {
        EnvState {
            prev_action: vec![fill; action_dim(dim_n)],
            prev_power_wf: 0.0,
            prev_power_wn: 0.0,
            prev_p_n: 0.0,
            channels: vec![fill * 1e-6; 2 * (2 * dim_n + 1)],
        }
    }

    fn dummy_transition(n: usize, reward: f64, tag: f64) -> Transition<f64> {
        Transition {
            state: dummy_state(n, tag),
            action: RawAction {
                components: vec![tag.sin() * 0.5; action_dim(n)],
            },
            reward,
            next_state: dummy_state(n, tag + 0.5),
        }
    }

    #[test]
    fn replay_buffer_evicts_oldest() {
        let mut buffer = ReplayBuffer::new(3);
        for i in 0..5 {
            buffer.push(dummy_transition(2, i as f64, 0.0));
        }
        assert_eq!(buffer.len(), 3);
        let rewards: Vec<f64> = (0..3).map(|i| buffer.get(i).reward).collect();
        // ring layout after 5 pushes into capacity 3: [3, 4, 2]
        assert_eq!(rewards, vec![3.0, 4.0, 2.0]);
    }

    #[test]
    fn minibatch_indices_are_distinct() {
        let mut buffer = ReplayBuffer::new(100);
        for i in 0..50 {
            buffer.push(dummy_transition(2, i as f64, 0.0));
        }
        let mut rng = stream(1, "buffer", 0);
        let idx = buffer.sample_indices(32, &mut rng);
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 32);
    }

    #[test]
    fn deterministic_policy_without_noise() {
        let env = tiny_env();
        let n = env.system.n_bs_antennas;
        let agent = Agent::new(
            state_dim(n),
            action_dim(n),
            tiny_agent_config(),
            &mut stream(3, "init", 0),
        )
        .unwrap();
        let features = dummy_state(n, 0.2).features(&env.system);
        let a = agent.select_action(&features, 0.0, &mut stream(4, "explore", 0)).unwrap();
        let b = agent.select_action(&features, 0.0, &mut stream(5, "explore", 1)).unwrap();
        assert_eq!(a, b);
        let direct = agent.actor.forward_one(&features).unwrap();
        assert_eq!(a.components, direct);
        // noisy actions stay in the box and reproduce under the same stream
        let c = agent.select_action(&features, 0.5, &mut stream(6, "explore", 2)).unwrap();
        let d = agent.select_action(&features, 0.5, &mut stream(6, "explore", 2)).unwrap();
        assert_eq!(c, d);
        assert!(c.components.iter().all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn targets_start_as_exact_copies() {
        let env = tiny_env();
        let n = env.system.n_bs_antennas;
        let agent = Agent::new(
            state_dim(n),
            action_dim(n),
            tiny_agent_config(),
            &mut stream(7, "init", 0),
        )
        .unwrap();
        assert_eq!(agent.actor.values(), agent.target_actor.values());
        assert_eq!(agent.critic.values(), agent.target_critic.values());
    }

    #[test]
    fn critic_target_reduces_to_rewards() {
        let env = tiny_env();
        let n = env.system.n_bs_antennas;
        let agent = Agent::new(
            state_dim(n),
            action_dim(n),
            tiny_agent_config(),
            &mut stream(8, "init", 0),
        )
        .unwrap();
        let transitions: Vec<Transition<f64>> =
            (0..4).map(|i| dummy_transition(n, i as f64, i as f64)).collect();
        let batch: Vec<&Transition<f64>> = transitions.iter().collect();
        // discount = 0 leaves exactly the rewards
        let t0 = critic_target(&batch, &agent.target_actor, &agent.target_critic, 0.0, &env.system)
            .unwrap();
        assert_eq!(t0, vec![0.0, 1.0, 2.0, 3.0]);
        // zero-weight target critic does too
        let mut zeroed = agent.clone();
        for v in zeroed.target_critic.values_mut() {
            *v = 0.0;
        }
        let tz = critic_target(&batch, &zeroed.target_actor, &zeroed.target_critic, 0.9, &env.system)
            .unwrap();
        assert_eq!(tz, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn critic_target_matches_independent_evaluator() {
        let env = tiny_env();
        let n = env.system.n_bs_antennas;
        let agent = Agent::new(
            state_dim(n),
            action_dim(n),
            tiny_agent_config(),
            &mut stream(9, "init", 0),
        )
        .unwrap();
        let transitions: Vec<Transition<f64>> = (0..6)
            .map(|i| dummy_transition(n, (i as f64).cos(), i as f64 * 0.3))
            .collect();
        let batch: Vec<&Transition<f64>> = transitions.iter().collect();
        let discount = 0.97;
        let got =
            critic_target(&batch, &agent.target_actor, &agent.target_critic, discount, &env.system)
                .unwrap();
        // independent per-sample route through the single-sample forward
        for (t, g) in transitions.iter().zip(&got) {
            let features = t.next_state.features(&env.system);
            let a = agent.target_actor.forward_one(&features).unwrap();
            let mut input = features.clone();
            input.extend_from_slice(&a);
            let q = agent.target_critic.forward_one(&input).unwrap()[0];
            assert!((g - (t.reward + discount * q)).abs() < 1e-10);
        }
    }

    #[test]
    fn train_step_noop_on_underfilled_buffer() {
        let env = tiny_env();
        let n = env.system.n_bs_antennas;
        let mut agent = Agent::new(
            state_dim(n),
            action_dim(n),
            tiny_agent_config(),
            &mut stream(10, "init", 0),
        )
        .unwrap();
        let buffer = ReplayBuffer::new(100);
        let out = train_step(&mut agent, &buffer, &env.system, &mut stream(0, "buffer", 0)).unwrap();
        assert!(out.is_none());
    }

    #[test]
    fn train_step_is_deterministic_and_soft_updates_targets() {
        let env = tiny_env();
        let n = env.system.n_bs_antennas;
        let make = || {
            let mut agent = Agent::new(
                state_dim(n),
                action_dim(n),
                tiny_agent_config(),
                &mut stream(11, "init", 0),
            )
            .unwrap();
            let mut buffer = ReplayBuffer::new(100);
            for i in 0..20 {
                buffer.push(dummy_transition(n, (i as f64).sin(), i as f64 * 0.7));
            }
            let old_target = agent.target_critic.values().to_vec();
            let stats = train_step(&mut agent, &buffer, &env.system, &mut stream(12, "buffer", 0))
                .unwrap()
                .unwrap();
            (agent, old_target, stats)
        };
        let (a1, old_target, s1) = make();
        let (a2, _, s2) = make();
        assert_eq!(s1, s2);
        assert_eq!(a1.actor.values(), a2.actor.values());
        assert_eq!(a1.critic.values(), a2.critic.values());
        // targets hold τ·source + (1−τ)·old-target exactly
        let tau = a1.config.tau;
        for ((t, s), o) in a1
            .target_critic
            .values()
            .iter()
            .zip(a1.critic.values())
            .zip(&old_target)
        {
            assert!((t - (tau * s + (1.0 - tau) * o)).abs() < 1e-12);
        }
    }

    #[test]
    fn critic_regresses_to_constant_reward() {
        let env = tiny_env();
        let n = env.system.n_bs_antennas;
        let mut config = tiny_agent_config();
        config.discount = 0.9;
        let mut agent =
            Agent::new(state_dim(n), action_dim(n), config, &mut stream(13, "init", 0)).unwrap();
        // discount 0 and constant reward 2: the critic must regress to 2
        agent.config.discount = 0.0;
        let mut buffer = ReplayBuffer::new(64);
        for i in 0..32 {
            buffer.push(dummy_transition(n, 2.0, i as f64 * 0.1));
        }
        let mut rng = stream(14, "buffer", 0);
        let mut losses = Vec::new();
        for _ in 0..300 {
            let stats = train_step(&mut agent, &buffer, &env.system, &mut rng).unwrap().unwrap();
            losses.push(stats.critic_loss);
        }
        let head = losses[..20].iter().sum::<f64>() / 20.0;
        let tail = losses[280..].iter().sum::<f64>() / 20.0;
        assert!(tail < head * 0.2, "no regression progress: head {head}, tail {tail}");
    }

    #[test]
    fn actor_gradient_matches_finite_differences() {
        let env = tiny_env();
        let n = env.system.n_bs_antennas;
        let mut config = tiny_agent_config();
        config.hidden = vec![8, 8];
        let agent =
            Agent::new(state_dim(n), action_dim(n), config, &mut stream(15, "init", 0)).unwrap();
        let transitions: Vec<Transition<f64>> = (0..4)
            .map(|i| dummy_transition(n, 0.0, i as f64 * 0.4))
            .collect();
        let sdim = transitions[0].state.dim();
        let states = feature_matrix(
            transitions.iter().map(|t| t.state.features(&env.system)),
            sdim,
        );
        let b = transitions.len();
        let inv_b = 1.0 / b as f64;

        let objective = |actor: &Network<f64>| -> f64 {
            let (proposed, _) = actor.forward_batch(&states).unwrap();
            let (q, _) = agent
                .critic
                .forward_batch(&concat_columns(&states, &proposed))
                .unwrap();
            q.column(0).sum() * inv_b
        };

        let (proposed, actor_cache) = agent.actor.forward_batch(&states).unwrap();
        let (_, critic_cache) = agent
            .critic
            .forward_batch(&concat_columns(&states, &proposed))
            .unwrap();
        let ones = Array2::from_elem((b, 1), inv_b);
        let through = agent.critic.backward_batch(&critic_cache, &ones).unwrap();
        let dq_da = through.input.slice(s![.., sdim..]).to_owned();
        let analytic = agent.actor.backward_batch(&actor_cache, &dq_da).unwrap();

        let h = 1e-5;
        let mut worst = 0.0f64;
        for i in (0..agent.actor.values().len()).step_by(7) {
            let mut plus = agent.actor.clone();
            plus.values_mut()[i] += h;
            let mut minus = agent.actor.clone();
            minus.values_mut()[i] -= h;
            let fd = (objective(&plus) - objective(&minus)) / (2.0 * h);
            let denom = analytic.flat[i].abs().max(fd.abs()).max(1e-6);
            worst = worst.max((analytic.flat[i] - fd).abs() / denom);
        }
        assert!(worst < 1e-3, "actor-through-critic gradient error {worst}");
    }

    #[test]
    fn short_training_run_is_reproducible() {
        let env = tiny_env();
        let config = tiny_agent_config();
        let a = train(&env, &config, 99).unwrap();
        let b = train(&env, &config, 99).unwrap();
        assert_eq!(a.curve, b.curve);
        assert_eq!(a.curve.len(), config.episodes);
        assert_eq!(a.agent.actor.values(), b.agent.actor.values());
        let c = train(&env, &config, 100).unwrap();
        assert_ne!(a.curve, c.curve);
    }

    #[test]
    fn policy_evaluation_is_deterministic() {
        let env = tiny_env();
        let config = tiny_agent_config();
        let trained = train(&env, &config, 5).unwrap();
        let scenario =
            crate::channel::sample_scenario(&env.system, &mut stream(1, "eval-scen", 0));
        let a = evaluate_policy(&trained.agent.actor, &env, &scenario, 20).unwrap();
        let b = evaluate_policy(&trained.agent.actor, &env, &scenario, 20).unwrap();
        assert_eq!(a.best_objective, b.best_objective);
        if let Some(sol) = &a.best_solution {
            // the reported solution re-checks as feasible
            let assessment = crate::problem::assess(&scenario, &env.system, sol.clone(), env.pen).unwrap();
            assert!(assessment.evaluation.feasible);
        }
    }
}
