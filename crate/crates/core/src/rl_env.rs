//! Episodic environment around the evaluation pipeline.
//!
//! An episode freezes one scenario; each step decodes a raw agent action
//! into a candidate solution, normalizes the beamformers, rebuilds the
//! channels at the proposed MA positions and prices the penalty reward.
//! The decode ranges for relay power and positions are deliberately 25%
//! wider than the feasible box so the placement/power penalties can fire
//! during learning.

use rand::Rng;

use crate::channel::{sample_scenario, MaPosition, ScenarioRealization, SystemConfig};
use crate::error::Result;
use crate::link_rates::{CandidateSolution, LinkEvaluation};
use crate::problem::{assess, RewardBreakdown};
use crate::scalar::Scalar;

/// Environment parameters: the physical system plus the penalty magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig<T> {
    pub system: SystemConfig<T>,
    /// Penalty charged per fired constraint indicator.
    pub pen: T,
}

impl<T: Scalar> Default for EnvConfig<T> {
    fn default() -> Self {
        EnvConfig {
            system: SystemConfig::default(),
            pen: T::of(10.0),
        }
    }
}

/// Raw actor output: `4N + 7` components in `[−1, 1]` — real and imaginary
/// parts of both beamformers, the relay power and three 2-D positions.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAction<T> {
    pub components: Vec<T>,
}

impl<T: Scalar> RawAction<T> {
    pub fn zeros(n_bs_antennas: usize) -> Self {
        RawAction {
            components: vec![T::zero(); action_dim(n_bs_antennas)],
        }
    }

    /// Componentwise clamp to the action box.
    pub fn clamped(&self) -> Self {
        RawAction {
            components: self
                .components
                .iter()
                .map(|x| x.min(T::one()).max(-T::one()))
                .collect(),
        }
    }
}

/// Action dimensionality for an `n`-antenna BS.
pub fn action_dim(n_bs_antennas: usize) -> usize {
    4 * n_bs_antennas + 7
}

/// State dimensionality: previous action, the two beamformer powers and the
/// relay power, and re/im parts of the three channels.
pub fn state_dim(n_bs_antennas: usize) -> usize {
    action_dim(n_bs_antennas) + 3 + 2 * (2 * n_bs_antennas + 1)
}

/// Environment state: everything the previous step exposed to the agent.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState<T> {
    /// Previous raw action (zeros right after a reset).
    pub prev_action: Vec<T>,
    /// `‖w_F‖²` of the previous (normalized) solution \[W\].
    pub prev_power_wf: T,
    /// `‖w_N‖²` of the previous (normalized) solution \[W\].
    pub prev_power_wn: T,
    /// Previous relay power \[W\].
    pub prev_p_n: T,
    /// Re/im-interleaved h_N, h_F, h_d at the previous MA positions.
    pub channels: Vec<T>,
}

impl<T: Scalar> EnvState<T> {
    pub fn dim(&self) -> usize {
        self.prev_action.len() + 3 + self.channels.len()
    }

    /// Flat feature vector for the neural networks. Channels are scaled by
    /// the per-link root mean gain and powers by their budgets so every
    /// feature is O(1); the raw state keeps physical units.
    pub fn features(&self, config: &SystemConfig<T>) -> Vec<T> {
        let n = config.n_bs_antennas;
        debug_assert_eq!(self.channels.len(), 2 * (2 * n + 1));
        let mut out = Vec::with_capacity(self.dim());
        out.extend_from_slice(&self.prev_action);
        out.push(self.prev_power_wf / config.p_t);
        out.push(self.prev_power_wn / config.p_t);
        out.push(self.prev_p_n / config.p_nf);
        let scales = [
            config.link_gain(config.d_bn).sqrt(),
            config.link_gain(config.d_bf).sqrt(),
            config.link_gain(config.d_nf).sqrt(),
        ];
        for (i, value) in self.channels.iter().enumerate() {
            let scale = if i < 2 * n {
                scales[0]
            } else if i < 4 * n {
                scales[1]
            } else {
                scales[2]
            };
            out.push(*value / scale);
        }
        out
    }
}

/// One replay-buffer record.
#[derive(Debug, Clone)]
pub struct Transition<T> {
    pub state: EnvState<T>,
    pub action: RawAction<T>,
    pub reward: T,
    pub next_state: EnvState<T>,
}

/// Result of one environment step.
#[derive(Debug, Clone)]
pub struct StepOutcome<T> {
    pub next_state: EnvState<T>,
    pub reward: RewardBreakdown<T>,
    pub evaluation: LinkEvaluation<T>,
    /// The decoded, beamformer-normalized solution that was evaluated.
    pub solution: CandidateSolution<T>,
}

/// Decode a raw action into physical decision variables.
///
/// Beamformer components map to `[−√P_T, √P_T]`, the relay power to
/// `[−0.25·P_NF, 1.25·P_NF]` and each position coordinate to
/// `[−0.25·A, 1.25·A]`. Out-of-box raw inputs are clamped first.
pub fn decode_action<T: Scalar>(raw: &RawAction<T>, config: &SystemConfig<T>) -> CandidateSolution<T> {
    let n = config.n_bs_antennas;
    debug_assert_eq!(raw.components.len(), action_dim(n));
    let x = &raw.clamped().components;
    let amp = config.p_t.sqrt();
    let complex_vec = |re_off: usize, im_off: usize| {
        (0..n)
            .map(|i| num_complex::Complex::new(x[re_off + i] * amp, x[im_off + i] * amp))
            .collect::<Vec<_>>()
    };
    let w_f = complex_vec(0, n);
    let w_n = complex_vec(2 * n, 3 * n);
    let enlarged = |v: T, full: T| full * (T::of(0.75) * v + T::of(0.5));
    let p_n = enlarged(x[4 * n], config.p_nf);
    let pos = |off: usize| {
        MaPosition::new(
            enlarged(x[off], config.region_side),
            enlarged(x[off + 1], config.region_side),
        )
    };
    CandidateSolution {
        w_f,
        w_n,
        p_n,
        t_d: pos(4 * n + 1),
        r_n: pos(4 * n + 3),
        r_f: pos(4 * n + 5),
    }
}

/// Inverse of [`decode_action`] for solutions inside the decode ranges.
pub fn encode_solution<T: Scalar>(sol: &CandidateSolution<T>, config: &SystemConfig<T>) -> RawAction<T> {
    let n = config.n_bs_antennas;
    let amp = config.p_t.sqrt();
    let mut components = Vec::with_capacity(action_dim(n));
    components.extend(sol.w_f.iter().map(|z| z.re / amp));
    components.extend(sol.w_f.iter().map(|z| z.im / amp));
    components.extend(sol.w_n.iter().map(|z| z.re / amp));
    components.extend(sol.w_n.iter().map(|z| z.im / amp));
    let inverse = |v: T, full: T| (v / full - T::of(0.5)) / T::of(0.75);
    components.push(inverse(sol.p_n, config.p_nf));
    for pos in [sol.t_d, sol.r_n, sol.r_f] {
        components.push(inverse(pos.x, config.region_side));
        components.push(inverse(pos.y, config.region_side));
    }
    RawAction { components }
}

fn flatten_channels<T: Scalar>(channels: &crate::channel::ChannelSet<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(2 * (channels.h_n.len() + channels.h_f.len()) + 2);
    for z in channels.h_n.iter().chain(channels.h_f.iter()) {
        out.push(z.re);
        out.push(z.im);
    }
    out.push(channels.h_d.re);
    out.push(channels.h_d.im);
    out
}

/// Initial state for a frozen scenario: zero previous action, zero previous
/// powers, channels evaluated at the region-center MA positions.
pub fn initial_state<T: Scalar>(
    scenario: &ScenarioRealization<T>,
    config: &SystemConfig<T>,
) -> Result<EnvState<T>> {
    let center = config.region_center();
    let channels = crate::channel::assemble_channels(scenario, center, center, center, config)?;
    Ok(EnvState {
        prev_action: vec![T::zero(); action_dim(config.n_bs_antennas)],
        prev_power_wf: T::zero(),
        prev_power_wn: T::zero(),
        prev_p_n: T::zero(),
        channels: flatten_channels(&channels),
    })
}

/// Start a new episode: draw a fresh scenario and build its initial state.
pub fn reset<T: Scalar, R: Rng + ?Sized>(
    config: &EnvConfig<T>,
    rng: &mut R,
) -> (ScenarioRealization<T>, EnvState<T>) {
    let scenario = sample_scenario(&config.system, rng);
    let state = initial_state(&scenario, &config.system)
        .expect("freshly sampled scenario matches its config");
    (scenario, state)
}

/// Execute one step against a frozen scenario. Pure in all arguments.
pub fn step<T: Scalar>(
    state: &EnvState<T>,
    raw_action: &RawAction<T>,
    scenario: &ScenarioRealization<T>,
    config: &EnvConfig<T>,
) -> Result<StepOutcome<T>> {
    let _ = state; // the state influences the agent, not the physics
    let clamped = raw_action.clamped();
    let decoded = decode_action(&clamped, &config.system);
    let assessment = assess(scenario, &config.system, decoded, config.pen)?;
    let next_state = EnvState {
        prev_action: clamped.components,
        prev_power_wf: crate::link_rates::vector_power(&assessment.solution.w_f),
        prev_power_wn: crate::link_rates::vector_power(&assessment.solution.w_n),
        prev_p_n: assessment.solution.p_n,
        channels: flatten_channels(&assessment.channels),
    };
    Ok(StepOutcome {
        next_state,
        reward: assessment.reward,
        evaluation: assessment.evaluation,
        solution: assessment.solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream;

    #[test]
    fn dimensions_for_four_antennas() {
        assert_eq!(action_dim(4), 23);
        assert_eq!(state_dim(4), 23 + 3 + 18);
        let config = EnvConfig::<f64>::default();
        let (_, state) = reset(&config, &mut stream(1, "scenario", 0));
        assert_eq!(state.dim(), 44);
        assert_eq!(state.features(&config.system).len(), 44);
    }

    #[test]
    fn reset_is_deterministic_and_frozen() {
        let config = EnvConfig::<f64>::default();
        let (s1, e1) = reset(&config, &mut stream(9, "scenario", 4));
        let (s2, e2) = reset(&config, &mut stream(9, "scenario", 4));
        assert_eq!(e1, e2);
        assert_eq!(s1.prm_bn, s2.prm_bn);
        // channels stay fixed across steps of one episode
        let action = RawAction::zeros(4);
        let a = step(&e1, &action, &s1, &config).unwrap();
        let b = step(&a.next_state, &action, &s1, &config).unwrap();
        assert_eq!(a.next_state.channels, b.next_state.channels);
    }

    #[test]
    fn zero_action_decodes_to_midpoints() {
        let config = SystemConfig::<f64>::default();
        let sol = decode_action(&RawAction::zeros(4), &config);
        let half = config.region_side / 2.0;
        assert!((sol.t_d.x - half).abs() < 1e-15);
        assert!((sol.r_f.y - half).abs() < 1e-15);
        assert!((sol.p_n - config.p_nf / 2.0).abs() < 1e-15);
        assert!(sol.w_f.iter().all(|z| z.re == 0.0 && z.im == 0.0));
    }

    #[test]
    fn extreme_action_reaches_enlarged_ranges() {
        let config = SystemConfig::<f64>::default();
        let n = config.n_bs_antennas;
        let mut raw = RawAction::zeros(n);
        for x in raw.components.iter_mut() {
            *x = 1.0;
        }
        let sol = decode_action(&raw, &config);
        assert!((sol.r_f.x - 1.25 * config.region_side).abs() < 1e-12);
        assert!((sol.p_n - 1.25 * config.p_nf).abs() < 1e-12);
        // out-of-box raw input is clamped, not extrapolated
        for x in raw.components.iter_mut() {
            *x = 7.0;
        }
        let clamped = decode_action(&raw, &config);
        assert_eq!(clamped, sol);
    }

    #[test]
    fn encode_decode_roundtrip() {
        let config = SystemConfig::<f64>::default();
        let center = config.region_center();
        let sol = CandidateSolution {
            w_f: vec![num_complex::Complex::new(0.05, -0.02); 4],
            w_n: vec![num_complex::Complex::new(-0.01, 0.03); 4],
            p_n: 0.004,
            t_d: MaPosition::new(0.003, 0.017),
            r_n: center,
            r_f: MaPosition::new(0.02, 0.0),
        };
        let decoded = decode_action(&encode_solution(&sol, &config), &config);
        assert!((decoded.p_n - sol.p_n).abs() < 1e-9);
        assert!((decoded.t_d.x - sol.t_d.x).abs() < 1e-9);
        assert!((decoded.r_f.x - sol.r_f.x).abs() < 1e-9);
        for (a, b) in decoded.w_f.iter().zip(&sol.w_f) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn step_normalizes_bs_power_and_prices_penalties() {
        let config = EnvConfig::<f64>::default();
        let (scenario, state) = reset(&config, &mut stream(5, "scenario", 2));
        let mut raw = RawAction::zeros(4);
        for (i, x) in raw.components.iter_mut().enumerate() {
            *x = if i % 3 == 0 { 0.4 } else { -0.2 };
        }
        let out = step(&state, &raw, &scenario, &config).unwrap();
        let total = out.next_state.prev_power_wf + out.next_state.prev_power_wn;
        assert!((total - config.system.p_t).abs() < 1e-9);
        assert_eq!(
            out.reward.total,
            out.reward.sum_rate - out.reward.penalty_qos - out.reward.penalty_region - out.reward.penalty_power
        );
        // placing r_F outside its region costs exactly one penalty
        let mut bad = raw.clone();
        let n = config.system.n_bs_antennas;
        bad.components[4 * n + 5] = 1.0; // r_F.x -> 1.25 A
        let out_bad = step(&state, &bad, &scenario, &config).unwrap();
        assert_eq!(out_bad.reward.penalty_region, config.pen);
    }

    #[test]
    fn step_is_pure() {
        let config = EnvConfig::<f64>::default();
        let (scenario, state) = reset(&config, &mut stream(6, "scenario", 3));
        let mut raw = RawAction::zeros(4);
        raw.components[0] = 0.3;
        raw.components[9] = -0.8;
        let a = step(&state, &raw, &scenario, &config).unwrap();
        let b = step(&state, &raw, &scenario, &config).unwrap();
        assert_eq!(a.next_state, b.next_state);
        assert_eq!(a.reward, b.reward);
    }
}
