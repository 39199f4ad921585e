//! The joint beamforming/power/placement problem: objective, constraint
//! slacks, beamformer power normalization and the penalty reward.
//!
//! The BS power budget is enforced by normalization (never penalized); QoS,
//! relay power and placement constraints are enforced through indicator
//! penalties so a learning agent can propose infeasible actions and be
//! charged for them.

use num_complex::Complex;

use crate::channel::{assemble_channels, ChannelSet, ScenarioRealization, SystemConfig};
use crate::error::{Error, Result};
use crate::link_rates::{evaluate_links, vector_power, CandidateSolution, LinkEvaluation};
use crate::scalar::Scalar;

/// Signed margins of every constraint; a solution is feasible iff all are
/// non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSlacks<T> {
    /// `P_T − ‖w_F‖² − ‖w_N‖²` \[W\].
    pub bs_power: T,
    /// `P_N` \[W\] (non-negative relay power).
    pub relay_power_low: T,
    /// `P_NF − P_N` \[W\] (relay budget).
    pub relay_power_high: T,
    /// `R_{N→N} − R_th` \[bits/s/Hz\].
    pub qos_n: T,
    /// `R_{F→F} − R_th` \[bits/s/Hz\].
    pub qos_f: T,
    /// `R_{N→F} − R_th` \[bits/s/Hz\] (successful SIC at user N).
    pub sic: T,
    /// Signed distance of t_d to the mobility square \[m\], ≥ 0 inside.
    pub region_td: T,
    /// Signed distance of r_N to the mobility square \[m\].
    pub region_rn: T,
    /// Signed distance of r_F to the mobility square \[m\].
    pub region_rf: T,
    /// `‖t_d − r_N‖ − λ/2` \[m\] while the relay transmits, 0 otherwise.
    pub ma_separation: T,
}

impl<T: Scalar> ConstraintSlacks<T> {
    pub fn is_feasible(&self) -> bool {
        self.min_slack() >= T::zero()
    }

    pub fn min_slack(&self) -> T {
        [
            self.bs_power,
            self.relay_power_low,
            self.relay_power_high,
            self.qos_n,
            self.qos_f,
            self.sic,
            self.region_td,
            self.region_rn,
            self.region_rf,
            self.ma_separation,
        ]
        .into_iter()
        .fold(T::infinity(), T::min)
    }

    /// QoS margin driving the first penalty indicator:
    /// `min(R_{N→N}, R_{N→F}, R_{F→F}) − R_th`.
    pub fn qos_margin(&self) -> T {
        self.qos_n.min(self.sic).min(self.qos_f)
    }

    /// Placement margin driving the second penalty indicator: every MA inside
    /// its region and the transmit/receive separation respected.
    pub fn placement_margin(&self) -> T {
        self.region_td
            .min(self.region_rn)
            .min(self.region_rf)
            .min(self.ma_separation)
    }

    /// Relay-power margin driving the third penalty indicator:
    /// `0 ≤ P_N ≤ P_NF`.
    pub fn relay_power_margin(&self) -> T {
        self.relay_power_low.min(self.relay_power_high)
    }

    /// Number of violated penalty groups (QoS, placement, relay power).
    pub fn violation_count(&self) -> usize {
        [
            self.qos_margin(),
            self.placement_margin(),
            self.relay_power_margin(),
        ]
        .into_iter()
        .filter(|m| *m < T::zero())
        .count()
    }

    /// Total constraint deficit, for ranking infeasible candidates.
    pub fn total_deficit(&self) -> T {
        [
            self.bs_power,
            self.relay_power_low,
            self.relay_power_high,
            self.qos_n,
            self.qos_f,
            self.sic,
            self.region_td,
            self.region_rn,
            self.region_rf,
            self.ma_separation,
        ]
        .into_iter()
        .map(|s| s.min(T::zero()))
        .fold(T::zero(), |acc, s| acc - s)
    }
}

/// Reward of one environment step, split into its terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBreakdown<T> {
    /// Objective value `R_{N→N} + R_{F→F}`.
    pub sum_rate: T,
    /// `pen` if the QoS indicator fired, else 0.
    pub penalty_qos: T,
    /// `pen` if the placement indicator fired, else 0.
    pub penalty_region: T,
    /// `pen` if the relay-power indicator fired, else 0.
    pub penalty_power: T,
    /// `sum_rate − penalty_qos − penalty_region − penalty_power`.
    pub total: T,
}

/// Exact violation step function: 0 for `x ≥ 0`, 1 for `x < 0`.
pub fn indicator_violation<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::zero()
    } else {
        T::one()
    }
}

/// Scale both beamformers by `√(P_T/P_t)` so the total BS power equals the
/// budget; directions are preserved.
///
/// The scaled power never exceeds `p_t` (a final one-ulp nudge guards against
/// rounding past the budget), so the BS power slack of a normalized solution
/// is deterministically non-negative. An exactly-normalized input is returned
/// bit-identically.
pub fn normalize_beamformers<T: Scalar>(
    w_f: &[Complex<T>],
    w_n: &[Complex<T>],
    p_t: T,
) -> Result<(Vec<Complex<T>>, Vec<Complex<T>>)> {
    let total = vector_power(w_f) + vector_power(w_n);
    if !(total > T::zero()) {
        return Err(Error::DegenerateInput("zero-power beamformer pair"));
    }
    let scale = (p_t / total).sqrt();
    let mut out_f: Vec<Complex<T>> = w_f.iter().map(|z| z * scale).collect();
    let mut out_n: Vec<Complex<T>> = w_n.iter().map(|z| z * scale).collect();
    for _ in 0..2 {
        let now = vector_power(&out_f) + vector_power(&out_n);
        if now <= p_t {
            return Ok((out_f, out_n));
        }
        let polish = (p_t / now).sqrt();
        for z in out_f.iter_mut().chain(out_n.iter_mut()) {
            *z = *z * polish;
        }
    }
    let now = vector_power(&out_f) + vector_power(&out_n);
    if now > p_t {
        // rounding trapped us one ulp above the budget; nudge decisively
        let nudge = T::one() - T::of(4.0) * T::epsilon();
        for z in out_f.iter_mut().chain(out_n.iter_mut()) {
            *z = *z * nudge;
        }
    }
    Ok((out_f, out_n))
}

/// Like [`normalize_beamformers`] but substitutes an equal-power,
/// uniform-phase pair for the degenerate all-zero input.
pub fn normalize_or_uniform<T: Scalar>(
    w_f: &[Complex<T>],
    w_n: &[Complex<T>],
    p_t: T,
    n_antennas: usize,
) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    match normalize_beamformers(w_f, w_n, p_t) {
        Ok(pair) => pair,
        Err(_) => {
            let ones = vec![Complex::new(T::one(), T::zero()); n_antennas];
            normalize_beamformers(&ones, &ones, p_t).expect("uniform pair has positive power")
        }
    }
}

/// Coordinate-wise signed distance of `pos` to the square `[0, side]²`:
/// the smallest margin over the four box faces, negative outside.
fn region_slack<T: Scalar>(pos: crate::channel::MaPosition<T>, side: T) -> T {
    pos.x.min(side - pos.x).min(pos.y).min(side - pos.y)
}

/// Constraint slacks from already-computed rates. Shared by
/// [`crate::link_rates::evaluate_links`] and [`compute_slacks`].
pub fn slacks_from_rates<T: Scalar>(
    r_nn: T,
    r_ff: T,
    r_nf: T,
    sol: &CandidateSolution<T>,
    config: &SystemConfig<T>,
) -> ConstraintSlacks<T> {
    let side = config.region_side;
    // With the relay silent there is no self-interference, so the
    // transmit/receive separation rule has nothing to protect.
    let ma_separation = if sol.p_n > T::zero() {
        sol.t_d.distance(&sol.r_n) - config.wavelength / T::of(2.0)
    } else {
        T::zero()
    };
    ConstraintSlacks {
        bs_power: config.p_t - sol.bs_power(),
        relay_power_low: sol.p_n,
        relay_power_high: config.p_nf - sol.p_n,
        qos_n: r_nn - config.r_th,
        qos_f: r_ff - config.r_th,
        sic: r_nf - config.r_th,
        region_td: region_slack(sol.t_d, side),
        region_rn: region_slack(sol.r_n, side),
        region_rf: region_slack(sol.r_f, side),
        ma_separation,
    }
}

/// Constraint slacks of an evaluated solution.
pub fn compute_slacks<T: Scalar>(
    eval: &LinkEvaluation<T>,
    sol: &CandidateSolution<T>,
    config: &SystemConfig<T>,
) -> ConstraintSlacks<T> {
    slacks_from_rates(eval.r_nn, eval.r_ff, eval.r_nf, sol, config)
}

/// Penalty reward: the objective minus `pen` for each fired indicator
/// (QoS, placement, relay power). A margin of exactly zero fires nothing.
pub fn reward<T: Scalar>(
    eval: &LinkEvaluation<T>,
    slacks: &ConstraintSlacks<T>,
    pen: T,
) -> RewardBreakdown<T> {
    assert!(pen > T::zero(), "penalty magnitude must be positive");
    let penalty_qos = pen * indicator_violation(slacks.qos_margin());
    let penalty_region = pen * indicator_violation(slacks.placement_margin());
    let penalty_power = pen * indicator_violation(slacks.relay_power_margin());
    let sum_rate = eval.sum_rate;
    RewardBreakdown {
        sum_rate,
        penalty_qos,
        penalty_region,
        penalty_power,
        total: sum_rate - penalty_qos - penalty_region - penalty_power,
    }
}

/// A fully evaluated candidate: normalized solution, synthesized channels,
/// link evaluation and reward.
#[derive(Debug, Clone)]
pub struct CandidateAssessment<T> {
    /// The solution with beamformers normalized to the BS budget.
    pub solution: CandidateSolution<T>,
    pub channels: ChannelSet<T>,
    pub evaluation: LinkEvaluation<T>,
    pub reward: RewardBreakdown<T>,
}

/// The one evaluation pipeline every consumer goes through: normalize the
/// beamformers (uniform fallback on the degenerate all-zero pair), rebuild
/// the channels at the proposed MA positions, evaluate the links and price
/// the reward.
pub fn assess<T: Scalar>(
    scenario: &ScenarioRealization<T>,
    config: &SystemConfig<T>,
    mut solution: CandidateSolution<T>,
    pen: T,
) -> Result<CandidateAssessment<T>> {
    let (w_f, w_n) =
        normalize_or_uniform(&solution.w_f, &solution.w_n, config.p_t, config.n_bs_antennas);
    solution.w_f = w_f;
    solution.w_n = w_n;
    let channels = assemble_channels(scenario, solution.t_d, solution.r_n, solution.r_f, config)?;
    let evaluation = evaluate_links(&channels, &solution, scenario.h_si, config)?;
    let reward = reward(&evaluation, &evaluation.slacks, pen);
    Ok(CandidateAssessment {
        solution,
        channels,
        evaluation,
        reward,
    })
}
