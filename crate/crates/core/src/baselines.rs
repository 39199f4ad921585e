//! Benchmark suite: a budgeted derivative-free reference optimizer and the
//! reduced schemes it compares (cooperation on/off × movable/fixed antennas).
//!
//! The reference optimizer is multi-start random search over the feasible box
//! followed by coordinate-wise pattern refinement with step halving.
//! Beamformers are normalized to the BS budget before every evaluation and
//! infeasible candidates are rejected (tracked only as a fallback when no
//! feasible point is found).

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::{assemble_channels, sample_scenario, ChannelSet, MaPosition, ScenarioRealization, SystemConfig};
use crate::error::Result;
use crate::link_rates::CandidateSolution;
use crate::problem::{normalize_or_uniform, ConstraintSlacks};
use crate::scalar::Scalar;
use crate::seed;

/// The four compared schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Cooperative NOMA with movable antennas (the full model).
    MaCnoma,
    /// NOMA with movable antennas, no device-link cooperation.
    MaNoma,
    /// Cooperative NOMA with fixed antennas.
    FCnoma,
    /// Plain NOMA with fixed antennas.
    FNoma,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::MaCnoma, Scheme::MaNoma, Scheme::FCnoma, Scheme::FNoma];

    /// Whether the relay power is a free variable (otherwise forced to 0).
    pub fn cooperation_enabled(self) -> bool {
        matches!(self, Scheme::MaCnoma | Scheme::FCnoma)
    }

    /// Whether the MA positions are free variables (otherwise pinned).
    pub fn ma_enabled(self) -> bool {
        matches!(self, Scheme::MaCnoma | Scheme::MaNoma)
    }

    pub fn label(self) -> &'static str {
        match self {
            Scheme::MaCnoma => "MA-CNOMA",
            Scheme::MaNoma => "MA-NOMA",
            Scheme::FCnoma => "F-CNOMA",
            Scheme::FNoma => "F-NOMA",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Pinned transmit-MA position for the fixed cooperative scheme: offset from
/// the receive MA along x so the λ/2 transmit/receive separation holds with
/// margin whenever the region is large enough to allow it.
fn pinned_transmit_ma<T: Scalar>(config: &SystemConfig<T>) -> MaPosition<T> {
    let center = config.region_center();
    let offset = T::of(0.75) * config.wavelength;
    MaPosition::new((center.x + offset).min(config.region_side), center.y)
}

/// Force a solution onto a scheme: zero relay power without cooperation,
/// pinned MA positions without movable antennas.
pub fn apply_scheme<T: Scalar>(
    mut sol: CandidateSolution<T>,
    scheme: Scheme,
    config: &SystemConfig<T>,
) -> CandidateSolution<T> {
    if !scheme.cooperation_enabled() {
        sol.p_n = T::zero();
    }
    if !scheme.ma_enabled() {
        let center = config.region_center();
        sol.r_n = center;
        sol.r_f = center;
        sol.t_d = if scheme.cooperation_enabled() {
            pinned_transmit_ma(config)
        } else {
            center
        };
    }
    sol
}

/// Outcome of one reference-optimizer run.
#[derive(Debug, Clone)]
pub struct OptimizerReport<T> {
    pub best_solution: CandidateSolution<T>,
    /// Best feasible objective, or the objective of the fallback candidate
    /// when `feasible` is false.
    pub best_objective: T,
    pub feasible: bool,
    pub evaluations_used: usize,
}

/// Feasible-first candidate ordering: any feasible point beats any
/// infeasible one; feasible points compare by objective, infeasible ones by
/// (violation count, total deficit).
#[derive(Debug, Clone, Copy)]
struct Rank<T> {
    feasible: bool,
    objective: T,
    violations: usize,
    deficit: T,
}

impl<T: Scalar> Rank<T> {
    fn of(objective: T, slacks: &ConstraintSlacks<T>) -> Self {
        Rank {
            feasible: slacks.is_feasible(),
            objective,
            violations: slacks.violation_count(),
            deficit: slacks.total_deficit(),
        }
    }

    fn better_than(&self, other: &Rank<T>) -> bool {
        match (self.feasible, other.feasible) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => self.objective > other.objective,
            (false, false) => {
                (self.violations, self.deficit) < (other.violations, other.deficit)
            }
        }
    }
}

/// Evaluator that reuses the synthesized channels while only beamformers or
/// relay power move; positions trigger a re-assembly.
struct CandidateEvaluator<'a, T> {
    scenario: &'a ScenarioRealization<T>,
    config: &'a SystemConfig<T>,
    cached: Option<(MaPosition<T>, MaPosition<T>, MaPosition<T>, ChannelSet<T>)>,
    evaluations: usize,
}

struct Evaluated<T> {
    solution: CandidateSolution<T>,
    rank: Rank<T>,
}

impl<'a, T: Scalar> CandidateEvaluator<'a, T> {
    fn new(scenario: &'a ScenarioRealization<T>, config: &'a SystemConfig<T>) -> Self {
        CandidateEvaluator {
            scenario,
            config,
            cached: None,
            evaluations: 0,
        }
    }

    fn evaluate(&mut self, mut sol: CandidateSolution<T>) -> Result<Evaluated<T>> {
        let config = self.config;
        let (w_f, w_n) = normalize_or_uniform(&sol.w_f, &sol.w_n, config.p_t, config.n_bs_antennas);
        sol.w_f = w_f;
        sol.w_n = w_n;
        let reuse = matches!(
            &self.cached,
            Some((t_d, r_n, r_f, _)) if *t_d == sol.t_d && *r_n == sol.r_n && *r_f == sol.r_f
        );
        if !reuse {
            let channels = assemble_channels(self.scenario, sol.t_d, sol.r_n, sol.r_f, config)?;
            self.cached = Some((sol.t_d, sol.r_n, sol.r_f, channels));
        }
        let channels = &self.cached.as_ref().expect("just filled").3;
        let eval = crate::link_rates::evaluate_links(channels, &sol, self.scenario.h_si, config)?;
        self.evaluations += 1;
        Ok(Evaluated {
            solution: sol,
            rank: Rank::of(eval.sum_rate, &eval.slacks),
        })
    }
}

/// Scheme-agnostic random candidate. The RNG consumption never depends on
/// the scheme, so projecting one common draw stream keeps the start sets of
/// nested schemes comparable (common random numbers).
fn random_draw<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    config: &SystemConfig<T>,
) -> CandidateSolution<T> {
    let n = config.n_bs_antennas;
    let entry_scale = (config.p_t / T::of(2.0 * n as f64)).sqrt();
    let gaussian_vec = |rng: &mut R| -> Vec<Complex<T>> {
        (0..n)
            .map(|_| {
                Complex::new(
                    T::standard_normal(rng) * entry_scale,
                    T::standard_normal(rng) * entry_scale,
                )
            })
            .collect()
    };
    let w_f = gaussian_vec(rng);
    let w_n = gaussian_vec(rng);
    let side = config.region_side;
    let uniform_pos =
        |rng: &mut R| MaPosition::new(rng.random_range(T::zero()..side), rng.random_range(T::zero()..side));
    let p_n = rng.random_range(T::zero()..config.p_nf);
    let (mut t_d, mut r_n) = (uniform_pos(rng), uniform_pos(rng));
    // keep the transmit/receive pair separated where the box allows it
    let min_sep = config.wavelength / T::of(2.0);
    for _ in 0..64 {
        if t_d.distance(&r_n) >= min_sep {
            break;
        }
        t_d = uniform_pos(rng);
        r_n = uniform_pos(rng);
    }
    let r_f = uniform_pos(rng);
    CandidateSolution {
        w_f,
        w_n,
        p_n,
        t_d,
        r_n,
        r_f,
    }
}

/// Deterministic neutral start: centers, uniform beams, no cooperation.
fn neutral_start<T: Scalar>(config: &SystemConfig<T>, scheme: Scheme) -> CandidateSolution<T> {
    let n = config.n_bs_antennas;
    let center = config.region_center();
    let uniform = vec![Complex::new(T::one(), T::zero()); n];
    apply_scheme(
        CandidateSolution {
            w_f: uniform.clone(),
            w_n: uniform,
            p_n: T::zero(),
            t_d: center,
            r_n: center,
            r_f: center,
        },
        scheme,
        config,
    )
}

const DEFAULT_STARTS: usize = 64;
const INITIAL_STEP: f64 = 0.25;
const MIN_STEP: f64 = 1e-3;

/// Coordinates the refinement walks over, given the scheme's frozen blocks.
fn active_coords(n: usize, scheme: Scheme) -> Vec<usize> {
    let mut coords: Vec<usize> = (0..4 * n).collect();
    if scheme.cooperation_enabled() {
        coords.push(4 * n);
    }
    if scheme.ma_enabled() {
        coords.extend(4 * n + 1..4 * n + 7);
    }
    coords
}

fn perturbed<T: Scalar>(
    sol: &CandidateSolution<T>,
    coord: usize,
    delta: T,
    config: &SystemConfig<T>,
    scheme: Scheme,
) -> CandidateSolution<T> {
    let n = config.n_bs_antennas;
    let mut out = sol.clone();
    if coord < 4 * n {
        let vec_idx = coord / (2 * n);
        let within = coord % (2 * n);
        let entry = within / 2;
        let target = if vec_idx == 0 { &mut out.w_f } else { &mut out.w_n };
        if within % 2 == 0 {
            target[entry].re = target[entry].re + delta;
        } else {
            target[entry].im = target[entry].im + delta;
        }
    } else if coord == 4 * n {
        out.p_n = (out.p_n + delta).max(T::zero()).min(config.p_nf);
    } else {
        let side = config.region_side;
        let k = coord - (4 * n + 1);
        let pos = match k / 2 {
            0 => &mut out.t_d,
            1 => &mut out.r_n,
            _ => &mut out.r_f,
        };
        if k % 2 == 0 {
            pos.x = (pos.x + delta).max(T::zero()).min(side);
        } else {
            pos.y = (pos.y + delta).max(T::zero()).min(side);
        }
    }
    apply_scheme(out, scheme, config)
}

fn coord_scale<T: Scalar>(coord: usize, n: usize, config: &SystemConfig<T>) -> T {
    if coord < 4 * n {
        (config.p_t / T::of(2.0 * n as f64)).sqrt()
    } else if coord == 4 * n {
        config.p_nf
    } else {
        config.region_side
    }
}

/// Budgeted global-then-local search for the best feasible solution of one
/// scheme on one frozen scenario. Deterministic given the RNG state;
/// `extra_starts` lets sweeps warm-start nested problems.
pub fn reference_optimize<T: Scalar, R: Rng + ?Sized>(
    scenario: &ScenarioRealization<T>,
    config: &SystemConfig<T>,
    scheme: Scheme,
    budget: usize,
    rng: &mut R,
    extra_starts: &[CandidateSolution<T>],
) -> Result<OptimizerReport<T>> {
    assert!(budget >= 1, "optimizer budget must be at least 1");
    let n = config.n_bs_antennas;
    let coords = active_coords(n, scheme);
    let mut evaluator = CandidateEvaluator::new(scenario, config);
    let mut best: Option<Evaluated<T>> = None;

    // rounds of (multi-start, refine) until the budget is spent; one round
    // usually converges, extra rounds turn leftover budget into restarts
    let mut first_round = true;
    'rounds: while evaluator.evaluations < budget {
        let mut starts: Vec<CandidateSolution<T>> = Vec::new();
        if first_round {
            starts.extend(extra_starts.iter().cloned().map(|s| apply_scheme(s, scheme, config)));
            starts.push(neutral_start(config, scheme));
        }
        for _ in 0..DEFAULT_STARTS {
            let draw = random_draw(rng, config);
            if scheme.cooperation_enabled() {
                // also probe the draw with the relay silenced: residual
                // self-interference can make cooperation a net loss, and this
                // keeps the start set a superset of the non-cooperative one
                let mut silent = draw.clone();
                silent.p_n = T::zero();
                starts.push(apply_scheme(silent, scheme, config));
            }
            starts.push(apply_scheme(draw, scheme, config));
        }

        let mut round_best: Option<Evaluated<T>> = None;
        for start in starts {
            if evaluator.evaluations >= budget {
                break;
            }
            let cand = evaluator.evaluate(start)?;
            if round_best.as_ref().is_none_or(|b| cand.rank.better_than(&b.rank)) {
                round_best = Some(cand);
            }
        }
        let Some(mut round_best) = round_best else { break };
        // the global best is worth polishing further on later rounds
        if let Some(b) = &best {
            if b.rank.better_than(&round_best.rank) {
                round_best = Evaluated {
                    solution: b.solution.clone(),
                    rank: b.rank,
                };
            }
        }

        // coordinate-wise pattern refinement with step halving
        let mut step = T::of(INITIAL_STEP);
        let min_step = T::of(MIN_STEP);
        while step >= min_step {
            let mut improved = false;
            for &coord in &coords {
                let scale = coord_scale(coord, n, config);
                for sign in [T::one(), -T::one()] {
                    if evaluator.evaluations >= budget {
                        if best
                            .as_ref()
                            .is_none_or(|b| round_best.rank.better_than(&b.rank))
                        {
                            best = Some(round_best);
                        }
                        break 'rounds;
                    }
                    let cand = evaluator
                        .evaluate(perturbed(&round_best.solution, coord, sign * step * scale, config, scheme))?;
                    if cand.rank.better_than(&round_best.rank) {
                        round_best = cand;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                step = step / T::of(2.0);
            }
        }
        if best
            .as_ref()
            .is_none_or(|b| round_best.rank.better_than(&b.rank))
        {
            best = Some(round_best);
        }
        first_round = false;
    }
    let best = best.expect("budget >= 1 evaluates at least one start");

    Ok(OptimizerReport {
        feasible: best.rank.feasible,
        best_objective: best.rank.objective,
        best_solution: best.solution,
        evaluations_used: evaluator.evaluations,
    })
}

/// Sweep axis: BS power budget in watts, or the mobility-region side as a
/// fraction of the configured one.
#[derive(Debug, Clone)]
pub enum SweepAxis<T> {
    BsPower(Vec<T>),
    RegionScale(Vec<T>),
}

impl<T: Scalar> SweepAxis<T> {
    fn variable(&self) -> &'static str {
        match self {
            SweepAxis::BsPower(_) => "bs_power_w",
            SweepAxis::RegionScale(_) => "region_scale",
        }
    }

    /// Axis values sorted ascending (sweeps warm-start upward).
    fn sorted_values(&self) -> Vec<T> {
        let mut v = match self {
            SweepAxis::BsPower(v) | SweepAxis::RegionScale(v) => v.clone(),
        };
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite sweep values"));
        v
    }

    fn config_at(&self, base: &SystemConfig<T>, value: T) -> SystemConfig<T> {
        let mut config = base.clone();
        match self {
            SweepAxis::BsPower(_) => config.p_t = value,
            SweepAxis::RegionScale(_) => config.region_side = base.region_side * value,
        }
        config
    }
}

/// One row of a sweep result.
#[derive(Debug, Clone)]
pub struct SweepPoint<T> {
    pub scheme: Scheme,
    pub variable: &'static str,
    pub value: T,
    pub mean_rate: T,
    pub stderr: T,
    pub n_scenarios: usize,
}

/// Mean best-feasible objective of a scheme at every sweep point, averaged
/// over common random scenarios. The same scenario stream is used for every
/// scheme and sweep point (common random numbers), scenarios run in
/// parallel, and within one scenario the points run in ascending order with
/// the previous best as a warm start.
pub fn evaluate_scheme_sweep<T: Scalar>(
    config: &SystemConfig<T>,
    scheme: Scheme,
    sweep: &SweepAxis<T>,
    n_scenarios: usize,
    budget: usize,
    master_seed: u64,
) -> Result<Vec<SweepPoint<T>>> {
    assert!(n_scenarios >= 1);
    config.validate()?;
    let values = sweep.sorted_values();
    let configs: Vec<SystemConfig<T>> = values.iter().map(|v| sweep.config_at(config, *v)).collect();

    let per_scenario: Result<Vec<Vec<T>>> = (0..n_scenarios)
        .into_par_iter()
        .map(|i| {
            let mut scen_rng = seed::stream(master_seed, "sweep-scen", i as u64);
            let scenario = sample_scenario(config, &mut scen_rng);
            let mut warm: Option<CandidateSolution<T>> = None;
            let mut objectives = Vec::with_capacity(configs.len());
            for (p, point_config) in configs.iter().enumerate() {
                let mut opt_rng = seed::stream(master_seed, "optimizer", seed::compose_index(p, i));
                let starts: Vec<CandidateSolution<T>> = warm.iter().cloned().collect();
                let report =
                    reference_optimize(&scenario, point_config, scheme, budget, &mut opt_rng, &starts)?;
                objectives.push(if report.feasible {
                    report.best_objective
                } else {
                    T::zero()
                });
                warm = Some(report.best_solution);
            }
            Ok(objectives)
        })
        .collect();
    let per_scenario = per_scenario?;

    Ok(values
        .iter()
        .enumerate()
        .map(|(p, value)| {
            let samples: Vec<T> = per_scenario.iter().map(|row| row[p]).collect();
            let (mean, stderr) = mean_stderr(&samples);
            SweepPoint {
                scheme,
                variable: sweep.variable(),
                value: *value,
                mean_rate: mean,
                stderr,
                n_scenarios,
            }
        })
        .collect())
}

fn mean_stderr<T: Scalar>(samples: &[T]) -> (T, T) {
    let n = T::of(samples.len() as f64);
    let mean = samples.iter().copied().sum::<T>() / n;
    if samples.len() < 2 {
        return (mean, T::zero());
    }
    let var = samples
        .iter()
        .map(|x| (*x - mean) * (*x - mean))
        .sum::<T>()
        / (n - T::one());
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream;

    #[test]
    fn scheme_flags() {
        assert!(Scheme::MaCnoma.cooperation_enabled() && Scheme::MaCnoma.ma_enabled());
        assert!(!Scheme::MaNoma.cooperation_enabled() && Scheme::MaNoma.ma_enabled());
        assert!(Scheme::FCnoma.cooperation_enabled() && !Scheme::FCnoma.ma_enabled());
        assert!(!Scheme::FNoma.cooperation_enabled() && !Scheme::FNoma.ma_enabled());
    }

    fn arbitrary_solution(config: &SystemConfig<f64>) -> CandidateSolution<f64> {
        CandidateSolution {
            w_f: vec![Complex::new(0.1, -0.05); config.n_bs_antennas],
            w_n: vec![Complex::new(-0.02, 0.08); config.n_bs_antennas],
            p_n: 0.004,
            t_d: MaPosition::new(0.001, 0.002),
            r_n: MaPosition::new(0.015, 0.013),
            r_f: MaPosition::new(0.007, 0.019),
        }
    }

    #[test]
    fn apply_scheme_pins_and_zeros() {
        let config = SystemConfig::<f64>::default();
        let sol = arbitrary_solution(&config);
        // full model: identity
        assert_eq!(apply_scheme(sol.clone(), Scheme::MaCnoma, &config), sol);
        // plain NOMA with fixed antennas: no relay power, everything centered
        let f = apply_scheme(sol.clone(), Scheme::FNoma, &config);
        let center = config.region_center();
        assert_eq!(f.p_n, 0.0);
        assert_eq!(f.t_d, center);
        assert_eq!(f.r_n, center);
        assert_eq!(f.r_f, center);
        // movable NOMA: positions untouched, power zeroed
        let m = apply_scheme(sol.clone(), Scheme::MaNoma, &config);
        assert_eq!(m.p_n, 0.0);
        assert_eq!(m.t_d, sol.t_d);
        // fixed cooperative: pinned transmit MA keeps the λ/2 separation
        let c = apply_scheme(sol, Scheme::FCnoma, &config);
        assert!(c.t_d.distance(&c.r_n) >= config.wavelength / 2.0);
        assert!(c.p_n > 0.0);
    }

    #[test]
    fn more_budget_never_hurts() {
        let config = SystemConfig::<f64>::default();
        let scenario = sample_scenario(&config, &mut stream(21, "sweep-scen", 0));
        let mut last = f64::NEG_INFINITY;
        for budget in [80, 160, 320] {
            let report = reference_optimize(
                &scenario,
                &config,
                Scheme::MaCnoma,
                budget,
                &mut stream(22, "optimizer", 0),
                &[],
            )
            .unwrap();
            assert!(report.evaluations_used <= budget);
            assert!(report.best_objective >= last, "budget {budget}");
            last = report.best_objective;
        }
    }

    #[test]
    fn reported_feasible_solutions_recheck_clean() {
        let config = SystemConfig::<f64>::default();
        for i in 0..5 {
            let scenario = sample_scenario(&config, &mut stream(23, "sweep-scen", i));
            for scheme in Scheme::ALL {
                let report = reference_optimize(
                    &scenario,
                    &config,
                    scheme,
                    400,
                    &mut stream(24, "optimizer", i),
                    &[],
                )
                .unwrap();
                if report.feasible {
                    let a = crate::problem::assess(&scenario, &config, report.best_solution.clone(), 10.0)
                        .unwrap();
                    assert!(a.evaluation.feasible, "{scheme} scenario {i}");
                    assert!((a.evaluation.sum_rate - report.best_objective).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn warm_start_guarantees_no_regression() {
        let config = SystemConfig::<f64>::default();
        let scenario = sample_scenario(&config, &mut stream(25, "sweep-scen", 1));
        let first = reference_optimize(
            &scenario,
            &config,
            Scheme::MaCnoma,
            300,
            &mut stream(26, "optimizer", 0),
            &[],
        )
        .unwrap();
        let warmed = reference_optimize(
            &scenario,
            &config,
            Scheme::MaCnoma,
            300,
            &mut stream(26, "optimizer", 1),
            &[first.best_solution.clone()],
        )
        .unwrap();
        assert!(warmed.best_objective >= first.best_objective - 1e-12);
    }

    /// Single-antenna, single-path plain NOMA reduces to a 1-D power split;
    /// a dense grid scan is an independent near-exact reference.
    #[test]
    fn fnoma_single_antenna_matches_grid_scan() {
        // single antenna loses the beamforming gain, so give the far user a
        // workable SNR with a higher BS budget
        let config = SystemConfig::<f64> {
            n_bs_antennas: 1,
            l_b: 1,
            l_a: 1,
            l_r: 1,
            p_t: crate::units::dbm_to_watts(21.0),
            ..SystemConfig::default()
        };
        let mut matched = 0;
        for i in 0..4 {
            let scenario = sample_scenario(&config, &mut stream(27, "sweep-scen", i));
            let center = config.region_center();
            let h_n = crate::channel::assemble_bs_user_channel(
                &scenario,
                center,
                crate::channel::UserLink::Near,
                &config,
            )
            .unwrap()[0];
            let h_f = crate::channel::assemble_bs_user_channel(
                &scenario,
                center,
                crate::channel::UserLink::Far,
                &config,
            )
            .unwrap()[0];
            let (gn, gf) = (h_n.norm_sqr(), h_f.norm_sqr());
            let (p_t, s2, r_th) = (config.p_t, config.sigma2, config.r_th);
            let mut grid_best: Option<f64> = None;
            for k in 0..=4000 {
                let t = k as f64 / 4000.0;
                let (pf, pn) = (t * p_t, (1.0 - t) * p_t);
                let r_nf = (1.0 + gn * pf / (gn * pn + s2)).log2();
                let r_nn = (1.0 + gn * pn / s2).log2();
                let r_mrc = (1.0 + gf * pf / (gf * pn + s2)).log2();
                let r_ff = r_mrc.min(r_nf);
                if r_nn >= r_th && r_ff >= r_th && r_nf >= r_th {
                    let obj = r_nn + r_ff;
                    if grid_best.is_none_or(|b| obj > b) {
                        grid_best = Some(obj);
                    }
                }
            }
            let Some(grid_best) = grid_best else { continue };
            let report = reference_optimize(
                &scenario,
                &config,
                Scheme::FNoma,
                2500,
                &mut stream(28, "optimizer", i),
                &[],
            )
            .unwrap();
            assert!(report.feasible, "scenario {i}");
            assert!(
                (report.best_objective - grid_best).abs() / grid_best < 0.01,
                "scenario {i}: optimizer {} vs grid {grid_best}",
                report.best_objective
            );
            matched += 1;
        }
        assert!(matched >= 2, "too few feasible grid instances");
    }

    #[test]
    fn feasible_set_nesting_in_the_mean() {
        let config = SystemConfig::<f64>::default();
        let n_scenarios = 40;
        let budget = 1500;
        let mut means = std::collections::HashMap::new();
        for scheme in Scheme::ALL {
            let mut total = 0.0;
            for i in 0..n_scenarios {
                let scenario = sample_scenario(&config, &mut stream(30, "sweep-scen", i));
                let report = reference_optimize(
                    &scenario,
                    &config,
                    scheme,
                    budget,
                    &mut stream(30, "optimizer", i),
                    &[],
                )
                .unwrap();
                total += if report.feasible { report.best_objective } else { 0.0 };
            }
            means.insert(scheme, total / n_scenarios as f64);
        }
        assert!(means[&Scheme::MaCnoma] >= means[&Scheme::MaNoma] - 1e-9);
        assert!(means[&Scheme::MaCnoma] >= means[&Scheme::FCnoma] - 1e-9);
        assert!(means[&Scheme::MaNoma] >= means[&Scheme::FNoma] - 1e-9);
        assert!(means[&Scheme::FCnoma] >= means[&Scheme::FNoma] - 1e-9);
    }

    #[test]
    fn sweep_points_are_ordered_and_reproducible() {
        let config = SystemConfig::<f64>::default();
        let axis = SweepAxis::BsPower(vec![
            crate::units::dbm_to_watts(13.0),
            crate::units::dbm_to_watts(11.0),
        ]);
        let run = || {
            evaluate_scheme_sweep(&config, Scheme::FNoma, &axis, 6, 300, 77).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.len(), 2);
        assert!(a[0].value < a[1].value, "ascending order");
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean_rate, y.mean_rate);
            assert_eq!(x.stderr, y.stderr);
        }
        // warm-started ascending sweep is monotone per construction
        assert!(a[1].mean_rate >= a[0].mean_rate - 1e-12);
    }

    #[test]
    fn tiny_region_collapses_ma_to_fixed() {
        let config = SystemConfig::<f64>::default();
        let axis = SweepAxis::RegionScale(vec![0.02]);
        let ma = evaluate_scheme_sweep(&config, Scheme::MaCnoma, &axis, 8, 400, 31).unwrap();
        let fixed = evaluate_scheme_sweep(&config, Scheme::FCnoma, &axis, 8, 400, 31).unwrap();
        let tol = 3.0 * (ma[0].stderr + fixed[0].stderr) + 0.05 * fixed[0].mean_rate;
        assert!(
            (ma[0].mean_rate - fixed[0].mean_rate).abs() <= tol,
            "ma {} vs fixed {} (tol {tol})",
            ma[0].mean_rate,
            fixed[0].mean_rate
        );
    }
}
