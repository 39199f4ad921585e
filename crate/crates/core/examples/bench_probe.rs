use ma_cnoma::ddpg::{self, Agent, AgentConfig, ReplayBuffer};
use ma_cnoma::rl_env::{self, EnvConfig, RawAction, Transition};
use ma_cnoma::seed::stream;
use ma_cnoma::channel::sample_scenario;
use ma_cnoma::baselines::{reference_optimize, Scheme};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let master: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let episodes: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(200);
    let scale: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.01);
    let decay: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0.99);
    let floor: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(0.02);
    let actor_lr: f64 = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(1e-4);
    let env = EnvConfig::<f64>::default();
    let config = AgentConfig::<f64> {
        episodes,
        reward_scale: scale,
        noise_decay: decay,
        noise_floor: floor,
        actor_lr,
        ..AgentConfig::default()
    };
    let n = env.system.n_bs_antennas;

    let mut init_rng = stream(master, "init", 0);
    let mut agent = Agent::new(rl_env::state_dim(n), rl_env::action_dim(n), config.clone(), &mut init_rng).unwrap();
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let mut buffer_rng = stream(master, "buffer", 0);

    let mut curve = Vec::new();
    for episode in 0..config.episodes {
        let mut scenario_rng = stream(master, "scenario", episode as u64);
        let (scenario, mut state) = rl_env::reset(&env, &mut scenario_rng);
        let mut explore_rng = stream(master, "explore", episode as u64);
        let sigma = config.noise_stddev(episode);
        let (mut r_sum, mut qos, mut reg, mut pow) = (0.0, 0, 0, 0);
        let mut sat = 0usize;
        let mut stats_acc = (0.0f64, 0.0f64);
        for _ in 0..config.steps_per_episode {
            let action = agent.select_action(&state.features(&env.system), sigma, &mut explore_rng).unwrap();
            sat += action.components.iter().filter(|x| x.abs() > 0.99).count();
            let out = rl_env::step(&state, &action, &scenario, &env).unwrap();
            r_sum += out.reward.total;
            if out.reward.penalty_qos > 0.0 { qos += 1; }
            if out.reward.penalty_region > 0.0 { reg += 1; }
            if out.reward.penalty_power > 0.0 { pow += 1; }
            buffer.push(Transition { state: state.clone(), action, reward: out.reward.total, next_state: out.next_state.clone() });
            if let Some(stats) = ddpg::train_step(&mut agent, &buffer, &env.system, &mut buffer_rng).unwrap() {
                stats_acc = (stats.critic_loss, stats.actor_objective);
            }
            state = out.next_state;
        }
        curve.push(r_sum / config.steps_per_episode as f64);
        if episode % 25 == 0 || episode + 1 == config.episodes {
            println!(
                "ep {episode:>3}: reward {:>7.2}  pen q/r/p {qos:>3}/{reg:>3}/{pow:>3}  σ {sigma:.3}  sat {:>4.2}  loss {:>7.4} Q {:>7.2}",
                curve[episode], sat as f64 / 2300.0, stats_acc.0, stats_acc.1
            );
        }
    }

    // fast accuracy check on 6 held-out scenarios
    let mut psum = 0.0;
    let mut rsum = 0.0;
    for i in 0..6u64 {
        let scenario = sample_scenario(&env.system, &mut stream(master, "eval-scen", i));
        let policy = ddpg::evaluate_policy(&agent.actor, &env, &scenario, 100).unwrap();
        let reference = reference_optimize(&scenario, &env.system, Scheme::MaCnoma, 4000, &mut stream(master, "optimizer", i), &[]).unwrap();
        psum += policy.best_objective;
        rsum += reference.best_objective;
    }
    println!("quick ratio over 6 held-out: {:.3} ({:.2}/{:.2})", psum / rsum, psum / 6.0, rsum / 6.0);
}
