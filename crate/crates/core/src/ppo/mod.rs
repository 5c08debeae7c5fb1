//! Actor-critic PPO for the joint per-element on/off and discrete phase-shift
//! subproblem, with an exhaustive-search oracle for desk-scale validation.

mod buffer;
mod env;
mod net;
mod oracle;
mod train;

pub use buffer::{advantage, discounted_returns, normalize, RolloutBuffer, Transition};
pub use env::{reward, ChannelMode, PpoEnv, RisEnv};
pub use net::{Adam, Forward, Net, NetShape};
pub use oracle::brute_force_oracle;
pub use train::{
    clipped_surrogate, ppo_train, probability_ratio, EpisodeRecord, PpoHyperparams, PpoOutcome,
    PpoTrainer, UpdateDiag,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamformer::Beamformer;
    use crate::channel::ChannelRealization;
    use crate::config::{NoiseSpec, ScenarioConfig};
    use crate::geometry::Position3D;
    use crate::metrics::energy_efficiency;
    use crate::ris::RisControl;
    use crate::scenario::derive_rng;
    use rand::Rng;

    /// Small single-UE scenario where the cascade is strong enough that the
    /// on/off and phase choices matter.
    fn oracle_cfg(seed: u64) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::desk(seed);
        cfg.k_ues = 1;
        cfg.n_aris = 1;
        cfg.elements_per_aris = 3;
        cfg.bs_antennas = 2;
        cfg.phase_bits = 1;
        cfg.r_min_bps = 0.0;
        cfg.noise = NoiseSpec::Total { dbm: 0.0 };
        cfg
    }

    fn oracle_env(seed: u64) -> RisEnv {
        let cfg = oracle_cfg(seed);
        let ues = vec![Position3D::ground(3.0, 3.0)];
        let q = vec![Position3D::new(4.5, 4.5, 4.0)];
        let mut rng = derive_rng(seed, "ppo-test-ch");
        let eval = ChannelRealization::sample(&mut rng, &cfg, &ues, &q).unwrap();
        let bf = Beamformer::matched(
            &[eval.direct.row(0).to_owned()],
            cfg.tx_budget_w(),
        );
        RisEnv::new(cfg, ues, q, bf, ChannelMode::Frozen, seed).unwrap()
    }

    #[test]
    fn reward_guard_fires_below_rate_floor() {
        let mut cfg = oracle_cfg(1);
        cfg.r_min_bps = 1e12; // unreachable
        let ues = vec![Position3D::ground(3.0, 3.0)];
        let q = vec![Position3D::new(4.5, 4.5, 4.0)];
        let mut rng = derive_rng(1, "guard");
        let ch = ChannelRealization::sample(&mut rng, &cfg, &ues, &q).unwrap();
        let bf = Beamformer::equal_power(1, 2, cfg.tx_budget_w());
        let off = RisControl::all_off(1, 3, 1);
        assert_eq!(reward(&cfg, &ch, &off, &bf), -1.0);
    }

    #[test]
    fn reward_equals_ee_when_guard_disabled() {
        let cfg = oracle_cfg(2);
        let ues = vec![Position3D::ground(3.0, 3.0)];
        let q = vec![Position3D::new(4.5, 4.5, 4.0)];
        let mut rng = derive_rng(2, "guard-off");
        let ch = ChannelRealization::sample(&mut rng, &cfg, &ues, &q).unwrap();
        let bf = Beamformer::equal_power(1, 2, cfg.tx_budget_w());
        let ris = RisControl::all_on(1, 3, 1, 1.0);
        let expected =
            energy_efficiency(&cfg, std::slice::from_ref(&ch), &ris, &bf).unwrap();
        assert_eq!(reward(&cfg, &ch, &ris, &bf), expected);
        assert!(expected > 0.0);
    }

    #[test]
    fn ratio_identities() {
        assert_eq!(probability_ratio(-1.5, -1.5), 1.0);
        assert!((probability_ratio(-1.0 + std::f64::consts::LN_2, -1.0) - 2.0).abs() < 1e-12);
        assert!(probability_ratio(-0.5, -1.0) > 1.0);
        assert!(probability_ratio(-1.5, -1.0) < 1.0);
    }

    #[test]
    fn clipped_surrogate_cases() {
        // clip inactive at ratio 1
        assert_eq!(clipped_surrogate(1.0, 0.7, 0.2), 0.7);
        // positive advantage clipped above
        assert!((clipped_surrogate(2.0, 1.0, 0.2) - 1.2).abs() < 1e-15);
        // negative advantage takes the smaller (more negative) branch
        assert!((clipped_surrogate(0.5, -1.0, 0.2) - (-0.8)).abs() < 1e-15);
    }

    /// Finite-difference oracle over every parameter of the PPO loss.
    fn max_grad_rel_err(seed: u64) -> f64 {
        let shape = NetShape { input: 5, hidden1: 6, hidden2: 6, elements: 2, actions: 4 };
        assert!(shape.param_count() <= 500, "gradcheck net too big");
        let mut rng = derive_rng(seed, "gradcheck");
        let hyper = PpoHyperparams {
            minibatch: 8,
            hidden: 6,
            normalize_advantages: false,
            ..Default::default()
        };
        let mut trainer =
            PpoTrainer::new(shape.input, shape.elements, shape.actions, hyper, seed).unwrap();
        assert_eq!(trainer.net.shape, shape);
        // synthetic batch
        let mut buffer = RolloutBuffer::default();
        buffer.begin_episode();
        for _ in 0..8 {
            let state: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let actions: Vec<usize> = (0..2).map(|_| rng.gen_range(0..4)).collect();
            let fwd = trainer.net.forward(&state).unwrap();
            let logp = fwd.log_prob_of(&shape, &actions) + rng.gen_range(-0.3..0.3);
            buffer.push(Transition {
                state,
                actions,
                log_prob_old: logp,
                reward: rng.gen_range(-1.0..1.0),
                value: fwd.value,
            });
        }
        buffer.finish(0.9, false).unwrap();
        let idx: Vec<usize> = (0..8).collect();
        let mut analytic = vec![0.0; shape.param_count()];
        trainer.loss_and_grads(&buffer, &idx, &mut analytic).unwrap();
        let mut worst = 0.0f64;
        let h = 1e-6;
        for p in 0..shape.param_count() {
            let orig = trainer.net.params[p];
            trainer.net.params[p] = orig + h;
            let mut scratch = vec![0.0; shape.param_count()];
            let (lp, _, _) = trainer.loss_and_grads(&buffer, &idx, &mut scratch).unwrap();
            trainer.net.params[p] = orig - h;
            let mut scratch2 = vec![0.0; shape.param_count()];
            let (lm, _, _) = trainer.loss_and_grads(&buffer, &idx, &mut scratch2).unwrap();
            trainer.net.params[p] = orig;
            let numeric = (lp - lm) / (2.0 * h);
            let denom = analytic[p].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((analytic[p] - numeric).abs() / denom);
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..3 {
            let err = max_grad_rel_err(seed);
            assert!(err < 1e-4, "seed {seed}: max rel err {err}");
        }
    }

    #[test]
    fn first_update_ratio_is_one_and_surrogate_is_mean_advantage() {
        let mut env = oracle_env(3);
        let hyper = PpoHyperparams {
            episodes: 2,
            steps_per_episode: 8,
            episodes_per_update: 2,
            ..Default::default()
        };
        let (trainer, _) = ppo_train(&mut env, &hyper, 3).unwrap();
        let diag = trainer.last_diag.unwrap();
        assert!(
            (diag.first_ratio_mean - 1.0).abs() < 1e-12,
            "ratios must be exactly 1 before the first step, got {}",
            diag.first_ratio_mean
        );
        assert!(
            (diag.first_surrogate - diag.first_advantage_mean).abs() < 1e-12,
            "surrogate {} vs mean advantage {}",
            diag.first_surrogate,
            diag.first_advantage_mean
        );
    }

    /// Environment whose reward ignores the action entirely.
    struct ConstEnv {
        dim: usize,
    }

    impl PpoEnv for ConstEnv {
        fn state_dim(&self) -> usize {
            self.dim
        }
        fn elements(&self) -> usize {
            2
        }
        fn action_arity(&self) -> usize {
            4
        }
        fn reset(&mut self) -> Vec<f64> {
            vec![0.5; self.dim]
        }
        fn step(&mut self, _actions: &[usize]) -> f64 {
            3.25
        }
        fn reward_scale(&self) -> f64 {
            3.25
        }
        fn eval_metric(&self, _actions: &[usize]) -> f64 {
            3.25
        }
        fn eval_state(&self) -> Vec<f64> {
            vec![0.5; self.dim]
        }
    }

    #[test]
    fn trivial_env_curve_is_flat() {
        let mut env = ConstEnv { dim: 4 };
        let hyper = PpoHyperparams {
            episodes: 10,
            steps_per_episode: 8,
            ..Default::default()
        };
        let (_, out) = ppo_train(&mut env, &hyper, 5).unwrap();
        for rec in &out.curve {
            assert!((rec.cumulative_reward - 8.0 * 3.25).abs() < 1e-9);
        }
    }

    #[test]
    fn sampled_actions_decode_to_valid_controls() {
        let mut env = oracle_env(7);
        let hyper = PpoHyperparams {
            episodes: 4,
            steps_per_episode: 4,
            ..Default::default()
        };
        let (trainer, out) = ppo_train(&mut env, &hyper, 7).unwrap();
        let ris = env.decode(&out.actions);
        assert!(ris.validate().is_ok());
        let greedy = trainer.greedy_actions(&env.eval_state()).unwrap();
        let ris2 = env.decode(&greedy);
        assert!(ris2.validate().is_ok());
    }

    #[test]
    fn oracle_counts_four_candidates_for_single_element() {
        // one element, b = 1: candidates are off/0, off/pi, on/0, on/pi.
        let mut cfg = oracle_cfg(8);
        cfg.elements_per_aris = 1;
        let ues = vec![Position3D::ground(3.0, 3.0)];
        let q = vec![Position3D::new(4.5, 4.5, 4.0)];
        let mut rng = derive_rng(8, "oracle-4");
        let ch = ChannelRealization::sample(&mut rng, &cfg, &ues, &q).unwrap();
        let bf = Beamformer::equal_power(1, 2, cfg.tx_budget_w());
        let (best, best_ee) = brute_force_oracle(&cfg, &ch, &bf).unwrap();
        // exhaustive by hand over the four candidates
        let mut hand_best = f64::NEG_INFINITY;
        for on in [0u8, 1] {
            for phase in [0u32, 1] {
                let mut ctl = RisControl::all_off(1, 1, 1);
                ctl.delta[[0, 0]] = on;
                ctl.phase_idx[[0, 0]] = phase;
                let ee = energy_efficiency(&cfg, std::slice::from_ref(&ch), &ctl, &bf).unwrap();
                hand_best = hand_best.max(ee);
            }
        }
        assert_eq!(best_ee, hand_best);
        assert!(best.validate().is_ok());
    }

    #[test]
    fn oracle_rejects_oversized_search() {
        let mut cfg = oracle_cfg(9);
        cfg.elements_per_aris = 12;
        cfg.phase_bits = 4;
        let ues = vec![Position3D::ground(3.0, 3.0)];
        let q = vec![Position3D::new(4.5, 4.5, 4.0)];
        let mut rng = derive_rng(9, "oracle-big");
        let ch = ChannelRealization::sample(&mut rng, &cfg, &ues, &q).unwrap();
        let bf = Beamformer::equal_power(1, 2, cfg.tx_budget_w());
        assert!(matches!(
            brute_force_oracle(&cfg, &ch, &bf),
            Err(crate::error::Error::SearchSpace { .. })
        ));
    }

    #[test]
    fn oracle_turns_everything_off_when_element_power_dominates() {
        let mut cfg = oracle_cfg(10);
        cfg.p_aris_w = 1e3; // absurd per-element cost
        let ues = vec![Position3D::ground(3.0, 3.0)];
        let q = vec![Position3D::new(4.5, 4.5, 4.0)];
        let mut rng = derive_rng(10, "oracle-off");
        let ch = ChannelRealization::sample(&mut rng, &cfg, &ues, &q).unwrap();
        let bf = Beamformer::equal_power(1, 2, cfg.tx_budget_w());
        let (best, _) = brute_force_oracle(&cfg, &ch, &bf).unwrap();
        assert_eq!(best.total_active(), 0);
    }

    #[test]
    fn oracle_dominates_trained_policy() {
        let mut env = oracle_env(11);
        let hyper = PpoHyperparams {
            episodes: 40,
            steps_per_episode: 16,
            ..Default::default()
        };
        let (_, out) = ppo_train(&mut env, &hyper, 11).unwrap();
        let (_, oracle_ee) =
            brute_force_oracle(&env.cfg, env.eval_channel(), &env.bf).unwrap();
        assert!(
            oracle_ee >= out.greedy_ee - 1e-9 * oracle_ee.abs(),
            "oracle {oracle_ee} must dominate greedy {}",
            out.greedy_ee
        );
    }

    #[test]
    fn trained_policy_approaches_oracle_on_one_seed() {
        let mut env = oracle_env(12);
        let hyper = PpoHyperparams::default();
        let (_, out) = ppo_train(&mut env, &hyper, 12).unwrap();
        let (_, oracle_ee) =
            brute_force_oracle(&env.cfg, env.eval_channel(), &env.bf).unwrap();
        assert!(
            out.greedy_ee >= 0.95 * oracle_ee,
            "greedy {} below 95% of oracle {oracle_ee}",
            out.greedy_ee
        );
    }
}
