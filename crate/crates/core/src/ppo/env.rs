//! MDP view of the per-element on/off + phase-shift subproblem: states are
//! flattened network observations, actions decode to a full `RisControl`.

use rand_chacha::ChaCha12Rng;

use crate::beamformer::Beamformer;
use crate::channel::ChannelRealization;
use crate::config::{RewardGuard, ScenarioConfig};
use crate::error::Result;
use crate::geometry::Position3D;
use crate::metrics::{energy_efficiency, per_ue_rates};
use crate::ris::RisControl;
use crate::scenario::derive_rng;

/// Step reward: the energy efficiency, or -1 when the rate condition fails.
pub fn reward(
    cfg: &ScenarioConfig,
    ch: &ChannelRealization,
    ris: &RisControl,
    bf: &Beamformer,
) -> f64 {
    let rates = per_ue_rates(cfg, ch, ris, bf);
    let ok = match cfg.reward_guard {
        RewardGuard::PerUe => rates.iter().all(|&r| r >= cfg.r_min_bps),
        RewardGuard::SumRate => rates.iter().sum::<f64>() >= cfg.r_min_bps,
    };
    if !ok {
        return -1.0;
    }
    energy_efficiency(cfg, std::slice::from_ref(ch), ris, bf).unwrap_or(-1.0)
}

/// Environment abstraction the trainer drives. A training step applies one
/// full RIS configuration; channels are quasi-static within an episode.
pub trait PpoEnv {
    fn state_dim(&self) -> usize;
    fn elements(&self) -> usize;
    fn action_arity(&self) -> usize;
    /// Start an episode and return its initial state.
    fn reset(&mut self) -> Vec<f64>;
    /// Apply a joint action; returns the raw reward (state is unchanged
    /// within the episode).
    fn step(&mut self, actions: &[usize]) -> f64;
    /// Deterministic reference used to scale rewards during training.
    fn reward_scale(&self) -> f64;
    /// Metric of a greedy decode on the held-out evaluation draw.
    fn eval_metric(&self, actions: &[usize]) -> f64;
    /// State of the evaluation draw (for greedy decoding).
    fn eval_state(&self) -> Vec<f64>;
}

/// How episode channels are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelMode {
    /// Every episode sees the same frozen realization (oracle comparisons).
    Frozen,
    /// Fresh fading each episode.
    Fresh,
}

pub struct RisEnv {
    pub cfg: ScenarioConfig,
    pub ues: Vec<Position3D>,
    pub q: Vec<Position3D>,
    pub bf: Beamformer,
    mode: ChannelMode,
    rng: ChaCha12Rng,
    current: ChannelRealization,
    eval: ChannelRealization,
    scale: f64,
}

impl RisEnv {
    pub fn new(
        cfg: ScenarioConfig,
        ues: Vec<Position3D>,
        q: Vec<Position3D>,
        bf: Beamformer,
        mode: ChannelMode,
        seed: u64,
    ) -> Result<Self> {
        let mut eval_rng = derive_rng(seed, "ppo-env-eval");
        let eval = ChannelRealization::sample(&mut eval_rng, &cfg, &ues, &q)?;
        let rng = derive_rng(seed, "ppo-env-episodes");
        let reference = RisControl::all_on(cfg.n_aris, cfg.elements_per_aris, cfg.phase_bits, cfg.beta);
        let scale = energy_efficiency(&cfg, std::slice::from_ref(&eval), &reference, &bf)?
            .abs()
            .max(1e-9);
        Ok(Self { cfg, ues, q, bf, mode, rng, current: eval.clone(), eval, scale })
    }

    /// Decode per-element joint action ids: high bit selects on/off, low bits
    /// the phase index.
    pub fn decode(&self, actions: &[usize]) -> RisControl {
        let n = self.cfg.n_aris;
        let i = self.cfg.elements_per_aris;
        let b = self.cfg.phase_bits;
        let levels = 1usize << b;
        let mut ctl = RisControl::all_off(n, i, b);
        for e in 0..n * i {
            let id = actions[e];
            let (nn, ii) = (e / i, e % i);
            ctl.delta[[nn, ii]] = (id / levels) as u8;
            ctl.phase_idx[[nn, ii]] = (id % levels) as u32;
            ctl.beta[[nn, ii]] = self.cfg.beta;
        }
        ctl
    }

    pub fn current_channel(&self) -> &ChannelRealization {
        &self.current
    }

    pub fn eval_channel(&self) -> &ChannelRealization {
        &self.eval
    }

    fn encode(&self, ch: &ChannelRealization) -> Vec<f64> {
        let cfg = &self.cfg;
        let area = cfg.area_m;
        let kroot = cfg.kappa.sqrt();
        let proot = cfg.p_max_w.sqrt();
        let mut s = Vec::with_capacity(self.state_dim());
        for ue in &self.ues {
            s.extend([ue.x / area, ue.y / area, ue.z / area]);
        }
        for q in &self.q {
            s.extend([q.x / area, q.y / area, q.z / area]);
        }
        for v in ch.direct.iter() {
            s.push(v.re / kroot);
            s.push(v.im / kroot);
        }
        for n in 0..cfg.n_aris {
            for v in ch.aris_ue[n].iter() {
                s.push(v.re / kroot);
                s.push(v.im / kroot);
            }
        }
        for n in 0..cfg.n_aris {
            for v in ch.bs_aris[n].iter() {
                s.push(v.re / kroot);
                s.push(v.im / kroot);
            }
        }
        for v in self.bf.g.iter() {
            s.push(v.re / proot);
            s.push(v.im / proot);
        }
        s
    }
}

impl PpoEnv for RisEnv {
    fn state_dim(&self) -> usize {
        let cfg = &self.cfg;
        let (k, n, i, m) = (cfg.k_ues, cfg.n_aris, cfg.elements_per_aris, cfg.bs_antennas);
        3 * k + 3 * n + 2 * k * m + 2 * n * k * i + 2 * n * i * m + 2 * k * m
    }

    fn elements(&self) -> usize {
        self.cfg.n_aris * self.cfg.elements_per_aris
    }

    fn action_arity(&self) -> usize {
        2 * (1usize << self.cfg.phase_bits)
    }

    fn reset(&mut self) -> Vec<f64> {
        if self.mode == ChannelMode::Fresh {
            self.current = ChannelRealization::sample(&mut self.rng, &self.cfg, &self.ues, &self.q)
                .expect("episode channel draw");
        }
        self.encode(&self.current)
    }

    fn step(&mut self, actions: &[usize]) -> f64 {
        let ris = self.decode(actions);
        reward(&self.cfg, &self.current, &ris, &self.bf)
    }

    fn reward_scale(&self) -> f64 {
        self.scale
    }

    fn eval_metric(&self, actions: &[usize]) -> f64 {
        let ris = self.decode(actions);
        energy_efficiency(&self.cfg, std::slice::from_ref(&self.eval), &ris, &self.bf)
            .unwrap_or(f64::NEG_INFINITY)
    }

    fn eval_state(&self) -> Vec<f64> {
        self.encode(&self.eval)
    }
}
