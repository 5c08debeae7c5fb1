//! Actor-critic PPO with the clipped probability-ratio surrogate, on a
//! factorized per-element categorical policy.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::scenario::derive_rng;

use super::buffer::{RolloutBuffer, Transition};
use super::env::PpoEnv;
use super::net::{Adam, Forward, Net, NetShape};

#[derive(Debug, Clone)]
pub struct PpoHyperparams {
    pub clip_epsilon: f64,
    pub discount_xi: f64,
    pub learning_rate: f64,
    pub minibatch: usize,
    pub epochs_per_update: usize,
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub episodes_per_update: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub hidden: usize,
    pub normalize_advantages: bool,
}

impl Default for PpoHyperparams {
    fn default() -> Self {
        Self {
            clip_epsilon: 0.2,
            discount_xi: 0.9,
            learning_rate: 2e-4,
            minibatch: 64,
            epochs_per_update: 4,
            episodes: 200,
            steps_per_episode: 32,
            episodes_per_update: 2,
            entropy_coef: 0.01,
            value_coef: 0.5,
            hidden: 64,
            normalize_advantages: true,
        }
    }
}

impl PpoHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return Err(Error::Config(format!(
                "clip_epsilon must be in (0, 1), got {}",
                self.clip_epsilon
            )));
        }
        if !(self.discount_xi > 0.0 && self.discount_xi < 1.0) {
            return Err(Error::Config(format!(
                "discount_xi must be in (0, 1), got {}",
                self.discount_xi
            )));
        }
        Ok(())
    }
}

/// exp(logp_new - logp_old).
pub fn probability_ratio(logp_new: f64, logp_old: f64) -> f64 {
    (logp_new - logp_old).exp()
}

/// The clipped element min(r·A, clip(r, 1-eps, 1+eps)·A).
pub fn clipped_surrogate(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon) * advantage;
    unclipped.min(clipped)
}

/// One learning-curve row.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// Sum of raw step rewards over the episode.
    pub cumulative_reward: f64,
    /// Energy efficiency of the greedy decode on the evaluation draw.
    pub greedy_ee: f64,
}

#[derive(Debug, Clone)]
pub struct PpoOutcome {
    pub actions: Vec<usize>,
    pub greedy_ee: f64,
    pub curve: Vec<EpisodeRecord>,
}

/// Diagnostics of the first minibatch of an update, before any step.
#[derive(Debug, Clone, Copy)]
pub struct UpdateDiag {
    pub first_ratio_mean: f64,
    pub first_surrogate: f64,
    pub first_advantage_mean: f64,
}

pub struct PpoTrainer {
    pub net: Net,
    adam: Adam,
    hyper: PpoHyperparams,
    rng: ChaCha12Rng,
    pub last_diag: Option<UpdateDiag>,
}

impl PpoTrainer {
    pub fn new(state_dim: usize, elements: usize, arity: usize, hyper: PpoHyperparams, seed: u64) -> Result<Self> {
        hyper.validate()?;
        let shape = NetShape {
            input: state_dim,
            hidden1: hyper.hidden,
            hidden2: hyper.hidden,
            elements,
            actions: arity,
        };
        let mut init_rng = derive_rng(seed, "ppo-net-init");
        let net = Net::init(shape, &mut init_rng);
        let adam = Adam::new(hyper.learning_rate, shape.param_count());
        let rng = derive_rng(seed, "ppo-train");
        Ok(Self { net, adam, hyper, rng, last_diag: None })
    }

    fn sample_actions(&mut self, fwd: &Forward) -> Vec<usize> {
        let shape = self.net.shape;
        (0..shape.elements)
            .map(|e| {
                let u: f64 = self.rng.gen();
                let mut acc = 0.0;
                for a in 0..shape.actions {
                    acc += fwd.probs[e * shape.actions + a];
                    if u < acc {
                        return a;
                    }
                }
                shape.actions - 1
            })
            .collect()
    }

    /// Greedy per-element argmax on a state.
    pub fn greedy_actions(&self, state: &[f64]) -> Result<Vec<usize>> {
        let fwd = self.net.forward(state)?;
        let shape = self.net.shape;
        Ok((0..shape.elements)
            .map(|e| {
                (0..shape.actions)
                    .max_by(|&x, &y| {
                        fwd.probs[e * shape.actions + x]
                            .partial_cmp(&fwd.probs[e * shape.actions + y])
                            .unwrap()
                    })
                    .unwrap()
            })
            .collect())
    }

    /// Loss and parameter gradients for one minibatch. Returns
    /// (loss, mean ratio, mean clipped surrogate). Public so the gradient
    /// checks can compare against finite differences.
    pub fn loss_and_grads(
        &self,
        buffer: &RolloutBuffer,
        idx: &[usize],
        grads: &mut [f64],
    ) -> Result<(f64, f64, f64)> {
        let shape = self.net.shape;
        let eps = self.hyper.clip_epsilon;
        let inv_b = 1.0 / idx.len() as f64;
        let mut loss = 0.0;
        let mut ratio_acc = 0.0;
        let mut surr_acc = 0.0;
        for &i in idx {
            let tr = &buffer.transitions[i];
            let adv = buffer.advantages[i];
            let ret = buffer.returns[i];
            let fwd = self.net.forward(&tr.state)?;
            let logp_new = fwd.log_prob_of(&shape, &tr.actions);
            let ratio = probability_ratio(logp_new, tr.log_prob_old);
            let surr = clipped_surrogate(ratio, adv, eps);
            let entropy = fwd.entropy(&shape);
            let vdiff = fwd.value - ret;
            loss += inv_b
                * (-surr + self.hyper.value_coef * 0.5 * vdiff * vdiff
                    - self.hyper.entropy_coef * entropy);
            ratio_acc += inv_b * ratio;
            surr_acc += inv_b * surr;

            // d loss / d logp_new
            let unclipped = ratio * adv;
            let clipped = ratio.clamp(1.0 - eps, 1.0 + eps) * adv;
            let dsurr_dlogp = if unclipped <= clipped {
                unclipped
            } else if ratio > 1.0 - eps && ratio < 1.0 + eps {
                ratio * adv
            } else {
                0.0
            };
            let dlogp = -inv_b * dsurr_dlogp;

            let mut d_logits = vec![0.0; shape.policy_out()];
            for (e, &a) in tr.actions.iter().enumerate() {
                let base = e * shape.actions;
                for j in 0..shape.actions {
                    let p = fwd.probs[base + j];
                    let indicator = if j == a { 1.0 } else { 0.0 };
                    d_logits[base + j] += dlogp * (indicator - p);
                }
            }
            // entropy bonus gradient: d(-c_e H)/d logit_j = c_e p_j (ln p_j + H_e)
            for e in 0..shape.elements {
                let base = e * shape.actions;
                let mut h_e = 0.0;
                for j in 0..shape.actions {
                    let p = fwd.probs[base + j];
                    if p > 0.0 {
                        h_e -= p * p.ln();
                    }
                }
                for j in 0..shape.actions {
                    let p = fwd.probs[base + j];
                    if p > 0.0 {
                        d_logits[base + j] +=
                            inv_b * self.hyper.entropy_coef * p * (p.ln() + h_e);
                    }
                }
            }
            let d_value = inv_b * self.hyper.value_coef * vdiff;
            self.net.backward(&fwd, &d_logits, d_value, grads);
        }
        Ok((loss, ratio_acc, surr_acc))
    }

    /// PPO update over the filled buffer: epochs × shuffled minibatches.
    pub fn update(&mut self, buffer: &RolloutBuffer) -> Result<UpdateDiag> {
        let b = buffer.len();
        let mb = self.hyper.minibatch.min(b).max(1);
        let mut diag = None;
        for epoch in 0..self.hyper.epochs_per_update {
            let mut order: Vec<usize> = (0..b).collect();
            // Fisher-Yates with the trainer stream
            for i in (1..b).rev() {
                let j = self.rng.gen_range(0..=i);
                order.swap(i, j);
            }
            for chunk in order.chunks(mb) {
                let mut grads = vec![0.0; self.net.shape.param_count()];
                let (loss, ratio_mean, surr) = self.loss_and_grads(buffer, chunk, &mut grads)?;
                if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                    return Err(Error::Divergence(format!("non-finite loss {loss}")));
                }
                if epoch == 0 && diag.is_none() {
                    let adv_mean = chunk.iter().map(|&i| buffer.advantages[i]).sum::<f64>()
                        / chunk.len() as f64;
                    diag = Some(UpdateDiag {
                        first_ratio_mean: ratio_mean,
                        first_surrogate: surr,
                        first_advantage_mean: adv_mean,
                    });
                }
                self.adam.step(&mut self.net.params, &grads);
            }
        }
        let d = diag.expect("non-empty buffer");
        self.last_diag = Some(d);
        Ok(d)
    }

    /// Run the full training loop on an environment.
    pub fn train<E: PpoEnv>(&mut self, env: &mut E) -> Result<PpoOutcome> {
        let scale = env.reward_scale();
        let mut buffer = RolloutBuffer::default();
        let mut curve = Vec::with_capacity(self.hyper.episodes);
        for episode in 0..self.hyper.episodes {
            buffer.begin_episode();
            let state = env.reset();
            let mut cumulative = 0.0;
            for _ in 0..self.hyper.steps_per_episode {
                let fwd = self.net.forward(&state)?;
                let actions = self.sample_actions(&fwd);
                let logp = fwd.log_prob_of(&self.net.shape, &actions);
                let raw = env.step(&actions);
                cumulative += raw;
                buffer.push(Transition {
                    state: state.clone(),
                    actions,
                    log_prob_old: logp,
                    reward: raw / scale,
                    value: fwd.value,
                });
            }
            let greedy = self.greedy_actions(&env.eval_state())?;
            curve.push(EpisodeRecord {
                episode,
                cumulative_reward: cumulative,
                greedy_ee: env.eval_metric(&greedy),
            });
            if (episode + 1) % self.hyper.episodes_per_update == 0 {
                buffer.finish(self.hyper.discount_xi, self.hyper.normalize_advantages)?;
                self.update(&buffer)?;
                buffer.clear();
            }
        }
        let actions = self.greedy_actions(&env.eval_state())?;
        let greedy_ee = env.eval_metric(&actions);
        Ok(PpoOutcome { actions, greedy_ee, curve })
    }
}

/// Train a fresh agent on the environment (Algorithm-2 entry point).
pub fn ppo_train<E: PpoEnv>(env: &mut E, hyper: &PpoHyperparams, seed: u64) -> Result<(PpoTrainer, PpoOutcome)> {
    let mut trainer = PpoTrainer::new(
        env.state_dim(),
        env.elements(),
        env.action_arity(),
        hyper.clone(),
        seed,
    )?;
    let outcome = trainer.train(env)?;
    Ok((trainer, outcome))
}
