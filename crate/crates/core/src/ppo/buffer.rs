use crate::error::{Error, Result};

/// Backward-recursed discounted returns G_t = r_t + xi · G_{t+1}.
pub fn discounted_returns(rewards: &[f64], xi: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (i, r) in rewards.iter().enumerate().rev() {
        acc = r + xi * acc;
        out[i] = acc;
    }
    out
}

/// Elementwise return minus value baseline.
pub fn advantage(returns: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    if returns.len() != values.len() {
        return Err(Error::Dimension(format!(
            "returns ({}) and values ({}) must align",
            returns.len(),
            values.len()
        )));
    }
    Ok(returns.iter().zip(values.iter()).map(|(g, v)| g - v).collect())
}

/// In-place zero-mean unit-variance normalization (no-op for flat batches).
pub fn normalize(advantages: &mut [f64]) {
    let n = advantages.len() as f64;
    if n < 2.0 {
        return;
    }
    let mean = advantages.iter().sum::<f64>() / n;
    let var = advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std > 1e-12 {
        for a in advantages.iter_mut() {
            *a = (*a - mean) / std;
        }
    } else {
        for a in advantages.iter_mut() {
            *a -= mean;
        }
    }
}

/// One stored transition.
#[derive(Debug, Clone)]
pub struct Transition {
    pub state: Vec<f64>,
    pub actions: Vec<usize>,
    pub log_prob_old: f64,
    pub reward: f64,
    pub value: f64,
}

/// Collected rollouts plus derived returns/advantages.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub transitions: Vec<Transition>,
    pub returns: Vec<f64>,
    pub advantages: Vec<f64>,
    /// Episode boundaries as (start, end) index pairs.
    episodes: Vec<(usize, usize)>,
}

impl RolloutBuffer {
    pub fn clear(&mut self) {
        self.transitions.clear();
        self.returns.clear();
        self.advantages.clear();
        self.episodes.clear();
    }

    pub fn begin_episode(&mut self) {
        let start = self.transitions.len();
        self.episodes.push((start, start));
    }

    pub fn push(&mut self, t: Transition) {
        self.transitions.push(t);
        if let Some(last) = self.episodes.last_mut() {
            last.1 = self.transitions.len();
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Discount within each episode, then take advantages against the stored
    /// value estimates.
    pub fn finish(&mut self, xi: f64, normalize_advantages: bool) -> Result<()> {
        self.returns.clear();
        for &(start, end) in &self.episodes {
            let rewards: Vec<f64> =
                self.transitions[start..end].iter().map(|t| t.reward).collect();
            self.returns.extend(discounted_returns(&rewards, xi));
        }
        let values: Vec<f64> = self.transitions.iter().map(|t| t.value).collect();
        self.advantages = advantage(&self.returns, &values)?;
        if normalize_advantages {
            normalize(&mut self.advantages);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn returns_hand_recursion() {
        let g = discounted_returns(&[1.0, 1.0, 1.0], 0.9);
        assert!((g[0] - 2.71).abs() < 1e-12);
        assert!((g[1] - 1.9).abs() < 1e-12);
        assert!((g[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn returns_zero_discount_is_immediate_reward() {
        let g = discounted_returns(&[0.3, -0.5, 2.0], 0.0);
        assert_eq!(g, vec![0.3, -0.5, 2.0]);
    }

    #[test]
    fn returns_constant_reward_geometric_sum() {
        let r = 2.0;
        let xi: f64 = 0.9;
        let h = 16;
        let g = discounted_returns(&vec![r; h], xi);
        let expected = r * (1.0 - xi.powi(h as i32)) / (1.0 - xi);
        assert!((g[0] - expected).abs() < 1e-10);
    }

    #[test]
    fn advantage_perfect_baseline_is_zero() {
        let g = vec![1.0, 2.0, 3.0];
        let adv = advantage(&g, &g).unwrap();
        assert!(adv.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn advantage_zero_baseline_equals_returns() {
        let g = vec![1.0, -2.0, 3.0];
        let adv = advantage(&g, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(adv, g);
    }

    #[test]
    fn advantage_length_mismatch_rejected() {
        assert!(advantage(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn normalization_statistics() {
        let mut a = vec![1.0, 2.0, 3.0, 4.0, 10.0];
        normalize(&mut a);
        let mean: f64 = a.iter().sum::<f64>() / a.len() as f64;
        let var: f64 = a.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / a.len() as f64;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
    }
}
