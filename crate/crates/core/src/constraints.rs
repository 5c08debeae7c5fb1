use crate::beamformer::Beamformer;
use crate::channel::ChannelRealization;
use crate::config::ScenarioConfig;
use crate::geometry::{squared_distance, Position3D};
use crate::metrics::per_ue_rates;
use crate::ris::RisControl;

/// Slack values for every problem constraint; nonnegative slack means the
/// constraint holds.
#[derive(Debug, Clone)]
pub struct ConstraintReport {
    /// r_k - r_min per UE.
    pub rate_slacks: Vec<f64>,
    /// Phases within [0, 2pi) and on the quantized grid.
    pub theta_valid: bool,
    /// (i, j, ||q_i - q_j||^2 - d_min) per ARIS pair.
    pub separation_slacks: Vec<(usize, usize, f64)>,
    /// P_max - tr(g^H g).
    pub power_slack: f64,
    /// Every delta entry binary.
    pub delta_binary: bool,
}

impl ConstraintReport {
    /// True when no hard violation beyond the tolerance exists.
    pub fn passed(&self, tol: f64) -> bool {
        self.theta_valid
            && self.delta_binary
            && self.power_slack >= -tol
            && self.rate_slacks.iter().all(|&s| s >= -tol)
            && self.separation_slacks.iter().all(|&(_, _, s)| s >= -tol)
    }

    pub fn violations(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        if !self.theta_valid {
            out.push("theta out of quantized range".to_string());
        }
        if !self.delta_binary {
            out.push("delta not binary".to_string());
        }
        if self.power_slack < -tol {
            out.push(format!("transmit power over budget by {} W", -self.power_slack));
        }
        for (k, s) in self.rate_slacks.iter().enumerate() {
            if *s < -tol {
                out.push(format!("ue {k} rate short by {} bit/s", -s));
            }
        }
        for (i, j, s) in &self.separation_slacks {
            if *s < -tol {
                out.push(format!("aris pair ({i}, {j}) separation short by {} m^2", -s));
            }
        }
        out
    }
}

/// Evaluate every constraint of the joint problem at a candidate solution.
pub fn check_constraints(
    cfg: &ScenarioConfig,
    ch: &ChannelRealization,
    ris: &RisControl,
    bf: &Beamformer,
    aris_positions: &[Position3D],
) -> ConstraintReport {
    let rates = per_ue_rates(cfg, ch, ris, bf);
    let rate_slacks = rates.iter().map(|r| r - cfg.r_min_bps).collect();
    let theta_valid = ris.validate().is_ok()
        && (0..ris.n_aris()).all(|n| {
            (0..ris.elements()).all(|i| {
                let t = ris.theta(n, i);
                (0.0..2.0 * std::f64::consts::PI).contains(&t)
            })
        });
    let mut separation_slacks = Vec::new();
    for i in 0..aris_positions.len() {
        for j in (i + 1)..aris_positions.len() {
            let s = squared_distance(aris_positions[i], aris_positions[j]) - cfg.d_min_m2;
            separation_slacks.push((i, j, s));
        }
    }
    let power_slack = cfg.p_max_w - bf.trace_power();
    let delta_binary = ris.delta.iter().all(|&d| d <= 1);
    ConstraintReport {
        rate_slacks,
        theta_valid,
        separation_slacks,
        power_slack,
        delta_binary,
    }
}
