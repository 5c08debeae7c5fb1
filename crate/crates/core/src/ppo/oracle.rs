//! Exhaustive search over all joint (on/off × phase) element configurations.
//! Tractable only on desk instances; the ground truth PPO is measured against.

use crate::beamformer::Beamformer;
use crate::channel::ChannelRealization;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::metrics::energy_efficiency;
use crate::ris::RisControl;

const SEARCH_LIMIT: u128 = 1_000_000;

/// Enumerate every RIS configuration and return the EE maximizer.
pub fn brute_force_oracle(
    cfg: &ScenarioConfig,
    ch: &ChannelRealization,
    bf: &Beamformer,
) -> Result<(RisControl, f64)> {
    let elements = cfg.n_aris * cfg.elements_per_aris;
    let arity = 2u128 * (1u128 << cfg.phase_bits);
    let size = arity.checked_pow(elements as u32).unwrap_or(u128::MAX);
    if size > SEARCH_LIMIT {
        return Err(Error::SearchSpace { size, limit: SEARCH_LIMIT });
    }
    let levels = 1usize << cfg.phase_bits;
    let mut best: Option<(RisControl, f64)> = None;
    let mut ids = vec![0usize; elements];
    loop {
        let mut ctl = RisControl::all_off(cfg.n_aris, cfg.elements_per_aris, cfg.phase_bits);
        for (e, &id) in ids.iter().enumerate() {
            let (n, i) = (e / cfg.elements_per_aris, e % cfg.elements_per_aris);
            ctl.delta[[n, i]] = (id / levels) as u8;
            ctl.phase_idx[[n, i]] = (id % levels) as u32;
            ctl.beta[[n, i]] = cfg.beta;
        }
        let ee = energy_efficiency(cfg, std::slice::from_ref(ch), &ctl, bf)?;
        if best.as_ref().map_or(true, |(_, b)| ee > *b) {
            best = Some((ctl, ee));
        }
        // mixed-radix increment
        let mut pos = 0;
        loop {
            if pos == elements {
                return Ok(best.expect("at least one candidate"));
            }
            ids[pos] += 1;
            if ids[pos] < arity as usize {
                break;
            }
            ids[pos] = 0;
            pos += 1;
        }
    }
}
