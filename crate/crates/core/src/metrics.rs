//! Closed-form link-layer quantities: effective channels, SINR, rates, power
//! accounting and energy efficiency.

use ndarray::Array1;
use num_complex::Complex64;

use crate::beamformer::Beamformer;
use crate::channel::ChannelRealization;
use crate::config::{PowerModel, ScenarioConfig, UavHoverParams};
use crate::error::{Error, Result};
use crate::ris::RisControl;

/// Combined direct + cascaded row seen by UE k:
/// H_Bk + sum_n sum_i delta_i * h_nk[i] * beta e^{j theta} * h_Bn[i, :].
pub fn effective_channel(
    ch: &ChannelRealization,
    ris: &RisControl,
    k: usize,
) -> Array1<Complex64> {
    let mut row = ch.direct.row(k).to_owned();
    for n in 0..ris.n_aris() {
        let h_bn = &ch.bs_aris[n];
        let h_nk = ch.aris_ue[n].row(k);
        for i in 0..ris.elements() {
            let c = ris.coefficient(n, i);
            if c != Complex64::new(0.0, 0.0) {
                let w = h_nk[i] * c;
                for (m, dst) in row.iter_mut().enumerate() {
                    *dst += w * h_bn[[i, m]];
                }
            }
        }
    }
    row
}

fn signal_power(eff: &Array1<Complex64>, beam: ndarray::ArrayView1<Complex64>) -> f64 {
    eff.iter()
        .zip(beam.iter())
        .map(|(h, g)| h * g)
        .sum::<Complex64>()
        .norm_sqr()
}

/// SINR of UE k under the current RIS configuration and beams.
pub fn sinr(cfg: &ScenarioConfig, ch: &ChannelRealization, ris: &RisControl, bf: &Beamformer, k: usize) -> f64 {
    let eff = effective_channel(ch, ris, k);
    let sig = signal_power(&eff, bf.g.row(k));
    let interference: f64 = (0..bf.k_ues())
        .filter(|&l| l != k)
        .map(|l| signal_power(&eff, bf.g.row(l)))
        .sum();
    sig / (interference + cfg.sigma2_w())
}

/// Shannon rate W log2(1 + sinr), bit/s.
pub fn rate(cfg: &ScenarioConfig, sinr_value: f64) -> f64 {
    cfg.bandwidth_hz * (1.0 + sinr_value).log2()
}

/// Per-UE achievable rates.
pub fn per_ue_rates(cfg: &ScenarioConfig, ch: &ChannelRealization, ris: &RisControl, bf: &Beamformer) -> Vec<f64> {
    (0..bf.k_ues()).map(|k| rate(cfg, sinr(cfg, ch, ris, bf, k))).collect()
}

/// Sum over UEs of the achievable rate, bit/s.
pub fn sum_rate(cfg: &ScenarioConfig, ch: &ChannelRealization, ris: &RisControl, bf: &Beamformer) -> f64 {
    per_ue_rates(cfg, ch, ris, bf).iter().sum()
}

/// Rotary-wing hover power: blade profile term plus induced-drag term.
pub fn hover_power(p: &UavHoverParams) -> Result<f64> {
    p.validate()?;
    let profile = p.profile_drag / 8.0
        * p.air_density
        * p.rotor_solidity
        * p.disc_area_m2
        * p.blade_velocity_rad_s.powi(3)
        * p.rotor_radius_m;
    let induced = (1.0 + p.correction_factor) * p.aircraft_weight_n.powf(1.5)
        / (2.0 * p.air_density * p.disc_area_m2).sqrt();
    Ok(profile + induced)
}

/// Total consumed power: amplifier-scaled transmit power and circuit power
/// per UE, element circuit power, and hover power for every ARIS carrier.
pub fn total_power(cfg: &ScenarioConfig, ris: &RisControl, bf: &Beamformer) -> f64 {
    let zeta = 1.0 / cfg.mu;
    let bs_and_ue: f64 = (0..bf.k_ues())
        .map(|k| zeta * bf.beam_power(k) + cfg.p_cir_w)
        .sum();
    let per_active = match cfg.power_model {
        PowerModel::Literal => cfg.elements_per_aris as f64 * cfg.p_aris_w,
        PowerModel::PerElement => cfg.p_aris_w,
    };
    let elements = ris.total_active() as f64 * per_active;
    let hover = cfg.n_aris as f64 * hover_power(&cfg.hover).expect("validated hover params");
    bs_and_ue + elements + hover
}

/// Slot-averaged energy efficiency (1/T) sum_t R[t]/P[t], bit/joule.
pub fn energy_efficiency(
    cfg: &ScenarioConfig,
    slots: &[ChannelRealization],
    ris: &RisControl,
    bf: &Beamformer,
) -> Result<f64> {
    if slots.is_empty() {
        return Err(Error::Dimension("need at least one slot realization".into()));
    }
    let p = total_power(cfg, ris, bf);
    if !(p > 0.0) {
        return Err(Error::Config(format!("total power must be > 0, got {p}")));
    }
    let acc: f64 = slots.iter().map(|ch| sum_rate(cfg, ch, ris, bf) / p).sum();
    Ok(acc / slots.len() as f64)
}
