use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Position3D;

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Watts to dBm.
pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// dB to linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// How the configured noise figure is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// Spectral density; total noise = density × bandwidth.
    PerHz { dbm_per_hz: f64 },
    /// Literal total noise power.
    Total { dbm: f64 },
}

/// ARIS element circuit-power accounting (see Eq.-level ambiguity on the
/// element sum: `Literal` charges I_n·P_ARIS per active element).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerModel {
    Literal,
    PerElement,
}

/// Which rate condition gates the RL reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardGuard {
    /// Every UE must meet its minimum rate.
    PerUe,
    /// The sum-rate must meet the minimum (the paper's literal text).
    SumRate,
}

/// Rotary-wing hover power constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UavHoverParams {
    /// Profile drag coefficient.
    pub profile_drag: f64,
    /// Air density, kg/m^3.
    pub air_density: f64,
    /// Rotor solidity.
    pub rotor_solidity: f64,
    /// Rotor disc area, m^2.
    pub disc_area_m2: f64,
    /// Blade angular velocity, rad/s.
    pub blade_velocity_rad_s: f64,
    /// Rotor radius, m.
    pub rotor_radius_m: f64,
    /// Incremental correction factor on induced power.
    pub correction_factor: f64,
    /// Aircraft weight, N.
    pub aircraft_weight_n: f64,
}

impl UavHoverParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("hover.profile_drag", self.profile_drag),
            ("hover.air_density", self.air_density),
            ("hover.rotor_solidity", self.rotor_solidity),
            ("hover.disc_area_m2", self.disc_area_m2),
            ("hover.blade_velocity_rad_s", self.blade_velocity_rad_s),
            ("hover.rotor_radius_m", self.rotor_radius_m),
            ("hover.correction_factor", self.correction_factor),
            ("hover.aircraft_weight_n", self.aircraft_weight_n),
        ];
        for (name, v) in fields {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for UavHoverParams {
    /// Full-scale rotary-wing constants used by the paper-profile runs.
    fn default() -> Self {
        Self {
            profile_drag: 0.012,
            air_density: 1.225,
            rotor_solidity: 0.05,
            disc_area_m2: 0.503,
            blade_velocity_rad_s: 300.0,
            rotor_radius_m: 0.4,
            correction_factor: 0.1,
            aircraft_weight_n: 20.0,
        }
    }
}

impl UavHoverParams {
    /// Palm-scale constants for the desk profile (~0.2 W hover).
    pub fn desk() -> Self {
        Self {
            profile_drag: 0.012,
            air_density: 1.225,
            rotor_solidity: 0.05,
            disc_area_m2: 0.05,
            blade_velocity_rad_s: 60.0,
            rotor_radius_m: 0.1,
            correction_factor: 0.1,
            aircraft_weight_n: 0.1,
        }
    }
}

/// Full network description: geometry, counts, physical constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// K, number of UEs.
    pub k_ues: usize,
    /// N, number of ARISs.
    pub n_aris: usize,
    /// I_n, reflective elements per ARIS.
    pub elements_per_aris: usize,
    /// M, BS antennas.
    pub bs_antennas: usize,
    /// W, Hz.
    pub bandwidth_hz: f64,
    pub noise: NoiseSpec,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Reference channel gain at 1 m, linear.
    pub kappa: f64,
    /// Rician factor.
    pub rician_k: f64,
    /// b, phase resolution in bits.
    pub phase_bits: u32,
    /// Regulatory transmit power bound, W.
    pub p_max_w: f64,
    /// Optional operating cap on transmit power; effective budget is
    /// min(p_max_w, cap). Used by the desk profile's saturation point.
    pub tx_power_cap_w: Option<f64>,
    /// BS amplifier efficiency, (0, 1].
    pub mu: f64,
    /// Circuit power per UE, W.
    pub p_cir_w: f64,
    /// Circuit power per ARIS element, W.
    pub p_aris_w: f64,
    /// Per-UE minimum rate, bit/s.
    pub r_min_bps: f64,
    /// Threshold on squared ARIS separation, m^2 (the constraint compares
    /// ||q_i - q_j||^2 against this value).
    pub d_min_m2: f64,
    /// T, time slots.
    pub slots: usize,
    /// Square deployment area side, m.
    pub area_m: f64,
    pub max_altitude_m: f64,
    /// Hover altitude used when ARIS z is held fixed.
    pub aris_altitude_m: f64,
    pub bs_position: Position3D,
    /// Reflection amplitude applied to every element.
    pub beta: f64,
    pub power_model: PowerModel,
    pub reward_guard: RewardGuard,
    pub hover: UavHoverParams,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Total noise power in watts.
    pub fn sigma2_w(&self) -> f64 {
        match self.noise {
            NoiseSpec::PerHz { dbm_per_hz } => dbm_to_watts(dbm_per_hz) * self.bandwidth_hz,
            NoiseSpec::Total { dbm } => dbm_to_watts(dbm),
        }
    }

    /// Effective transmit power budget (regulatory bound intersected with the
    /// operating cap, if any).
    pub fn tx_budget_w(&self) -> f64 {
        match self.tx_power_cap_w {
            Some(cap) => self.p_max_w.min(cap),
            None => self.p_max_w,
        }
    }

    pub fn phase_levels(&self) -> u32 {
        1u32 << self.phase_bits
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_ues < 1 {
            return Err(Error::Config(format!("k must be >= 1, got {}", self.k_ues)));
        }
        if self.n_aris < 1 {
            return Err(Error::Config(format!("n must be >= 1, got {}", self.n_aris)));
        }
        if self.elements_per_aris < 1 {
            return Err(Error::Config(format!(
                "i_n must be >= 1, got {}",
                self.elements_per_aris
            )));
        }
        if self.bs_antennas < 1 {
            return Err(Error::Config(format!("m must be >= 1, got {}", self.bs_antennas)));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::Config(format!(
                "amp_efficiency must be in (0, 1], got {}",
                self.mu
            )));
        }
        if self.alpha < 2.0 {
            return Err(Error::Config(format!("alpha must be >= 2, got {}", self.alpha)));
        }
        if self.rician_k < 0.0 {
            return Err(Error::Config(format!(
                "rician_factor must be >= 0, got {}",
                self.rician_k
            )));
        }
        if self.phase_bits < 1 {
            return Err(Error::Config(format!(
                "phase_bits must be >= 1, got {}",
                self.phase_bits
            )));
        }
        if !(self.p_max_w > 0.0) {
            return Err(Error::Config(format!("p_max must be > 0, got {}", self.p_max_w)));
        }
        if !(self.d_min_m2 > 0.0) {
            return Err(Error::Config(format!(
                "d_min_m2 must be > 0, got {}",
                self.d_min_m2
            )));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::Config(format!(
                "bandwidth_hz must be > 0, got {}",
                self.bandwidth_hz
            )));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::Config(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if self.slots < 1 {
            return Err(Error::Config(format!("slots must be >= 1, got {}", self.slots)));
        }
        if !(self.beta >= 0.0 && self.beta <= 1.0) {
            return Err(Error::Config(format!("beta must be in [0, 1], got {}", self.beta)));
        }
        if self.r_min_bps < 0.0 {
            return Err(Error::Config(format!(
                "r_min_bps must be >= 0, got {}",
                self.r_min_bps
            )));
        }
        if !(self.sigma2_w() > 0.0) {
            return Err(Error::Config("noise power must be > 0".into()));
        }
        self.hover.validate()
    }

    /// The published simulation profile: 12 UEs, 15 antennas, 4 ARISs of 10
    /// elements in a 100 m square, -174 dBm/Hz noise over 2 MHz.
    pub fn table_i(seed: u64) -> Self {
        Self {
            k_ues: 12,
            n_aris: 4,
            elements_per_aris: 10,
            bs_antennas: 15,
            bandwidth_hz: 2e6,
            noise: NoiseSpec::PerHz { dbm_per_hz: -174.0 },
            alpha: 4.0,
            kappa: db_to_linear(-40.0),
            rician_k: 10.0,
            phase_bits: 2,
            p_max_w: dbm_to_watts(30.0),
            tx_power_cap_w: None,
            mu: 0.8,
            p_cir_w: dbm_to_watts(10.0),
            p_aris_w: dbm_to_watts(10.0),
            r_min_bps: 1e5,
            d_min_m2: 100.0,
            slots: 1,
            area_m: 100.0,
            max_altitude_m: 100.0,
            aris_altitude_m: 50.0,
            bs_position: Position3D::new(50.0, 50.0, 25.0),
            beta: 1.0,
            power_model: PowerModel::Literal,
            reward_guard: RewardGuard::PerUe,
            hover: UavHoverParams::default(),
            seed,
        }
    }

    /// Shrunk profile sized for fast runs: strong cascades (kappa = 1,
    /// alpha = 2, short links) and a 1 W operating point so transmit-power
    /// sweeps saturate above 30 dBm.
    pub fn desk(seed: u64) -> Self {
        Self {
            k_ues: 4,
            n_aris: 2,
            elements_per_aris: 4,
            bs_antennas: 4,
            bandwidth_hz: 2e6,
            noise: NoiseSpec::Total { dbm: 4.0 },
            alpha: 2.0,
            kappa: 1.0,
            rician_k: 10.0,
            phase_bits: 2,
            p_max_w: dbm_to_watts(30.0),
            tx_power_cap_w: Some(1.0),
            mu: 0.8,
            p_cir_w: 1.2,
            p_aris_w: 1e-3,
            r_min_bps: 2e5,
            d_min_m2: 4.0,
            slots: 1,
            area_m: 20.0,
            max_altitude_m: 20.0,
            aris_altitude_m: 4.0,
            bs_position: Position3D::new(10.0, 10.0, 6.0),
            beta: 1.0,
            power_model: PowerModel::Literal,
            reward_guard: RewardGuard::PerUe,
            hover: UavHoverParams::desk(),
            seed,
        }
    }
}
