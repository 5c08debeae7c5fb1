//! Channel generation: Rayleigh direct links, LoS-only BS-ARIS links, and
//! Rician ARIS-UE links. Small-scale draws are kept separate from the
//! geometry-dependent composition so a slot's fading stays frozen while the
//! deployment optimizer moves the ARISs.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::{direction_cosine_x, euclidean_distance, Position3D};

/// Standard complex Gaussian entry (unit total variance).
pub fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let n = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
    Complex64::new(n.sample(rng), n.sample(rng))
}

fn gaussian_vector<R: Rng>(rng: &mut R, len: usize) -> Array1<Complex64> {
    Array1::from_iter((0..len).map(|_| complex_gaussian(rng)))
}

/// Steering vector of a half-wavelength ULA: entry m = exp(j·pi·m·cos_angle).
pub fn steering_vector(len: usize, cos_angle: f64) -> Array1<Complex64> {
    Array1::from_iter(
        (0..len).map(|m| Complex64::from_polar(1.0, std::f64::consts::PI * m as f64 * cos_angle)),
    )
}

fn path_gain(cfg: &ScenarioConfig, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Geometry(format!("link distance must be > 0, got {d}")));
    }
    Ok((cfg.kappa * d.powf(-cfg.alpha)).sqrt())
}

/// Scale a raw CN(0,1) row into the Rayleigh BS-UE channel.
pub fn direct_channel_from(cfg: &ScenarioConfig, d_bk: f64, raw: &Array1<Complex64>) -> Result<Array1<Complex64>> {
    let scale = path_gain(cfg, d_bk)?;
    Ok(raw.mapv(|h| h * scale))
}

/// Draw the Rayleigh BS-UE row (length M) for one UE.
pub fn sample_direct_channel<R: Rng>(
    rng: &mut R,
    cfg: &ScenarioConfig,
    d_bk: f64,
) -> Result<Array1<Complex64>> {
    let raw = gaussian_vector(rng, cfg.bs_antennas);
    direct_channel_from(cfg, d_bk, &raw)
}

/// Deterministic LoS-only BS-ARIS channel, I_n x M. Entry (i, m) is the outer
/// product of the ARIS-side and BS-side steering vectors, scaled by the path
/// gain and the Rician LoS weight.
pub fn sample_bs_aris_channel(
    cfg: &ScenarioConfig,
    bs: Position3D,
    aris: Position3D,
) -> Result<Array2<Complex64>> {
    let d = euclidean_distance(bs, aris);
    let scale = path_gain(cfg, d)? * (cfg.rician_k / (1.0 + cfg.rician_k)).sqrt();
    let at_aris = steering_vector(cfg.elements_per_aris, direction_cosine_x(aris, bs));
    let at_bs = steering_vector(cfg.bs_antennas, direction_cosine_x(bs, aris));
    let mut h = Array2::zeros((cfg.elements_per_aris, cfg.bs_antennas));
    for i in 0..cfg.elements_per_aris {
        for m in 0..cfg.bs_antennas {
            h[[i, m]] = at_aris[i] * at_bs[m] * scale;
        }
    }
    Ok(h)
}

/// Rician ARIS-UE row (length I_n) from a frozen NLoS draw.
pub fn aris_ue_channel_from(
    cfg: &ScenarioConfig,
    aris: Position3D,
    ue: Position3D,
    nlos_raw: &Array1<Complex64>,
) -> Result<Array1<Complex64>> {
    let d = euclidean_distance(aris, ue);
    let scale = path_gain(cfg, d)?;
    let w_los = (cfg.rician_k / (1.0 + cfg.rician_k)).sqrt();
    let w_nlos = (1.0 / (1.0 + cfg.rician_k)).sqrt();
    let los = steering_vector(cfg.elements_per_aris, direction_cosine_x(aris, ue));
    let mut h = Array1::zeros(cfg.elements_per_aris);
    for i in 0..cfg.elements_per_aris {
        h[i] = (los[i] * w_los + nlos_raw[i] * w_nlos) * scale;
    }
    Ok(h)
}

/// Draw the Rician ARIS-UE row for one (ARIS, UE) pair.
pub fn sample_aris_ue_channel<R: Rng>(
    rng: &mut R,
    cfg: &ScenarioConfig,
    aris: Position3D,
    ue: Position3D,
) -> Result<Array1<Complex64>> {
    let raw = gaussian_vector(rng, cfg.elements_per_aris);
    aris_ue_channel_from(cfg, aris, ue, &raw)
}

/// One slot's small-scale randomness, frozen so channel re-composition at a
/// new deployment is deterministic.
#[derive(Debug, Clone)]
pub struct FadingDraws {
    /// K x M raw CN(0,1) scattering for the direct links.
    pub direct: Array2<Complex64>,
    /// Per-ARIS K x I_n raw CN(0,1) NLoS components of the ARIS-UE links.
    pub aris_ue_nlos: Vec<Array2<Complex64>>,
}

impl FadingDraws {
    pub fn draw<R: Rng>(rng: &mut R, cfg: &ScenarioConfig) -> Self {
        let k = cfg.k_ues;
        let m = cfg.bs_antennas;
        let i = cfg.elements_per_aris;
        let direct = Array2::from_shape_fn((k, m), |_| complex_gaussian(rng));
        let aris_ue_nlos = (0..cfg.n_aris)
            .map(|_| Array2::from_shape_fn((k, i), |_| complex_gaussian(rng)))
            .collect();
        Self { direct, aris_ue_nlos }
    }
}

/// One draw of every link for a time slot, composed at a given deployment.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// K x M direct rows.
    pub direct: Array2<Complex64>,
    /// Per ARIS n: I_n x M.
    pub bs_aris: Vec<Array2<Complex64>>,
    /// Per ARIS n: K x I_n.
    pub aris_ue: Vec<Array2<Complex64>>,
}

impl ChannelRealization {
    /// Compose all links from frozen draws, BS/UE geometry and ARIS positions.
    pub fn compose(
        cfg: &ScenarioConfig,
        ues: &[Position3D],
        aris_positions: &[Position3D],
        draws: &FadingDraws,
    ) -> Result<Self> {
        if ues.len() != cfg.k_ues || aris_positions.len() != cfg.n_aris {
            return Err(Error::Dimension(format!(
                "expected {} UEs and {} ARISs, got {} and {}",
                cfg.k_ues,
                cfg.n_aris,
                ues.len(),
                aris_positions.len()
            )));
        }
        let mut direct = Array2::zeros((cfg.k_ues, cfg.bs_antennas));
        for (k, ue) in ues.iter().enumerate() {
            let d = euclidean_distance(cfg.bs_position, *ue);
            let row = direct_channel_from(cfg, d, &draws.direct.row(k).to_owned())?;
            direct.row_mut(k).assign(&row);
        }
        let mut bs_aris = Vec::with_capacity(cfg.n_aris);
        let mut aris_ue = Vec::with_capacity(cfg.n_aris);
        for (n, q) in aris_positions.iter().enumerate() {
            bs_aris.push(sample_bs_aris_channel(cfg, cfg.bs_position, *q)?);
            let mut rows = Array2::zeros((cfg.k_ues, cfg.elements_per_aris));
            for (k, ue) in ues.iter().enumerate() {
                let nlos = draws.aris_ue_nlos[n].row(k).to_owned();
                let row = aris_ue_channel_from(cfg, *q, *ue, &nlos)?;
                rows.row_mut(k).assign(&row);
            }
            aris_ue.push(rows);
        }
        Ok(Self { direct, bs_aris, aris_ue })
    }

    /// Draw a fresh realization (fresh fading) at the given deployment.
    pub fn sample<R: Rng>(
        rng: &mut R,
        cfg: &ScenarioConfig,
        ues: &[Position3D],
        aris_positions: &[Position3D],
    ) -> Result<Self> {
        let draws = FadingDraws::draw(rng, cfg);
        Self::compose(cfg, ues, aris_positions, &draws)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn cfg_with(kappa: f64, alpha: f64) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::table_i(7);
        cfg.kappa = kappa;
        cfg.alpha = alpha;
        cfg
    }

    #[test]
    fn direct_channel_mean_power_matches_path_loss() {
        // Table I reference gain -40 dB at d = 1: per-entry power 1e-4.
        let cfg = cfg_with(1e-4, 4.0);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let h = sample_direct_channel(&mut rng, &cfg, 1.0).unwrap();
            acc += h.iter().map(|c| c.norm_sqr()).sum::<f64>() / h.len() as f64;
        }
        let mean = acc / draws as f64;
        assert!(
            (mean - 1e-4).abs() / 1e-4 < 0.02,
            "mean power {mean} deviates more than 2% from 1e-4"
        );
    }

    #[test]
    fn direct_channel_vanishes_at_long_range() {
        let cfg = cfg_with(1e-4, 4.0);
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let h = sample_direct_channel(&mut rng, &cfg, 1e6).unwrap();
        assert!(h.iter().all(|c| c.norm() < 1e-10));
    }

    #[test]
    fn direct_channel_zero_distance_rejected() {
        let cfg = cfg_with(1e-4, 4.0);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        assert!(sample_direct_channel(&mut rng, &cfg, 0.0).is_err());
    }

    #[test]
    fn direct_channel_seeded_determinism() {
        let cfg = cfg_with(1e-4, 4.0);
        let a = sample_direct_channel(&mut ChaCha12Rng::seed_from_u64(9), &cfg, 3.0).unwrap();
        let b = sample_direct_channel(&mut ChaCha12Rng::seed_from_u64(9), &cfg, 3.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bs_aris_rician_weight() {
        // Table I Rician factor 10: LoS weight sqrt(10/11).
        let mut cfg = cfg_with(1.0, 2.0);
        cfg.rician_k = 10.0;
        let bs = Position3D::new(0.0, 0.0, 10.0);
        let aris = Position3D::new(1.0, 0.0, 10.0);
        let h = sample_bs_aris_channel(&cfg, bs, aris).unwrap();
        let expected = (10.0f64 / 11.0).sqrt(); // path gain is 1 at d = 1, kappa = 1
        assert!((h[[0, 0]].norm() - expected).abs() < 1e-12);
        assert!((expected - 0.9535).abs() < 1e-4);
    }

    #[test]
    fn bs_aris_saturates_at_large_rician_factor() {
        let mut cfg = cfg_with(1.0, 2.0);
        cfg.rician_k = 1e12;
        let bs = Position3D::new(0.0, 0.0, 10.0);
        let aris = Position3D::new(1.0, 0.0, 10.0);
        let h = sample_bs_aris_channel(&cfg, bs, aris).unwrap();
        assert!((h[[0, 0]].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bs_aris_los_entries_unit_modulus() {
        let cfg = cfg_with(1.0, 2.0);
        let at_aris = steering_vector(8, 0.37);
        let at_bs = steering_vector(8, -0.81);
        for v in at_aris.iter().chain(at_bs.iter()) {
            assert!((v.norm() - 1.0).abs() < 1e-14);
        }
        drop(cfg);
    }

    #[test]
    fn aris_ue_pure_nlos_when_rician_zero() {
        let mut cfg = cfg_with(1.0, 2.0);
        cfg.rician_k = 0.0;
        let aris = Position3D::new(0.0, 0.0, 10.0);
        let ue = Position3D::new(0.0, 0.0, 9.0);
        let raw = gaussian_vector(&mut ChaCha12Rng::seed_from_u64(4), cfg.elements_per_aris);
        let h = aris_ue_channel_from(&cfg, aris, ue, &raw).unwrap();
        // LoS weight sqrt(0/1) = 0: the row is exactly the scaled NLoS draw.
        for i in 0..cfg.elements_per_aris {
            assert!((h[i] - raw[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn aris_ue_nlos_weight_at_rician_ten() {
        assert!(((1.0f64 / 11.0).sqrt() - 0.3015).abs() < 1e-4);
    }

    #[test]
    fn aris_ue_mean_power_matches_path_loss() {
        let mut cfg = cfg_with(1e-4, 4.0);
        cfg.rician_k = 10.0;
        cfg.elements_per_aris = 4;
        let aris = Position3D::new(0.0, 0.0, 2.0);
        let ue = Position3D::new(0.0, 0.0, 0.0);
        let expected = 1e-4 * 2.0f64.powf(-4.0);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let h = sample_aris_ue_channel(&mut rng, &cfg, aris, ue).unwrap();
            acc += h.iter().map(|c| c.norm_sqr()).sum::<f64>() / h.len() as f64;
        }
        let mean = acc / draws as f64;
        assert!(
            (mean - expected).abs() / expected < 0.02,
            "mean {mean} vs expected {expected}"
        );
    }

    #[test]
    fn composition_is_deterministic_in_draws() {
        let cfg = ScenarioConfig::desk(11);
        let ues = crate::geometry::draw_ue_positions(&mut ChaCha12Rng::seed_from_u64(11), cfg.k_ues, cfg.area_m);
        let q = crate::geometry::circle_layout(cfg.bs_position, cfg.n_aris, cfg.area_m, cfg.aris_altitude_m);
        let draws = FadingDraws::draw(&mut ChaCha12Rng::seed_from_u64(12), &cfg);
        let a = ChannelRealization::compose(&cfg, &ues, &q, &draws).unwrap();
        let b = ChannelRealization::compose(&cfg, &ues, &q, &draws).unwrap();
        assert_eq!(a.direct, b.direct);
        for n in 0..cfg.n_aris {
            assert_eq!(a.bs_aris[n], b.bs_aris[n]);
            assert_eq!(a.aris_ue[n], b.aris_ue[n]);
        }
    }
}
