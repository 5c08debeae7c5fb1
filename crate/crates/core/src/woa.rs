//! Whale optimization for the BS power-control subproblem: encircling,
//! spiral bubble-net, and random-search updates over a real-vector encoding
//! of the beamformer, with penalty-method rate constraints.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::beamformer::Beamformer;
use crate::channel::ChannelRealization;
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::metrics::{effective_channel, per_ue_rates, total_power};
use crate::ris::RisControl;
use crate::scenario::derive_rng;

/// How whale positions map to beamformers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WoaEncoding {
    /// Full complex beamformer as stacked (re, im) pairs, length 2·K·M.
    Full,
    /// Matched directions from the effective channels; positions are K
    /// nonnegative per-UE power scalars.
    MatchedPower,
}

#[derive(Debug, Clone)]
pub struct WoaParams {
    /// Population size U.
    pub population: usize,
    /// Iteration cap.
    pub max_iters: usize,
    /// Logarithmic-spiral shape constant.
    pub b_spiral: f64,
    /// Penalty coefficient; None selects 1e6/r_min^2 (or 1 when r_min = 0).
    pub varpi: Option<f64>,
    /// Penalize rate shortfalls (physical orientation) or follow the
    /// displayed indicator literally.
    pub literal_indicator: bool,
    pub encoding: WoaEncoding,
}

impl Default for WoaParams {
    fn default() -> Self {
        Self {
            population: 30,
            max_iters: 200,
            b_spiral: 1.0,
            varpi: None,
            literal_indicator: false,
            encoding: WoaEncoding::Full,
        }
    }
}

/// Coefficient draw for one whale update.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub a_vec: Vec<f64>,
    pub c_vec: Vec<f64>,
    pub l: f64,
    pub p: f64,
}

/// Draw A = 2a·r - a (elementwise), C = 2r', l in [-1, 1], p in [0, 1].
pub fn coefficients<R: Rng>(a_ctrl: f64, dim: usize, rng: &mut R) -> Coefficients {
    let a_vec = (0..dim).map(|_| 2.0 * a_ctrl * rng.gen::<f64>() - a_ctrl).collect();
    let c_vec = (0..dim).map(|_| 2.0 * rng.gen::<f64>()).collect();
    let l = rng.gen_range(-1.0..=1.0);
    let p = rng.gen::<f64>();
    Coefficients { a_vec, c_vec, l, p }
}

/// Encircling move toward the best agent: new = best - A∘|C∘best - whale|.
pub fn encircle_update(whale: &[f64], best: &[f64], a: &[f64], c: &[f64]) -> Vec<f64> {
    whale
        .iter()
        .zip(best)
        .zip(a.iter().zip(c))
        .map(|((w, b), (ai, ci))| {
            let d = (ci * b - w).abs();
            b - ai * d
        })
        .collect()
}

/// Spiral bubble-net move: new = |best - whale|·e^{b·l}·cos(2πl) + best.
pub fn spiral_update(whale: &[f64], best: &[f64], l: f64, b_spiral: f64) -> Vec<f64> {
    let swirl = (b_spiral * l).exp() * (2.0 * std::f64::consts::PI * l).cos();
    whale
        .iter()
        .zip(best)
        .map(|(w, b)| (b - w).abs() * swirl + b)
        .collect()
}

/// Exploration move toward a random agent: new = rand - A∘|C∘rand - whale|.
pub fn explore_update(whale: &[f64], random_whale: &[f64], a: &[f64], c: &[f64]) -> Vec<f64> {
    whale
        .iter()
        .zip(random_whale)
        .zip(a.iter().zip(c))
        .map(|((w, r), (ai, ci))| {
            let d = (ci * r - w).abs();
            r - ai * d
        })
        .collect()
}

/// Generic WOA driver minimizing `fitness` over a box.
pub struct WoaDriver {
    pub params: WoaParams,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct WoaRun {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// Best-so-far fitness after each iteration (elitist, non-increasing).
    pub trace: Vec<f64>,
}

impl WoaDriver {
    pub fn new(params: WoaParams, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { params, lower, upper }
    }

    fn clamp(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }

    pub fn minimize<F: FnMut(&[f64]) -> f64>(
        &self,
        mut fitness: F,
        rng: &mut ChaCha12Rng,
    ) -> WoaRun {
        let dim = self.lower.len();
        let u = self.params.population;
        let mut pop: Vec<Vec<f64>> = (0..u)
            .map(|_| {
                (0..dim)
                    .map(|i| rng.gen_range(self.lower[i]..=self.upper[i]))
                    .collect()
            })
            .collect();
        let mut fit: Vec<f64> = pop.iter().map(|x| fitness(x)).collect();
        let best0 = (0..u).min_by(|&a, &b| fit[a].partial_cmp(&fit[b]).unwrap()).unwrap();
        let mut best_position = pop[best0].clone();
        let mut best_fitness = fit[best0];
        let mut trace = Vec::with_capacity(self.params.max_iters);
        for iter in 1..=self.params.max_iters {
            let a_ctrl = 2.0 - iter as f64 * (2.0 / self.params.max_iters as f64);
            for uidx in 0..u {
                let coef = coefficients(a_ctrl, dim, rng);
                let a_inf = coef.a_vec.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let mut candidate = if coef.p < 0.5 {
                    if a_inf < 1.0 {
                        encircle_update(&pop[uidx], &best_position, &coef.a_vec, &coef.c_vec)
                    } else {
                        let r = rng.gen_range(0..u);
                        let rand_pos = pop[r].clone();
                        explore_update(&pop[uidx], &rand_pos, &coef.a_vec, &coef.c_vec)
                    }
                } else {
                    spiral_update(&pop[uidx], &best_position, coef.l, self.params.b_spiral)
                };
                self.clamp(&mut candidate);
                let f = fitness(&candidate);
                pop[uidx] = candidate;
                fit[uidx] = f;
            }
            let best_idx =
                (0..u).min_by(|&a, &b| fit[a].partial_cmp(&fit[b]).unwrap()).unwrap();
            if fit[best_idx] < best_fitness {
                best_fitness = fit[best_idx];
                best_position = pop[best_idx].clone();
            }
            trace.push(best_fitness);
        }
        WoaRun { best_position, best_fitness, trace }
    }
}

/// Scale the whole beamformer onto the power budget when it overshoots.
pub fn project_power(bf: &Beamformer, p_max_w: f64) -> Beamformer {
    bf.project(p_max_w)
}

/// Penalty fitness (minimization sense): -EE plus quadratic rate-shortfall
/// penalties.
pub fn penalty_fitness(
    cfg: &ScenarioConfig,
    ch: &ChannelRealization,
    ris: &RisControl,
    bf: &Beamformer,
    varpi: f64,
    literal_indicator: bool,
) -> f64 {
    let rates = per_ue_rates(cfg, ch, ris, bf);
    let r: f64 = rates.iter().sum();
    let p = total_power(cfg, ris, bf);
    let mut penalty = 0.0;
    for rate in &rates {
        let f_k = cfg.r_min_bps - rate; // positive on shortfall
        let indicator = if literal_indicator {
            // displayed convention: F_k = 1 iff f_k < 0
            if f_k < 0.0 { 1.0 } else { 0.0 }
        } else {
            // physical orientation: penalize violations
            if f_k > 0.0 { 1.0 } else { 0.0 }
        };
        penalty += indicator * f_k * f_k;
    }
    -r / p + varpi * penalty
}

fn default_varpi(cfg: &ScenarioConfig) -> f64 {
    if cfg.r_min_bps > 0.0 {
        1e6 / (cfg.r_min_bps * cfg.r_min_bps)
    } else {
        1.0
    }
}

fn decode_full(cfg: &ScenarioConfig, x: &[f64], budget: f64) -> Beamformer {
    let (k, m) = (cfg.k_ues, cfg.bs_antennas);
    let mut g = Array2::zeros((k, m));
    for ki in 0..k {
        for mi in 0..m {
            let base = 2 * (ki * m + mi);
            g[[ki, mi]] = Complex64::new(x[base], x[base + 1]);
        }
    }
    Beamformer::new(g).project(budget)
}

fn decode_matched(
    cfg: &ScenarioConfig,
    x: &[f64],
    rows: &[ndarray::Array1<Complex64>],
    budget: f64,
) -> Beamformer {
    let (k, m) = (cfg.k_ues, cfg.bs_antennas);
    let mut g = Array2::zeros((k, m));
    for ki in 0..k {
        let power = x[ki].max(0.0);
        let norm = rows[ki].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            let scale = power.sqrt() / norm;
            for mi in 0..m {
                g[[ki, mi]] = rows[ki][mi].conj() * scale;
            }
        }
    }
    Beamformer::new(g).project(budget)
}

#[derive(Debug, Clone)]
pub struct WoaOutcome {
    pub bf: Beamformer,
    pub best_fitness: f64,
    pub trace: Vec<f64>,
}

/// Algorithm-3 entry point: search the beamformer space for the given
/// channels and RIS configuration.
pub fn woa_optimize(
    cfg: &ScenarioConfig,
    ch: &ChannelRealization,
    ris: &RisControl,
    params: &WoaParams,
    seed: u64,
) -> Result<WoaOutcome> {
    let budget = cfg.tx_budget_w();
    let varpi = params.varpi.unwrap_or_else(|| default_varpi(cfg));
    let mut rng = derive_rng(seed, "woa");
    let (dim, lower, upper, rows) = match params.encoding {
        WoaEncoding::Full => {
            let dim = 2 * cfg.k_ues * cfg.bs_antennas;
            let amp = (budget / (cfg.k_ues * cfg.bs_antennas) as f64).sqrt();
            (dim, vec![-amp; dim], vec![amp; dim], Vec::new())
        }
        WoaEncoding::MatchedPower => {
            let rows: Vec<_> = (0..cfg.k_ues).map(|k| effective_channel(ch, ris, k)).collect();
            let dim = cfg.k_ues;
            (dim, vec![0.0; dim], vec![budget; dim], rows)
        }
    };
    let driver = WoaDriver::new(params.clone(), lower, upper);
    let encoding = params.encoding;
    let literal = params.literal_indicator;
    let run = driver.minimize(
        |x| {
            let bf = match encoding {
                WoaEncoding::Full => decode_full(cfg, x, budget),
                WoaEncoding::MatchedPower => decode_matched(cfg, x, &rows, budget),
            };
            penalty_fitness(cfg, ch, ris, &bf, varpi, literal)
        },
        &mut rng,
    );
    let bf = match encoding {
        WoaEncoding::Full => decode_full(cfg, &run.best_position, budget),
        WoaEncoding::MatchedPower => decode_matched(cfg, &run.best_position, &rows, budget),
    };
    Ok(WoaOutcome { bf, best_fitness: run.best_fitness, trace: run.trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::FadingDraws;
    use crate::config::NoiseSpec;
    use crate::geometry::Position3D;

    #[test]
    fn coefficients_hand_cases_and_ranges() {
        // a = 2, r = 0.5 -> A = 0, C = 1; a = 0 -> A = 0; r = 1, a = 2 -> A = 2.
        assert_eq!(2.0 * 2.0 * 0.5 - 2.0, 0.0);
        assert_eq!(2.0 * 0.5, 1.0);
        assert_eq!(2.0 * 0.0 * 0.7 - 0.0, 0.0);
        assert_eq!(2.0 * 2.0 * 1.0 - 2.0, 2.0);
        let mut rng = derive_rng(1, "coef");
        for _ in 0..200 {
            let a_ctrl = rng.gen_range(0.0..=2.0);
            let c = coefficients(a_ctrl, 6, &mut rng);
            assert!(c.a_vec.iter().all(|v| v.abs() <= a_ctrl + 1e-12));
            assert!(c.c_vec.iter().all(|v| (0.0..=2.0).contains(v)));
            assert!((-1.0..=1.0).contains(&c.l));
            assert!((0.0..=1.0).contains(&c.p));
        }
    }

    #[test]
    fn encircle_hand_cases() {
        // A = 0 collapses onto the leader.
        let new = encircle_update(&[0.0, 5.0], &[2.0, -3.0], &[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(new, vec![2.0, -3.0]);
        // whale at best with C = 1: fixed point.
        let new = encircle_update(&[2.0], &[2.0], &[0.7], &[1.0]);
        assert_eq!(new, vec![2.0]);
        // scalar case: best 2, whale 0, C = 1, A = 0.5 -> D = 2, new = 1.
        let new = encircle_update(&[0.0], &[2.0], &[0.5], &[1.0]);
        assert_eq!(new, vec![1.0]);
    }

    #[test]
    fn spiral_hand_cases() {
        // whale at best: stays.
        assert_eq!(spiral_update(&[3.0], &[3.0], 0.37, 1.0), vec![3.0]);
        // l = 0: new = D' + best.
        assert_eq!(spiral_update(&[1.0], &[3.0], 0.0, 1.0), vec![5.0]);
        // l = 0.25: cos(pi/2) = 0 -> new = best.
        let v = spiral_update(&[1.0], &[3.0], 0.25, 1.0);
        assert!((v[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn explore_hand_cases() {
        // A = 0 jumps to the random agent.
        assert_eq!(explore_update(&[9.0], &[4.0], &[0.0], &[1.5]), vec![4.0]);
        // random agent equals whale with C = 1: stays.
        assert_eq!(explore_update(&[4.0], &[4.0], &[0.8], &[1.0]), vec![4.0]);
    }

    #[test]
    fn branch_frequencies_all_above_five_percent() {
        let mut rng = derive_rng(2, "branches");
        let iters = 10_000;
        let (mut enc, mut exp, mut spi) = (0usize, 0usize, 0usize);
        for i in 1..=iters {
            let a_ctrl = 2.0 - i as f64 * (2.0 / iters as f64);
            let c = coefficients(a_ctrl, 8, &mut rng);
            let a_inf = c.a_vec.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if c.p < 0.5 {
                if a_inf < 1.0 {
                    enc += 1;
                } else {
                    exp += 1;
                }
            } else {
                spi += 1;
            }
        }
        let f = |x: usize| x as f64 / iters as f64;
        assert!(f(enc) > 0.05, "encircle {}", f(enc));
        assert!(f(exp) > 0.05, "explore {}", f(exp));
        assert!(f(spi) > 0.05, "spiral {}", f(spi));
    }

    #[test]
    fn sphere_reaches_small_fitness() {
        let params = WoaParams { population: 30, max_iters: 500, ..Default::default() };
        let driver = WoaDriver::new(params, vec![-5.0; 10], vec![5.0; 10]);
        let mut rng = derive_rng(3, "sphere");
        let run = driver.minimize(|x| x.iter().map(|v| v * v).sum(), &mut rng);
        assert!(run.best_fitness <= 1e-3, "sphere best {}", run.best_fitness);
    }

    #[test]
    fn elitist_trace_non_increasing() {
        let params = WoaParams { population: 12, max_iters: 120, ..Default::default() };
        let driver = WoaDriver::new(params, vec![-3.0; 4], vec![3.0; 4]);
        let mut rng = derive_rng(4, "elitist");
        // rugged multimodal fitness
        let run = driver.minimize(
            |x| x.iter().map(|v| v * v - 2.0 * (3.0 * v).cos()).sum::<f64>(),
            &mut rng,
        );
        for w in run.trace.windows(2) {
            assert!(w[1] <= w[0], "best fitness regressed: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn single_iteration_returns_best_of_initial_population() {
        let params = WoaParams { population: 8, max_iters: 1, ..Default::default() };
        let driver = WoaDriver::new(params, vec![-2.0; 3], vec![2.0; 3]);
        let mut rng = derive_rng(5, "one-iter");
        let run = driver.minimize(|x| x.iter().map(|v| v * v).sum(), &mut rng);
        assert_eq!(run.trace.len(), 1);
        assert!(run.best_fitness <= run.trace[0] + 1e-15);
    }

    fn fixture() -> (ScenarioConfig, ChannelRealization, RisControl) {
        let mut cfg = ScenarioConfig::desk(6);
        cfg.k_ues = 2;
        cfg.n_aris = 1;
        cfg.elements_per_aris = 2;
        cfg.bs_antennas = 2;
        cfg.noise = NoiseSpec::Total { dbm: 0.0 };
        let ues = vec![Position3D::ground(4.0, 4.0), Position3D::ground(16.0, 16.0)];
        let q = vec![Position3D::new(6.0, 6.0, 4.0)];
        let mut rng = derive_rng(6, "woa-fixture");
        let draws = FadingDraws::draw(&mut rng, &cfg);
        let ch = ChannelRealization::compose(&cfg, &ues, &q, &draws).unwrap();
        let ris = RisControl::all_on(1, 2, cfg.phase_bits, 1.0);
        (cfg, ch, ris)
    }

    #[test]
    fn penalty_zero_when_feasible_and_exact_shortfall_otherwise() {
        let (mut cfg, ch, ris) = fixture();
        cfg.r_min_bps = 0.0;
        let bf = Beamformer::equal_power(2, 2, cfg.tx_budget_w());
        let rates = per_ue_rates(&cfg, &ch, &ris, &bf);
        let p = total_power(&cfg, &ris, &bf);
        let fit = penalty_fitness(&cfg, &ch, &ris, &bf, 1e3, false);
        let expected = -rates.iter().sum::<f64>() / p;
        assert!((fit - expected).abs() < 1e-12 * expected.abs().max(1.0));

        // force one UE short by a known amount
        let shortfall = 1234.5;
        cfg.r_min_bps = rates[0] + shortfall;
        let fit2 = penalty_fitness(&cfg, &ch, &ris, &bf, 1.0, false);
        let mut expected2 = expected + shortfall * shortfall;
        // the other UE may also fall short under the raised floor
        let f1 = cfg.r_min_bps - rates[1];
        if f1 > 0.0 {
            expected2 += f1 * f1;
        }
        assert!(
            (fit2 - expected2).abs() <= 1e-9 * expected2.abs().max(1.0),
            "fitness {fit2} vs expected {expected2}"
        );
    }

    #[test]
    fn fitness_decreases_iff_ee_increases_when_feasible() {
        let (mut cfg, ch, ris) = fixture();
        cfg.r_min_bps = 0.0;
        let bf1 = Beamformer::equal_power(2, 2, 0.2);
        let bf2 = Beamformer::equal_power(2, 2, 0.8);
        let ee = |bf: &Beamformer| {
            per_ue_rates(&cfg, &ch, &ris, bf).iter().sum::<f64>() / total_power(&cfg, &ris, bf)
        };
        let fit1 = penalty_fitness(&cfg, &ch, &ris, &bf1, 1.0, false);
        let fit2 = penalty_fitness(&cfg, &ch, &ris, &bf2, 1.0, false);
        assert_eq!(fit1 < fit2, ee(&bf1) > ee(&bf2));
    }

    #[test]
    fn literal_indicator_penalizes_satisfied_constraints() {
        let (mut cfg, ch, ris) = fixture();
        cfg.r_min_bps = 1.0; // trivially satisfied
        let bf = Beamformer::equal_power(2, 2, cfg.tx_budget_w());
        let physical = penalty_fitness(&cfg, &ch, &ris, &bf, 1.0, false);
        let literal = penalty_fitness(&cfg, &ch, &ris, &bf, 1.0, true);
        assert!(literal > physical, "literal orientation must add penalty here");
    }

    #[test]
    fn projection_cases() {
        let bf = Beamformer::equal_power(2, 2, 0.5);
        assert_eq!(project_power(&bf, 1.0).g, bf.g);
        let big = Beamformer::equal_power(2, 2, 4.0);
        let projected = project_power(&big, 1.0);
        assert!((projected.trace_power() - 1.0).abs() < 1e-12);
        assert!((projected.g[[0, 0]].norm() - big.g[[0, 0]].norm() / 2.0).abs() < 1e-12);
        // post-projection trace = min(trace, P_max)
        assert!((project_power(&bf, 1.0).trace_power() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn woa_output_respects_power_budget() {
        let (mut cfg, ch, ris) = fixture();
        cfg.r_min_bps = 0.0;
        let params = WoaParams { max_iters: 60, ..Default::default() };
        let out = woa_optimize(&cfg, &ch, &ris, &params, 7).unwrap();
        assert!(out.bf.trace_power() <= cfg.tx_budget_w() + 1e-9);
        for w in out.trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn single_antenna_power_matches_grid_oracle() {
        // K = 1, M = 1: EE over transmit power has a unique interior optimum;
        // WOA must land within 1% of a fine grid scan.
        let mut cfg = ScenarioConfig::desk(8);
        cfg.k_ues = 1;
        cfg.n_aris = 1;
        cfg.elements_per_aris = 1;
        cfg.bs_antennas = 1;
        cfg.r_min_bps = 0.0;
        cfg.noise = NoiseSpec::Total { dbm: 0.0 };
        cfg.p_cir_w = 0.05;
        cfg.tx_power_cap_w = None;
        cfg.p_max_w = 1.0;
        let ues = vec![Position3D::ground(4.0, 4.0)];
        let q = vec![Position3D::new(6.0, 6.0, 4.0)];
        let mut rng = derive_rng(8, "grid-1d");
        let draws = FadingDraws::draw(&mut rng, &cfg);
        let ch = ChannelRealization::compose(&cfg, &ues, &q, &draws).unwrap();
        let ris = RisControl::all_on(1, 1, cfg.phase_bits, 1.0);

        // grid oracle over transmit power at 1e-3 * P_max resolution
        let mut best_power = 0.0;
        let mut best_ee = f64::NEG_INFINITY;
        for i in 0..=1000 {
            let p = i as f64 * 1e-3 * cfg.p_max_w;
            let amp = p.sqrt();
            let bf = Beamformer::new(Array2::from_elem((1, 1), Complex64::new(amp, 0.0)));
            let ee = per_ue_rates(&cfg, &ch, &ris, &bf).iter().sum::<f64>()
                / total_power(&cfg, &ris, &bf);
            if ee > best_ee {
                best_ee = ee;
                best_power = p;
            }
        }
        assert!(best_power > 0.0 && best_power < cfg.p_max_w, "optimum must be interior");

        let params = WoaParams { max_iters: 400, ..Default::default() };
        let out = woa_optimize(&cfg, &ch, &ris, &params, 8).unwrap();
        let woa_power = out.bf.trace_power();
        assert!(
            (woa_power - best_power).abs() <= 0.01 * cfg.p_max_w,
            "woa power {woa_power} vs grid {best_power}"
        );
    }
}
