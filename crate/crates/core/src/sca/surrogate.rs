//! Surrogate construction for the deployment subproblem: per-(ARIS, UE)
//! rank-one quadratic forms over path-loss square roots, the DC split of the
//! rate objective, and the first-order bounds that convexify everything.

use ndarray::Array1;
use num_complex::Complex64;
use rand::Rng;

use crate::beamformer::Beamformer;
use crate::channel::{steering_vector, FadingDraws};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::{direction_cosine_x, euclidean_distance, Position3D};
use crate::ris::RisControl;

const LN2: f64 = std::f64::consts::LN_2;

/// Slack variables of the reformulated placement problem: one `a` per ARIS
/// (BS-ARIS hop), and per-(ARIS, UE) `b` and rate proxies `r_ddot`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackState {
    pub a: Vec<f64>,
    pub b: Vec<Vec<f64>>,
    pub r_ddot: Vec<Vec<f64>>,
}

/// Affine minorant coefficients (c0, c1) with a^(-4/alpha) >= c0 + c1·a for
/// all a > 0, tight at a0.
pub fn taylor_pathloss_bound(a0: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(a0 > 0.0) {
        return Err(Error::Geometry(format!("expansion point must be > 0, got {a0}")));
    }
    let e = -4.0 / alpha;
    let c0 = (1.0 + 4.0 / alpha) * a0.powf(e);
    let c1 = -(4.0 / alpha) * a0.powf(e - 1.0);
    Ok((c0, c1))
}

/// Affine minorant of the PSD quadratic form h^T H' h, tight at h0:
/// value(h) = -h0^T H' h0 + 2 Re[h0^T H' h] = offset + lin_a·h[0] + lin_b·h[1].
#[derive(Debug, Clone, Copy)]
pub struct QuadraticMinorant {
    pub offset: f64,
    pub lin_a: f64,
    pub lin_b: f64,
}

impl QuadraticMinorant {
    pub fn value(&self, a: f64, b: f64) -> f64 {
        self.offset + self.lin_a * a + self.lin_b * b
    }
}

/// Evaluate the Hermitian quadratic form for real h.
pub fn quadratic_form(h_prime: &[[Complex64; 2]; 2], h: [f64; 2]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, hi) in h.iter().enumerate() {
        for (j, hj) in h.iter().enumerate() {
            acc += h_prime[i][j] * hi * hj;
        }
    }
    acc.re
}

pub fn taylor_quadratic_bound(h_prime: &[[Complex64; 2]; 2], h0: [f64; 2]) -> QuadraticMinorant {
    let offset = -quadratic_form(h_prime, h0);
    // row vector h0^T H'
    let row0 = h_prime[0][0] * h0[0] + h_prime[1][0] * h0[1];
    let row1 = h_prime[0][1] * h0[0] + h_prime[1][1] * h0[1];
    QuadraticMinorant {
        offset,
        lin_a: 2.0 * row0.re,
        lin_b: 2.0 * row1.re,
    }
}

/// Affine lower bound on ||q_i - q_j||^2, tight at the previous iterate:
/// 2(q_i' - q_j')^T (q_i - q_j) - ||q_i' - q_j'||^2 >= d_min implies the
/// true separation constraint.
#[derive(Debug, Clone, Copy)]
pub struct SeparationCut {
    /// 2 (q_i' - q_j').
    pub scaled_diff: [f64; 3],
    /// ||q_i' - q_j'||^2.
    pub offset: f64,
}

impl SeparationCut {
    pub fn value(&self, q_i: Position3D, q_j: Position3D) -> f64 {
        self.scaled_diff[0] * (q_i.x - q_j.x)
            + self.scaled_diff[1] * (q_i.y - q_j.y)
            + self.scaled_diff[2] * (q_i.z - q_j.z)
            - self.offset
    }
}

pub fn linearize_separation<R: Rng>(
    q_i_prev: Position3D,
    q_j_prev: Position3D,
    d_min_m2: f64,
    rng: &mut R,
) -> SeparationCut {
    let mut qi = q_i_prev;
    let qj = q_j_prev;
    let mut diff = [qi.x - qj.x, qi.y - qj.y, qi.z - qj.z];
    if diff.iter().map(|d| d * d).sum::<f64>() == 0.0 {
        let amp = d_min_m2 / 10.0;
        log::warn!("coincident previous ARIS positions; jittering by {amp} m before linearizing");
        qi.x += rng.gen_range(-amp..amp);
        qi.y += rng.gen_range(-amp..amp);
        diff = [qi.x - qj.x, qi.y - qj.y, qi.z - qj.z];
    }
    let norm_sq = diff.iter().map(|d| d * d).sum::<f64>();
    SeparationCut {
        scaled_diff: [2.0 * diff[0], 2.0 * diff[1], 2.0 * diff[2]],
        offset: norm_sq,
    }
}

/// DC split of the slack-variable rate objective. For UE k with
/// s_k = sum_n r_ddot[n][k]:
///   h_hat_k = log2(alpha0_k + tot_k · s_k)   (signal + interference + noise)
///   l_hat_k = log2(beta0_k  + int_k · s_k)   (interference + noise)
/// and the rate is W (h_hat_k - l_hat_k).
#[derive(Debug, Clone)]
pub struct DcDecomposition {
    pub bandwidth_hz: f64,
    pub alpha0: Vec<f64>,
    pub beta0: Vec<f64>,
    pub tot_coeff: Vec<f64>,
    pub int_coeff: Vec<f64>,
    /// Expansion sums s0_k and the linearization of l_hat there.
    pub s0: Vec<f64>,
    pub l0: Vec<f64>,
    pub grad_l0: Vec<f64>,
}

impl DcDecomposition {
    pub fn k_ues(&self) -> usize {
        self.alpha0.len()
    }

    pub fn h_hat(&self, k: usize, s_k: f64) -> f64 {
        (self.alpha0[k] + self.tot_coeff[k] * s_k).log2()
    }

    pub fn l_hat(&self, k: usize, s_k: f64) -> f64 {
        (self.beta0[k] + self.int_coeff[k] * s_k).log2()
    }

    /// d l_hat_k / d s_k.
    pub fn grad_l_hat(&self, k: usize, s_k: f64) -> f64 {
        self.int_coeff[k] / (LN2 * (self.beta0[k] + self.int_coeff[k] * s_k))
    }

    /// Exact slack-objective value: sum_k W (h_hat - l_hat).
    pub fn objective(&self, s: &[f64]) -> f64 {
        (0..self.k_ues())
            .map(|k| self.bandwidth_hz * (self.h_hat(k, s[k]) - self.l_hat(k, s[k])))
            .sum()
    }

    /// Concave surrogate with l_hat replaced by its tangent at s0.
    pub fn surrogate(&self, s: &[f64]) -> f64 {
        (0..self.k_ues())
            .map(|k| self.bandwidth_hz * (self.h_hat(k, s[k]) - self.linearized_l(k, s[k])))
            .sum()
    }

    pub fn linearized_l(&self, k: usize, s_k: f64) -> f64 {
        self.l0[k] + self.grad_l0[k] * (s_k - self.s0[k])
    }

    /// Concave per-UE surrogate rate used by the rate constraints.
    pub fn surrogate_rate(&self, k: usize, s_k: f64) -> f64 {
        self.bandwidth_hz * (self.h_hat(k, s_k) - self.linearized_l(k, s_k))
    }

    /// Exact per-UE rate of the slack objective.
    pub fn rate(&self, k: usize, s_k: f64) -> f64 {
        self.bandwidth_hz * (self.h_hat(k, s_k) - self.l_hat(k, s_k))
    }
}

/// Surrogate lower bound on the slack objective, tight at the expansion.
pub fn surrogate_lower_bound(dc: &DcDecomposition, s: &[f64]) -> f64 {
    dc.surrogate(s)
}

/// One (ARIS, UE) pair's quadratic-form data at the expansion point.
#[derive(Debug, Clone)]
pub struct PairSurrogate {
    /// Rank-one PSD H' = v v^H over the stacked (direct, cascade) scalars.
    pub h_prime: [[Complex64; 2]; 2],
    /// Quadratic form at the tight expansion slacks.
    pub q0: f64,
    /// Affine minorant of the quadratic form, expanded at the tight slacks.
    pub minorant: QuadraticMinorant,
    /// False when the stacked vector vanished (nothing to optimize for the pair).
    pub active: bool,
}

/// Everything `solve_convex_subproblem` needs, expanded at one iterate.
#[derive(Debug, Clone)]
pub struct SurrogateModel {
    /// [n][k] quadratic-form surrogates.
    pub pairs: Vec<Vec<PairSurrogate>>,
    /// Tight slack values at the expansion: a[n], b[n][k].
    pub tight: SlackState,
    pub dc: DcDecomposition,
    /// (c0, c1) path-loss bounds for the BS-ARIS hop, per n.
    pub pathloss_a: Vec<(f64, f64)>,
    /// (c0, c1) path-loss bounds for the ARIS-UE hop, per (n, k).
    pub pathloss_b: Vec<Vec<(f64, f64)>>,
    /// Expansion-point deployment.
    pub expansion_q: Vec<Position3D>,
}

/// Normalized (path-loss-free) BS-ARIS fading row contracted with a unit beam:
/// sqrt(R/(1+R)) · (steering outer product) · u.
fn bs_aris_fading_times_beam(
    cfg: &ScenarioConfig,
    aris: Position3D,
    unit_beam: &Array1<Complex64>,
) -> Array1<Complex64> {
    let bs = cfg.bs_position;
    let w_los = (cfg.rician_k / (1.0 + cfg.rician_k)).sqrt();
    let at_aris = steering_vector(cfg.elements_per_aris, direction_cosine_x(aris, bs));
    let at_bs = steering_vector(cfg.bs_antennas, direction_cosine_x(bs, aris));
    let bs_dot: Complex64 = at_bs.iter().zip(unit_beam.iter()).map(|(s, u)| s * u).sum();
    at_aris.mapv(|s| s * bs_dot * w_los)
}

/// Normalized ARIS-UE fading row (LoS + frozen NLoS mixture, no path loss).
fn aris_ue_fading(
    cfg: &ScenarioConfig,
    aris: Position3D,
    ue: Position3D,
    nlos: ndarray::ArrayView1<Complex64>,
) -> Array1<Complex64> {
    let w_los = (cfg.rician_k / (1.0 + cfg.rician_k)).sqrt();
    let w_nlos = (1.0 / (1.0 + cfg.rician_k)).sqrt();
    let los = steering_vector(cfg.elements_per_aris, direction_cosine_x(aris, ue));
    Array1::from_iter(
        (0..cfg.elements_per_aris).map(|i| los[i] * w_los + nlos[i] * w_nlos),
    )
}

/// Tight slack bound values at a deployment.
pub fn tight_slacks(cfg: &ScenarioConfig, ues: &[Position3D], q: &[Position3D]) -> Result<SlackState> {
    let mut a = Vec::with_capacity(q.len());
    let mut b = Vec::with_capacity(q.len());
    for qn in q {
        let d_bn = euclidean_distance(cfg.bs_position, *qn);
        if !(d_bn > 0.0) {
            return Err(Error::Geometry("BS and ARIS coincide".into()));
        }
        a.push(d_bn.powf(-cfg.alpha / 2.0));
        let mut row = Vec::with_capacity(ues.len());
        for ue in ues {
            let d_nk = euclidean_distance(*qn, *ue);
            if !(d_nk > 0.0) {
                return Err(Error::Geometry("ARIS and UE coincide".into()));
            }
            row.push(d_nk.powf(-cfg.alpha / 2.0));
        }
        b.push(row);
    }
    Ok(SlackState { a, b, r_ddot: Vec::new() })
}

/// Assemble the full surrogate model at the previous iterate.
///
/// The stacked per-(n, k) vector is v = [raw direct fading · u_k,
/// delta-gated cascade fading · u_k] with u_k = g_k/||g_k||; beam powers and
/// the true direct-link powers enter the DC coefficients.
pub fn build_surrogate(
    cfg: &ScenarioConfig,
    ues: &[Position3D],
    draws: &FadingDraws,
    prev_q: &[Position3D],
    ris: &RisControl,
    bf: &Beamformer,
) -> Result<SurrogateModel> {
    let k_ues = cfg.k_ues;
    let n_aris = cfg.n_aris;
    if ues.len() != k_ues || prev_q.len() != n_aris {
        return Err(Error::Dimension("surrogate inputs disagree with config".into()));
    }

    let mut tight = tight_slacks(cfg, ues, prev_q)?;

    // Unit beam directions and beam powers.
    let mut unit_beams = Vec::with_capacity(k_ues);
    let mut beam_power = Vec::with_capacity(k_ues);
    for k in 0..k_ues {
        let p = bf.beam_power(k);
        beam_power.push(p);
        let row = bf.g.row(k).to_owned();
        if p > 0.0 {
            unit_beams.push(row.mapv(|c| c / p.sqrt()));
        } else {
            unit_beams.push(row);
        }
    }

    // True direct-link powers D_{k,l} = |H_Bk g_l|^2 (independent of q).
    let mut direct_power = vec![vec![0.0; k_ues]; k_ues];
    for k in 0..k_ues {
        let d_bk = euclidean_distance(cfg.bs_position, ues[k]);
        if !(d_bk > 0.0) {
            return Err(Error::Geometry("BS and UE coincide".into()));
        }
        let gain = (cfg.kappa * d_bk.powf(-cfg.alpha)).sqrt();
        for l in 0..k_ues {
            let dot: Complex64 = draws
                .direct
                .row(k)
                .iter()
                .zip(bf.g.row(l).iter())
                .map(|(h, g)| h * gain * g)
                .sum();
            direct_power[k][l] = dot.norm_sqr();
        }
    }

    // Per-pair stacked vectors and quadratic-form surrogates.
    let mut pairs: Vec<Vec<PairSurrogate>> = Vec::with_capacity(n_aris);
    let mut pathloss_a = Vec::with_capacity(n_aris);
    let mut pathloss_b = Vec::with_capacity(n_aris);
    let mut r0 = vec![vec![0.0; k_ues]; n_aris];
    for n in 0..n_aris {
        pathloss_a.push(taylor_pathloss_bound(tight.a[n], cfg.alpha)?);
        let mut row_pairs = Vec::with_capacity(k_ues);
        let mut row_bounds = Vec::with_capacity(k_ues);
        for k in 0..k_ues {
            row_bounds.push(taylor_pathloss_bound(tight.b[n][k], cfg.alpha)?);
            let bs_fading = bs_aris_fading_times_beam(cfg, prev_q[n], &unit_beams[k]);
            let ue_fading = aris_ue_fading(cfg, prev_q[n], ues[k], draws.aris_ue_nlos[n].row(k));
            let mut cascade = Complex64::new(0.0, 0.0);
            for i in 0..cfg.elements_per_aris {
                cascade += ris.coefficient(n, i) * ue_fading[i] * bs_fading[i];
            }
            let direct: Complex64 = draws
                .direct
                .row(k)
                .iter()
                .zip(unit_beams[k].iter())
                .map(|(h, u)| h * u)
                .sum();
            let v = [direct, cascade];
            let mut h_prime = [[Complex64::new(0.0, 0.0); 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    h_prime[i][j] = v[i] * v[j].conj();
                }
            }
            let h0 = [tight.a[n], tight.b[n][k]];
            let q0 = quadratic_form(&h_prime, h0);
            let minorant = taylor_quadratic_bound(&h_prime, h0);
            let active = q0 > 1e-300;
            r0[n][k] = q0;
            row_pairs.push(PairSurrogate { h_prime, q0, minorant, active });
        }
        pairs.push(row_pairs);
        pathloss_b.push(row_bounds);
    }
    tight.r_ddot = r0.clone();

    // DC coefficients.
    let sigma2 = cfg.sigma2_w();
    let mut alpha0 = Vec::with_capacity(k_ues);
    let mut beta0 = Vec::with_capacity(k_ues);
    let mut tot_coeff = Vec::with_capacity(k_ues);
    let mut int_coeff = Vec::with_capacity(k_ues);
    let mut s0 = Vec::with_capacity(k_ues);
    for k in 0..k_ues {
        let d_all: f64 = (0..k_ues).map(|l| direct_power[k][l]).sum();
        let d_int: f64 = (0..k_ues).filter(|&l| l != k).map(|l| direct_power[k][l]).sum();
        let p_all: f64 = beam_power.iter().sum();
        let p_int: f64 = (0..k_ues).filter(|&l| l != k).map(|l| beam_power[l]).sum();
        alpha0.push(d_all + sigma2);
        beta0.push(d_int + sigma2);
        tot_coeff.push(cfg.kappa * p_all);
        int_coeff.push(cfg.kappa * p_int);
        s0.push((0..n_aris).map(|n| r0[n][k]).sum());
    }
    let mut dc = DcDecomposition {
        bandwidth_hz: cfg.bandwidth_hz,
        alpha0,
        beta0,
        tot_coeff,
        int_coeff,
        s0: s0.clone(),
        l0: vec![0.0; k_ues],
        grad_l0: vec![0.0; k_ues],
    };
    for k in 0..k_ues {
        dc.l0[k] = dc.l_hat(k, s0[k]);
        dc.grad_l0[k] = dc.grad_l_hat(k, s0[k]);
    }

    Ok(SurrogateModel {
        pairs,
        tight,
        dc,
        pathloss_a,
        pathloss_b,
        expansion_q: prev_q.to_vec(),
    })
}

impl SurrogateModel {
    /// Slack-objective value at the expansion point (tight slacks).
    pub fn expansion_objective(&self) -> f64 {
        let s: Vec<f64> = self.dc.s0.clone();
        self.dc.objective(&s)
    }
}

/// The model objective as a pure function of the deployment: surrogates are
/// rebuilt at q and evaluated at tight slacks. This is the quantity the SCA
/// trace records and the grid oracle scans.
pub fn model_objective(
    cfg: &ScenarioConfig,
    ues: &[Position3D],
    draws: &FadingDraws,
    q: &[Position3D],
    ris: &RisControl,
    bf: &Beamformer,
) -> Result<f64> {
    let model = build_surrogate(cfg, ues, draws, q, ris, bf)?;
    Ok(model.expansion_objective())
}
