//! Log-barrier solver for the convexified placement subproblem.
//!
//! Variables per slot: ARIS (x, y) at fixed altitude, one slack `a` per ARIS,
//! and per-(ARIS, UE) slacks `b` and rate proxies `r`. All constraints are
//! affine or convex quadratics; the dimension is small, so each barrier round
//! is maximized with a damped Newton method on the exact Hessian.

use rand::Rng;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::Position3D;

use super::surrogate::{linearize_separation, SeparationCut, SlackState, SurrogateModel};

#[derive(Debug, Clone)]
pub struct ScaParams {
    /// Relative stopping tolerance of the outer SCA loop.
    pub eps_rel: f64,
    /// Outer SCA iteration cap.
    pub max_iters: usize,
    /// Barrier accuracy target (relative duality-gap proxy).
    pub barrier_tol: f64,
    /// Barrier growth factor.
    pub barrier_mu: f64,
    /// Total inner Newton iterations across barrier rounds.
    pub max_inner: usize,
    /// Enforce per-UE minimum-rate constraints inside the subproblem.
    pub enforce_rate: bool,
    /// Random restarts when the initial deployment is infeasible.
    pub restarts: usize,
}

impl Default for ScaParams {
    fn default() -> Self {
        Self {
            eps_rel: 1e-4,
            max_iters: 50,
            barrier_tol: 1e-8,
            barrier_mu: 20.0,
            max_inner: 5000,
            enforce_rate: true,
            restarts: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub q: Vec<Position3D>,
    pub slacks: SlackState,
    pub surrogate_value: f64,
    /// True when the rate constraints were part of the solve.
    pub rate_enforced: bool,
}

struct Layout {
    n: usize,
    k: usize,
}

impl Layout {
    fn x(&self, n: usize) -> usize {
        2 * n
    }
    fn y(&self, n: usize) -> usize {
        2 * n + 1
    }
    fn a(&self, n: usize) -> usize {
        2 * self.n + n
    }
    fn b(&self, n: usize, k: usize) -> usize {
        3 * self.n + n * self.k + k
    }
    fn r(&self, n: usize, k: usize) -> usize {
        3 * self.n + self.n * self.k + n * self.k + k
    }
    fn dim(&self) -> usize {
        3 * self.n + 2 * self.n * self.k
    }
}

/// One constraint in c(z) <= 0 form: value, sparse gradient, and the constant
/// sparse Hessian (only position quadratics carry one).
struct ConstraintEval {
    value: f64,
    grad: Vec<(usize, f64)>,
    hess: Vec<(usize, usize, f64)>,
}

/// The assembled subproblem: maximize the concave surrogate subject to the
/// convexified constraint set.
pub struct Subproblem<'a> {
    cfg: &'a ScenarioConfig,
    ues: &'a [Position3D],
    model: &'a SurrogateModel,
    cuts: Vec<(usize, usize, SeparationCut)>,
    layout: Layout,
    enforce_rate: bool,
    obj_scale: f64,
    a_floor: Vec<f64>,
    b_floor: Vec<Vec<f64>>,
}

impl<'a> Subproblem<'a> {
    pub fn new<R: Rng>(
        cfg: &'a ScenarioConfig,
        ues: &'a [Position3D],
        model: &'a SurrogateModel,
        enforce_rate: bool,
        rng: &mut R,
    ) -> Self {
        let layout = Layout { n: cfg.n_aris, k: cfg.k_ues };
        let mut cuts = Vec::new();
        if cfg.d_min_m2 > 0.0 {
            for i in 0..cfg.n_aris {
                for j in (i + 1)..cfg.n_aris {
                    let cut = linearize_separation(
                        model.expansion_q[i],
                        model.expansion_q[j],
                        cfg.d_min_m2,
                        rng,
                    );
                    cuts.push((i, j, cut));
                }
            }
        }
        let a_floor = model.tight.a.iter().map(|v| v * 1e-9).collect();
        let b_floor = model
            .tight
            .b
            .iter()
            .map(|row| row.iter().map(|v| v * 1e-9).collect())
            .collect();
        let obj_scale = 1.0 / (cfg.bandwidth_hz * cfg.k_ues as f64);
        Self { cfg, ues, model, cuts, layout, enforce_rate, obj_scale, a_floor, b_floor }
    }

    fn positions(&self, z: &[f64]) -> Vec<Position3D> {
        (0..self.layout.n)
            .map(|n| {
                Position3D::new(
                    z[self.layout.x(n)],
                    z[self.layout.y(n)],
                    self.model.expansion_q[n].z,
                )
            })
            .collect()
    }

    fn s_per_ue(&self, z: &[f64]) -> Vec<f64> {
        (0..self.layout.k)
            .map(|k| {
                (0..self.layout.n)
                    .filter(|&n| self.model.pairs[n][k].active)
                    .map(|n| z[self.layout.r(n, k)])
                    .sum()
            })
            .collect()
    }

    /// Scaled objective (maximized).
    fn objective(&self, z: &[f64]) -> f64 {
        let s = self.s_per_ue(z);
        self.model.dc.surrogate(&s) * self.obj_scale
    }

    /// Gradient and Hessian of the scaled objective accumulated in place.
    fn objective_derivatives(
        &self,
        z: &[f64],
        grad: &mut [f64],
        hess: &mut [f64],
        t: f64,
        dim: usize,
    ) {
        let s = self.s_per_ue(z);
        let dc = &self.model.dc;
        let ln2 = std::f64::consts::LN_2;
        for k in 0..self.layout.k {
            let arg = dc.alpha0[k] + dc.tot_coeff[k] * s[k];
            let d1 = dc.bandwidth_hz * (dc.tot_coeff[k] / (ln2 * arg) - dc.grad_l0[k])
                * self.obj_scale;
            let d2 = -dc.bandwidth_hz * dc.tot_coeff[k] * dc.tot_coeff[k] / (ln2 * arg * arg)
                * self.obj_scale;
            let idxs: Vec<usize> = (0..self.layout.n)
                .filter(|&n| self.model.pairs[n][k].active)
                .map(|n| self.layout.r(n, k))
                .collect();
            for &i in &idxs {
                grad[i] += t * d1;
                for &j in &idxs {
                    hess[i * dim + j] += t * d2;
                }
            }
        }
    }

    /// All constraint values c_i(z) (feasible when every value < 0), with
    /// human-readable tags for infeasibility reports.
    fn constraints(&self, z: &[f64], out: &mut Vec<f64>, tags: Option<&mut Vec<String>>) {
        out.clear();
        let mut names: Vec<String> = Vec::new();
        for eval in self.constraint_evals(z) {
            out.push(eval.value);
        }
        if let Some(t) = tags {
            names.clear();
            self.constraint_names(&mut names);
            *t = names;
        }
    }

    fn constraint_names(&self, names: &mut Vec<String>) {
        let l = &self.layout;
        for n in 0..l.n {
            names.push(format!("pathloss_a[{n}]"));
            for k in 0..l.k {
                names.push(format!("pathloss_b[{n}][{k}]"));
            }
        }
        for n in 0..l.n {
            for k in 0..l.k {
                if self.model.pairs[n][k].active {
                    names.push(format!("quad_minorant[{n}][{k}]"));
                }
            }
        }
        for (i, j, _) in &self.cuts {
            names.push(format!("separation[{i}][{j}]"));
        }
        if self.enforce_rate {
            for k in 0..l.k {
                names.push(format!("min_rate[{k}]"));
            }
        }
        for n in 0..l.n {
            names.push(format!("box_x_lo[{n}]"));
            names.push(format!("box_x_hi[{n}]"));
            names.push(format!("box_y_lo[{n}]"));
            names.push(format!("box_y_hi[{n}]"));
            names.push(format!("a_floor[{n}]"));
            for k in 0..l.k {
                names.push(format!("b_floor[{n}][{k}]"));
                if self.model.pairs[n][k].active {
                    names.push(format!("r_floor[{n}][{k}]"));
                }
            }
        }
    }

    fn constraint_evals(&self, z: &[f64]) -> Vec<ConstraintEval> {
        let l = &self.layout;
        let q = self.positions(z);
        let mut out = Vec::new();
        for n in 0..l.n {
            let (c0, c1) = self.model.pathloss_a[n];
            let bs = self.cfg.bs_position;
            let dx = q[n].x - bs.x;
            let dy = q[n].y - bs.y;
            let dz = q[n].z - bs.z;
            out.push(ConstraintEval {
                value: dx * dx + dy * dy + dz * dz - c0 - c1 * z[l.a(n)],
                grad: vec![(l.x(n), 2.0 * dx), (l.y(n), 2.0 * dy), (l.a(n), -c1)],
                hess: vec![(l.x(n), l.x(n), 2.0), (l.y(n), l.y(n), 2.0)],
            });
            for k in 0..l.k {
                let (c0b, c1b) = self.model.pathloss_b[n][k];
                let ue = self.ues[k];
                let dx = q[n].x - ue.x;
                let dy = q[n].y - ue.y;
                let dz = q[n].z - ue.z;
                out.push(ConstraintEval {
                    value: dx * dx + dy * dy + dz * dz - c0b - c1b * z[l.b(n, k)],
                    grad: vec![(l.x(n), 2.0 * dx), (l.y(n), 2.0 * dy), (l.b(n, k), -c1b)],
                    hess: vec![(l.x(n), l.x(n), 2.0), (l.y(n), l.y(n), 2.0)],
                });
            }
        }
        for n in 0..l.n {
            for k in 0..l.k {
                let pair = &self.model.pairs[n][k];
                if pair.active {
                    let bound = pair.minorant.value(z[l.a(n)], z[l.b(n, k)]);
                    out.push(ConstraintEval {
                        value: z[l.r(n, k)] - bound,
                        grad: vec![
                            (l.r(n, k), 1.0),
                            (l.a(n), -pair.minorant.lin_a),
                            (l.b(n, k), -pair.minorant.lin_b),
                        ],
                        hess: Vec::new(),
                    });
                }
            }
        }
        for (i, j, cut) in &self.cuts {
            out.push(ConstraintEval {
                value: self.cfg.d_min_m2 - cut.value(q[*i], q[*j]),
                grad: vec![
                    (l.x(*i), -cut.scaled_diff[0]),
                    (l.y(*i), -cut.scaled_diff[1]),
                    (l.x(*j), cut.scaled_diff[0]),
                    (l.y(*j), cut.scaled_diff[1]),
                ],
                hess: Vec::new(),
            });
        }
        if self.enforce_rate {
            let s = self.s_per_ue(z);
            let dc = &self.model.dc;
            let ln2 = std::f64::consts::LN_2;
            for k in 0..l.k {
                let arg = dc.alpha0[k] + dc.tot_coeff[k] * s[k];
                let drate = dc.bandwidth_hz * (dc.tot_coeff[k] / (ln2 * arg) - dc.grad_l0[k]);
                let d2rate = -dc.bandwidth_hz * dc.tot_coeff[k] * dc.tot_coeff[k]
                    / (ln2 * arg * arg);
                let idxs: Vec<usize> = (0..l.n)
                    .filter(|&n| self.model.pairs[n][k].active)
                    .map(|n| l.r(n, k))
                    .collect();
                let grad = idxs.iter().map(|&i| (i, -drate)).collect();
                let mut hess = Vec::new();
                for &i in &idxs {
                    for &j in &idxs {
                        hess.push((i, j, -d2rate));
                    }
                }
                out.push(ConstraintEval {
                    value: self.cfg.r_min_bps - dc.surrogate_rate(k, s[k]),
                    grad,
                    hess,
                });
            }
        }
        for n in 0..l.n {
            out.push(ConstraintEval {
                value: -z[l.x(n)],
                grad: vec![(l.x(n), -1.0)],
                hess: Vec::new(),
            });
            out.push(ConstraintEval {
                value: z[l.x(n)] - self.cfg.area_m,
                grad: vec![(l.x(n), 1.0)],
                hess: Vec::new(),
            });
            out.push(ConstraintEval {
                value: -z[l.y(n)],
                grad: vec![(l.y(n), -1.0)],
                hess: Vec::new(),
            });
            out.push(ConstraintEval {
                value: z[l.y(n)] - self.cfg.area_m,
                grad: vec![(l.y(n), 1.0)],
                hess: Vec::new(),
            });
            out.push(ConstraintEval {
                value: self.a_floor[n] - z[l.a(n)],
                grad: vec![(l.a(n), -1.0)],
                hess: Vec::new(),
            });
            for k in 0..l.k {
                out.push(ConstraintEval {
                    value: self.b_floor[n][k] - z[l.b(n, k)],
                    grad: vec![(l.b(n, k), -1.0)],
                    hess: Vec::new(),
                });
                if self.model.pairs[n][k].active {
                    out.push(ConstraintEval {
                        value: -z[l.r(n, k)],
                        grad: vec![(l.r(n, k), -1.0)],
                        hess: Vec::new(),
                    });
                }
            }
        }
        out
    }

    fn strictly_feasible(&self, z: &[f64], margin: f64) -> bool {
        self.constraint_evals(z).iter().all(|e| e.value < -margin)
    }

    /// Build a strictly feasible start near the expansion point by pulling
    /// the slacks slightly inside their tight bounds.
    fn feasible_start(&self) -> Result<Vec<f64>> {
        let l = &self.layout;
        for shrink in [1e-6, 1e-4, 1e-2] {
            let mut z = vec![0.0; l.dim()];
            for n in 0..l.n {
                z[l.x(n)] = self.model.expansion_q[n].x.clamp(1e-9, self.cfg.area_m - 1e-9);
                z[l.y(n)] = self.model.expansion_q[n].y.clamp(1e-9, self.cfg.area_m - 1e-9);
                z[l.a(n)] = self.model.tight.a[n] * (1.0 - shrink);
                for k in 0..l.k {
                    z[l.b(n, k)] = self.model.tight.b[n][k] * (1.0 - shrink);
                    if self.model.pairs[n][k].active {
                        let bound = self.model.pairs[n][k]
                            .minorant
                            .value(z[l.a(n)], z[l.b(n, k)]);
                        z[l.r(n, k)] = (bound * (1.0 - shrink)).max(0.0);
                        if z[l.r(n, k)] >= bound {
                            z[l.r(n, k)] = bound * 0.5;
                        }
                    }
                }
            }
            if self.strictly_feasible(&z, 0.0) {
                return Ok(z);
            }
        }
        // report which constraints block the tightest start
        let mut z = vec![0.0; l.dim()];
        for n in 0..l.n {
            z[l.x(n)] = self.model.expansion_q[n].x;
            z[l.y(n)] = self.model.expansion_q[n].y;
            z[l.a(n)] = self.model.tight.a[n] * (1.0 - 1e-6);
            for k in 0..l.k {
                z[l.b(n, k)] = self.model.tight.b[n][k] * (1.0 - 1e-6);
                if self.model.pairs[n][k].active {
                    z[l.r(n, k)] = (self.model.pairs[n][k].q0 * (1.0 - 1e-4)).max(0.0);
                }
            }
        }
        let mut vals = Vec::new();
        let mut tags = Vec::new();
        self.constraints(&z, &mut vals, Some(&mut tags));
        let violated = vals
            .iter()
            .zip(tags)
            .filter(|(v, _)| **v >= 0.0)
            .map(|(_, t)| t)
            .collect::<Vec<_>>();
        Err(Error::Infeasible(violated))
    }

    fn barrier_value(&self, z: &[f64], t: f64) -> Option<f64> {
        let evals = self.constraint_evals(z);
        if evals.iter().any(|e| e.value >= 0.0) {
            return None;
        }
        let mut phi = t * self.objective(z);
        for e in &evals {
            phi += (-e.value).ln();
        }
        Some(phi)
    }

    /// Newton ascent on t·F + sum log(-c); returns iterations used.
    fn newton_rounds(&self, z: &mut Vec<f64>, t: f64, budget: usize) -> usize {
        let dim = self.layout.dim();
        let mut used = 0;
        let mut phi = match self.barrier_value(z, t) {
            Some(p) => p,
            None => return 0,
        };
        while used < budget {
            used += 1;
            let evals = self.constraint_evals(z);
            let mut grad = vec![0.0; dim];
            // -H (positive definite for the maximization problem)
            let mut neg_h = vec![0.0; dim * dim];
            self.objective_derivatives(z, &mut grad, &mut neg_h, t, dim);
            for v in neg_h.iter_mut() {
                *v = -*v;
            }
            for e in &evals {
                let u = -e.value; // > 0
                for &(i, gi) in &e.grad {
                    grad[i] -= gi / u;
                    for &(j, gj) in &e.grad {
                        neg_h[i * dim + j] += gi * gj / (u * u);
                    }
                }
                for &(i, j, v) in &e.hess {
                    neg_h[i * dim + j] += v / u;
                }
            }
            let dir = match solve_spd(&mut neg_h, &grad, dim) {
                Some(d) => d,
                None => break,
            };
            let slope: f64 = grad.iter().zip(dir.iter()).map(|(g, d)| g * d).sum();
            if slope <= 1e-12 * (1.0 + t) {
                break;
            }
            let mut step = 1.0;
            let mut improved = false;
            for _ in 0..60 {
                let zt: Vec<f64> = (0..dim).map(|j| z[j] + step * dir[j]).collect();
                if let Some(pt) = self.barrier_value(&zt, t) {
                    if pt > phi + 1e-4 * step * slope {
                        *z = zt;
                        phi = pt;
                        improved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        used
    }

    /// Barrier loop; returns the final interior point.
    pub fn solve(&self, params: &ScaParams) -> Result<(Vec<f64>, f64)> {
        let mut z = self.feasible_start()?;
        let m = self.constraint_evals(&z).len() as f64;
        let mut t = 1.0;
        let mut inner_used = 0usize;
        let debug = std::env::var("ARIS_SCA_DEBUG").is_ok();
        for round in 0..24 {
            inner_used += self.newton_rounds(&mut z, t, (params.max_inner - inner_used).min(120));
            let f = self.objective(&z);
            if debug {
                eprintln!(
                    "round {round}: t={t:.3e} inner_used={inner_used} f={f:.6e} q={:?}",
                    self.positions(&z)
                );
            }
            if m / t <= params.barrier_tol * (1.0 + f.abs()) || inner_used >= params.max_inner {
                break;
            }
            t *= params.barrier_mu;
        }
        let f = self.objective(&z);
        Ok((z, f))
    }

    pub fn extract(&self, z: &[f64], rate_enforced: bool) -> SubproblemSolution {
        let l = &self.layout;
        let q = self.positions(z);
        let a = (0..l.n).map(|n| z[l.a(n)]).collect();
        let b = (0..l.n)
            .map(|n| (0..l.k).map(|k| z[l.b(n, k)]).collect())
            .collect();
        let r_ddot = (0..l.n)
            .map(|n| {
                (0..l.k)
                    .map(|k| if self.model.pairs[n][k].active { z[l.r(n, k)] } else { 0.0 })
                    .collect()
            })
            .collect();
        let s = self.s_per_ue(z);
        SubproblemSolution {
            q,
            slacks: SlackState { a, b, r_ddot },
            surrogate_value: self.model.dc.surrogate(&s),
            rate_enforced,
        }
    }
}

/// Solve the SPD system H x = b in place via Cholesky with a ridge fallback.
fn solve_spd(h: &mut [f64], b: &[f64], dim: usize) -> Option<Vec<f64>> {
    let scale = (0..dim)
        .map(|i| h[i * dim + i].abs())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    for attempt in 0..8 {
        let ridge = if attempt == 0 { 0.0 } else { scale * 10f64.powi(-14 + 2 * attempt) };
        let mut l = h.to_vec();
        for i in 0..dim {
            l[i * dim + i] += ridge;
        }
        if cholesky_in_place(&mut l, dim) {
            // forward/back substitution
            let mut x = b.to_vec();
            for i in 0..dim {
                for j in 0..i {
                    x[i] -= l[i * dim + j] * x[j];
                }
                x[i] /= l[i * dim + i];
            }
            for i in (0..dim).rev() {
                for j in (i + 1)..dim {
                    x[i] -= l[j * dim + i] * x[j];
                }
                x[i] /= l[i * dim + i];
            }
            return Some(x);
        }
    }
    None
}

/// In-place lower Cholesky; false when the matrix is not positive definite.
fn cholesky_in_place(a: &mut [f64], dim: usize) -> bool {
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = a[i * dim + j];
            for k in 0..j {
                sum -= a[i * dim + k] * a[j * dim + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return false;
                }
                a[i * dim + i] = sum.sqrt();
            } else {
                a[i * dim + j] = sum / a[j * dim + j];
            }
        }
    }
    true
}

/// Solve the convexified subproblem at the given expansion model.
pub fn solve_convex_subproblem<R: Rng>(
    cfg: &ScenarioConfig,
    ues: &[Position3D],
    model: &SurrogateModel,
    params: &ScaParams,
    rng: &mut R,
) -> Result<SubproblemSolution> {
    let sub = Subproblem::new(cfg, ues, model, params.enforce_rate, rng);
    let (z, _) = sub.solve(params)?;
    Ok(sub.extract(&z, params.enforce_rate))
}
