//! Outer SCA loop for ARIS placement and the grid-search oracle used to
//! validate it on single-ARIS instances.

use rand::Rng;

use crate::beamformer::Beamformer;
use crate::channel::FadingDraws;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::{squared_distance, Position3D};
use crate::ris::RisControl;

use super::subproblem::{solve_convex_subproblem, ScaParams};
use super::surrogate::{build_surrogate, model_objective};

#[derive(Debug, Clone)]
pub struct DeploymentSolution {
    pub positions: Vec<Position3D>,
    /// Model objective (slack rate expression at tight slacks) per accepted
    /// iterate, starting with the initial deployment.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// False when the rate constraints had to be relaxed to keep the slot
    /// solvable.
    pub rate_constraints_enforced: bool,
}

fn separation_ok(cfg: &ScenarioConfig, q: &[Position3D]) -> bool {
    for i in 0..q.len() {
        for j in (i + 1)..q.len() {
            if squared_distance(q[i], q[j]) < cfg.d_min_m2 {
                return false;
            }
        }
    }
    true
}

fn jitter_layout<R: Rng>(rng: &mut R, cfg: &ScenarioConfig, q: &[Position3D]) -> Vec<Position3D> {
    let amp = cfg.area_m * 0.1;
    q.iter()
        .map(|p| {
            Position3D::new(
                (p.x + rng.gen_range(-amp..amp)).clamp(0.0, cfg.area_m),
                (p.y + rng.gen_range(-amp..amp)).clamp(0.0, cfg.area_m),
                p.z,
            )
        })
        .collect()
}

/// Iterative SCA deployment: rebuild surrogates at the current iterate, solve
/// the convex subproblem, accept only non-degrading moves, stop on the
/// relative objective change or the iteration cap.
pub fn sca_iterate<R: Rng>(
    cfg: &ScenarioConfig,
    ues: &[Position3D],
    draws: &FadingDraws,
    ris: &RisControl,
    bf: &Beamformer,
    initial_q: &[Position3D],
    params: &ScaParams,
    rng: &mut R,
) -> Result<DeploymentSolution> {
    // Establish a feasible starting deployment.
    let mut q = initial_q.to_vec();
    let mut tries = 0;
    while !separation_ok(cfg, &q) {
        if tries >= params.restarts {
            return Err(Error::NoFeasibleStart {
                restarts: params.restarts,
                detail: "pairwise ARIS separation below d_min for every restart".into(),
            });
        }
        q = jitter_layout(rng, cfg, initial_q);
        tries += 1;
    }

    let mut rate_enforced = params.enforce_rate;
    let mut objective_trace = vec![model_objective(cfg, ues, draws, &q, ris, bf)?];
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..params.max_iters {
        iterations += 1;
        let model = build_surrogate(cfg, ues, draws, &q, ris, bf)?;
        let mut attempt_params = params.clone();
        attempt_params.enforce_rate = rate_enforced;
        let sol = match solve_convex_subproblem(cfg, ues, &model, &attempt_params, rng) {
            Ok(s) => s,
            Err(Error::Infeasible(violated)) if rate_enforced => {
                // Rate floor unreachable at this operating point; relax it for
                // the slot and keep deploying on the unconstrained objective.
                log::warn!(
                    "rate constraints infeasible at expansion point ({violated:?}); relaxing"
                );
                rate_enforced = false;
                let mut relaxed = params.clone();
                relaxed.enforce_rate = false;
                solve_convex_subproblem(cfg, ues, &model, &relaxed, rng)?
            }
            Err(e) => return Err(e),
        };
        let prev = *objective_trace.last().unwrap();
        // Damped step search: the surrogate freezes the previous iterate's
        // fading, so a full step can overshoot the refreshed objective.
        let mut accepted: Option<(Vec<Position3D>, f64)> = None;
        for damp in [1.0, 0.5, 0.25, 0.125, 0.0625] {
            let candidate: Vec<Position3D> = q
                .iter()
                .zip(sol.q.iter())
                .map(|(old, new)| {
                    Position3D::new(
                        old.x + damp * (new.x - old.x),
                        old.y + damp * (new.y - old.y),
                        old.z + damp * (new.z - old.z),
                    )
                })
                .collect();
            if !separation_ok(cfg, &candidate) {
                continue;
            }
            let value = model_objective(cfg, ues, draws, &candidate, ris, bf)?;
            if value >= prev - 1e-12 * prev.abs().max(1.0) {
                accepted = Some((candidate, value));
                break;
            }
        }
        let Some((new_q, new)) = accepted else {
            // No step length improves the refreshed objective; stay put.
            converged = true;
            break;
        };
        q = new_q;
        objective_trace.push(new);
        if (new - prev).abs() <= params.eps_rel * prev.abs().max(1.0) {
            converged = true;
            break;
        }
    }

    Ok(DeploymentSolution {
        positions: q,
        objective_trace,
        iterations,
        converged,
        rate_constraints_enforced: rate_enforced,
    })
}

/// Exhaustive (x, y) scan of the model objective for a single ARIS at the
/// fixed altitude. The validation oracle for `sca_iterate`.
pub fn grid_search_single_aris(
    cfg: &ScenarioConfig,
    ues: &[Position3D],
    draws: &FadingDraws,
    ris: &RisControl,
    bf: &Beamformer,
    resolution_m: f64,
) -> Result<(Position3D, f64)> {
    if cfg.n_aris != 1 {
        return Err(Error::Dimension("grid oracle is defined for N = 1".into()));
    }
    let steps = (cfg.area_m / resolution_m).round() as usize;
    let mut best = (Position3D::new(0.0, 0.0, cfg.aris_altitude_m), f64::NEG_INFINITY);
    for ix in 0..=steps {
        for iy in 0..=steps {
            let q = Position3D::new(
                ix as f64 * resolution_m,
                iy as f64 * resolution_m,
                cfg.aris_altitude_m,
            );
            // skip degenerate spots right on top of a node
            let objective = match model_objective(cfg, ues, draws, &[q], ris, bf) {
                Ok(v) => v,
                Err(_) => continue,
            };
            if objective > best.1 {
                best = (q, objective);
            }
        }
    }
    Ok(best)
}
