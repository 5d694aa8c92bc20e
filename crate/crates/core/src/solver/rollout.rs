use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::networks::TimeMode;
use crate::problems::Problem;
use crate::sampler::{PathBatch, TimeGrid};

use crate::autodiff::{finite_diff_check, GradCheckReport, ParamId, ParamStore, DEFAULT_GRAD_FLOOR};
use crate::networks::build_for_dim;
use crate::sampler::{sample_paths, RngState};

use super::{SolverConfig, SolverState};

/// Network input at step `n` for states `x` (`[M, d]`): normalized space
/// `(x - ξ) / scale`, prefixed by `t_n / T` in continuous mode.
pub fn network_input(problem: &dyn Problem, grid: &TimeGrid, mode: TimeMode, n: usize, x: &Tensor) -> Tensor {
    let (m, d) = (x.shape()[0], x.shape()[1]);
    let xi = problem.start();
    let inv_scale = 1.0 / problem.input_scale();
    let width = mode.input_dim(d);
    let mut data = Vec::with_capacity(m * width);
    for row in x.data().chunks_exact(d) {
        if mode == TimeMode::Continuous {
            data.push(grid.time(n) / grid.horizon());
        }
        data.extend(row.iter().zip(xi).map(|(v, s)| (v - s) * inv_scale));
    }
    Tensor::new(vec![m, width], data).expect("input shape")
}

fn at_step(step: usize, iteration: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFinite { .. } => Error::NonFiniteLoss { iteration, step },
        other => other,
    }
}

/// Records the discretized backward equation
/// `Y_{n+1} = Y_n - f(t_n, X_n, Y_n, Z_n)·dt + Z_n·ΔW_n`, `Z_n = σᵀ(t_n, X_n)·G_n`,
/// with `Y_0 = θ_{u0}`, `G_0 = θ_{∇u0}` and `G_n = net(X_n) / d` for `n ≥ 1`,
/// and returns the mean squared terminal mismatch `|g(X_N) - Y_N|²`.
pub fn rollout_loss(
    tape: &mut Tape,
    state: &SolverState,
    batch: &PathBatch,
    problem: &dyn Problem,
    grid: &TimeGrid,
) -> Result<Var> {
    let (m, d, steps) = (batch.batch(), batch.dim(), batch.steps());
    if steps != grid.steps() || d != problem.dim() {
        return Err(Error::ShapeMismatch {
            op: "rollout",
            detail: format!(
                "batch has {steps} steps in dim {d}, grid {} steps, problem dim {}",
                grid.steps(),
                problem.dim()
            ),
        });
    }
    let it = state.iteration;
    let dt = grid.dt();
    let store = &state.store;

    let y0 = tape.param(store, state.theta_u0).map_err(at_step(0, it))?;
    let mut y = tape.expand_scalar(y0, &[m])?;
    let grad0 = tape.param(store, state.theta_grad_u0).map_err(at_step(0, it))?;

    let mut shared_net: Option<Vec<Var>> = None;
    let mut sig = vec![0.0; d];
    for n in 0..steps {
        let t = grid.time(n);
        let x = batch.states_at(n);
        let mut step = |tape: &mut Tape, y: Var, shared: &mut Option<Vec<Var>>| -> Result<Var> {
            let g = if n == 0 {
                tape.tile_rows(grad0, m)?
            } else {
                let params = match (state.time_mode, shared.as_ref()) {
                    (TimeMode::Continuous, Some(p)) => p.clone(),
                    _ => {
                        let p = state
                            .net_for_step(n)
                            .iter()
                            .map(|&id| tape.param(store, id))
                            .collect::<Result<Vec<_>>>()?;
                        if state.time_mode == TimeMode::Continuous {
                            *shared = Some(p.clone());
                        }
                        p
                    }
                };
                let input = tape.constant(network_input(problem, grid, state.time_mode, n, &x))?;
                let out = state.architecture.forward(tape, &params, input)?;
                tape.scale(out, 1.0 / d as f64)?
            };
            let z = match problem.constant_diffusion() {
                Some(s) => tape.scale(g, s)?,
                None => {
                    let mut sd = Vec::with_capacity(m * d);
                    for row in x.data().chunks_exact(d) {
                        problem.sigma_diagonal(t, row, &mut sig);
                        sd.extend_from_slice(&sig);
                    }
                    let sd = tape.constant(Tensor::new(vec![m, d], sd)?)?;
                    tape.mul(g, sd)?
                }
            };
            let f = problem.generator_on_tape(tape, t, &x, y, z)?;
            let dw = tape.constant(batch.increments_at(n))?;
            let zdw = tape.mul(z, dw)?;
            let noise = tape.sum_axis(zdw, 1)?;
            let drift = tape.scale(f, -dt)?;
            let y = tape.add(y, drift)?;
            tape.add(y, noise)
        };
        y = step(tape, y, &mut shared_net).map_err(at_step(n, it))?;
    }

    let terminal = batch.states_at(steps);
    let g: Vec<f64> = terminal.data().chunks_exact(d).map(|row| problem.terminal(row)).collect();
    let finish = |tape: &mut Tape| -> Result<Var> {
        let g = tape.constant(Tensor::vector(g))?;
        let diff = tape.sub(g, y)?;
        let sq = tape.square(diff)?;
        tape.mean(sq)
    };
    finish(tape).map_err(at_step(steps, it))
}

/// Finite-difference check of the full rollout loss at randomly perturbed
/// parameters on one freshly sampled batch.
pub fn rollout_grad_check(config: &SolverConfig, problem: &dyn Problem, seed: u64, step: f64) -> Result<GradCheckReport> {
    let grid = TimeGrid::new(config.steps, problem.horizon())?;
    let mut rng = RngState::new(seed);
    let mut state = SolverState::init(config, problem, &mut rng)?;
    let ids: Vec<ParamId> = state.store.iter().map(|(id, _)| id).collect();
    for id in ids {
        for v in state.store.value_mut(id).data_mut() {
            *v += 0.1 * rng.normal();
        }
    }
    let batch = sample_paths(problem, &grid, config.batch, &mut rng)?;
    let mut store = std::mem::take(&mut state.store);
    finite_diff_check(&mut store, step, DEFAULT_GRAD_FLOOR, |tape, s: &ParamStore| {
        let probe = SolverState {
            store: s.clone(),
            theta_u0: state.theta_u0,
            theta_grad_u0: state.theta_grad_u0,
            subnets: state.subnets.clone(),
            architecture: build_for_dim(&config.network, problem.dim())?,
            time_mode: state.time_mode,
            iteration: 0,
        };
        rollout_loss(tape, &probe, &batch, problem, &grid)
    })
}
