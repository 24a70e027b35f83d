use std::sync::Arc;

use rayon::prelude::*;

use super::estimate::pack;
use super::report::ValueEstimate;
use crate::dynamics::{increments, SimConfig, SystemSpec};
use crate::error::{ensure_dim, Error, Result};
use crate::hamiltonian::{feedback_gamma_star, minimize_channel, ControlCost, ControlPolicy, CostSpec};
use crate::{Matrix, Vector};

/// Refinement factor of the co-state integrator relative to the simulation step.
pub const ADJOINT_REFINEMENT: usize = 10;
/// Upper limit on the number of open-loop candidates.
pub const MAX_CANDIDATES: f64 = 1e6;

/// Solution of the deterministic adjoint problem for affine state costs.
#[derive(Debug, Clone)]
pub struct AdjointSolution {
    pub t0: f64,
    pub dt: f64,
    /// Co-state `lambda(t_k)` in plain coordinates (the gradient of the value
    /// with respect to the ensemble mean), `k = 0..=steps`.
    pub costate: Vec<Vector>,
    /// Optimal control on each step, evaluated at the left endpoint.
    pub controls: Vec<Vector>,
    /// Expected ensemble mean under the optimal control.
    pub mean_path: Vec<Vector>,
    /// Expected cost of the step-wise control under the simulation scheme.
    pub value: f64,
    /// `lambda(t0) . m0 + int [l(a*) + lambda . e a*] ds` for the continuous-time problem.
    pub value_continuous: f64,
}

fn affine_cost(cost: &CostSpec, dim: usize) -> Result<(Vector, f64, Vector, f64)> {
    let (rs, rm, rc) = cost
        .running
        .affine_parts(dim)
        .ok_or_else(|| Error::Nonlinear("running state cost is not affine".into()))?;
    let (ts, tm, tc) = cost
        .terminal
        .affine_parts(dim)
        .ok_or_else(|| Error::Nonlinear("terminal cost is not affine".into()))?;
    Ok((rs + rm, rc, ts + tm, tc))
}

fn optimal_control(system: &SystemSpec, cost: &CostSpec, lambda: &Vector) -> Vector {
    let s = system.control_map.tr_mul(lambda);
    Vector::from_fn(s.len(), |j, _| {
        minimize_channel(&cost.control, cost.cone, s[j], cost.channel_weights[j], f64::INFINITY).1
    })
}

/// Optimal control of the linear-cost problem.
///
/// Costs affine in the state make the optimal control deterministic: the
/// co-state solves `-lambda' = (A + S + M)^T lambda + l`, `lambda(T) = tau`,
/// integrated backwards by RK4 at a step `ADJOINT_REFINEMENT` times finer
/// than `cfg.dt()` (more when the generator is stiff), and the control
/// minimizes `c(a) + lambda . e a`. Noise has zero mean and the costs are
/// affine, so the expected cost follows from the mean alone.
pub fn oracle_adjoint_linear(
    system: &SystemSpec,
    cost: &CostSpec,
    x0: &[Vector],
    cfg: &SimConfig,
) -> Result<AdjointSolution> {
    cfg.validate()?;
    let dim = system.dim();
    let x = pack(x0)?;
    ensure_dim(dim, x.nrows(), "initial state")?;
    ensure_dim(system.control_dim(), cost.control_dim(), "control channels")?;
    if let ControlCost::Convex { .. } = cost.control {
        return Err(Error::Unsupported("the adjoint oracle needs a quadratic control cost".into()));
    }
    let (ell, run_c, tau, term_c) = affine_cost(cost, dim)?;
    let abar = system.mean_generator();
    let abar_t = abar.transpose();
    let dt = cfg.dt();
    let stiff = abar.norm() * dt / ADJOINT_REFINEMENT as f64;
    let sub = ADJOINT_REFINEMENT * (stiff.ceil().max(1.0) as usize);
    let h = dt / sub as f64;
    let total = cfg.steps * sub;

    let f = |l: &Vector| &abar_t * l + &ell;
    let mut fine = vec![Vector::zeros(dim); total + 1];
    fine[total] = tau.clone();
    for i in (0..total).rev() {
        let l = &fine[i + 1];
        let k1 = f(l);
        let k2 = f(&(l + &k1 * (0.5 * h)));
        let k3 = f(&(l + &k2 * (0.5 * h)));
        let k4 = f(&(l + &k3 * h));
        fine[i] = l + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    let costate: Vec<Vector> = (0..=cfg.steps).map(|k| fine[k * sub].clone()).collect();
    let controls: Vec<Vector> = (0..cfg.steps)
        .map(|k| optimal_control(system, cost, &costate[k]))
        .collect();

    // expected cost under the exponential-Euler scheme, left-endpoint costs
    let prop = system.bundle.propagator(dt)?.into_owned();
    let coupling = &system.drift_self + &system.drift_mean;
    let mut m = x.column_sum() / x.ncols() as f64;
    let mut mean_path = Vec::with_capacity(cfg.steps + 1);
    let mut value = 0.0;
    for a in &controls {
        mean_path.push(m.clone());
        value += dt * (ell.dot(&m) + run_c + cost.control_cost(a.as_slice()));
        let y = &m + (&coupling * &m + &system.control_map * a) * dt;
        m = &prop * y;
    }
    value += tau.dot(&m) + term_c;
    mean_path.push(m);

    // continuous-time value by the trapezoid rule on the fine grid
    let integrand = |l: &Vector| {
        let a = optimal_control(system, cost, l);
        cost.control_cost(a.as_slice()) + l.dot(&(&system.control_map * &a)) + run_c
    };
    let mut integral = 0.0;
    let mut prev = integrand(&fine[0]);
    for l in fine.iter().skip(1) {
        let cur = integrand(l);
        integral += 0.5 * h * (prev + cur);
        prev = cur;
    }
    let m0 = &mean_path[0];
    let value_continuous = fine[0].dot(m0) + integral + term_c;

    Ok(AdjointSolution {
        t0: cfg.t0,
        dt,
        costate,
        controls,
        mean_path,
        value,
        value_continuous,
    })
}

/// Feedback `a = argmin c(a) + n e^T p a` with `p = lambda / n`, the
/// derivative of the particle value with respect to one particle; the
/// factors of `n` cancel. The co-state only depends on time, so does the
/// control.
pub fn costate_feedback(system: &SystemSpec, cost: &CostSpec, sol: &AdjointSolution) -> ControlPolicy {
    let controls: Vec<Vector> = sol
        .costate
        .iter()
        .take(sol.controls.len())
        .map(|l| optimal_control(system, cost, l))
        .collect();
    let qdim = system.control_dim();
    ControlPolicy::feedback(qdim, cost.cone, Arc::new(move |inp| controls[inp.step].clone()))
}

/// The closed-form advertising feedback `gamma*(p) / weight` driven by the
/// head of the co-state, `p^0 = lambda^0 / n`.
pub fn advertising_feedback(sol: &AdjointSolution, n: usize, e0: f64, weight: f64) -> ControlPolicy {
    let heads: Vec<f64> = sol.costate.iter().map(|l| l[0] / n as f64).collect();
    ControlPolicy::feedback(
        1,
        crate::hamiltonian::ControlCone::Nonnegative,
        Arc::new(move |inp| Vector::from_element(1, feedback_gamma_star(heads[inp.step], inp.n, e0) / weight)),
    )
}

/// Piecewise-constant open-loop search space.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseSpec {
    /// Candidate control values, ascending.
    pub grid: Vec<f64>,
    /// Number of equal groups of time steps.
    pub intervals: usize,
}

impl CoarseSpec {
    /// Step range `[start, end)` of interval `j`.
    pub fn interval_steps(&self, j: usize, steps: usize) -> (usize, usize) {
        (j * steps / self.intervals, (j + 1) * steps / self.intervals)
    }

    /// Open-loop policy for a candidate; `indices[j * n + i]` is the grid
    /// index of particle `i` on interval `j`, applied to every channel.
    pub fn policy(&self, indices: &[usize], n: usize, qdim: usize, steps: usize, cost: &CostSpec) -> Result<ControlPolicy> {
        ensure_dim(self.intervals * n, indices.len(), "candidate length")?;
        let mut per_step = Vec::with_capacity(steps);
        for j in 0..self.intervals {
            let (a, b) = self.interval_steps(j, steps);
            let m = Matrix::from_fn(qdim, n, |_, i| self.grid[indices[j * n + i]]);
            per_step.extend(std::iter::repeat_n(m, b - a));
        }
        ControlPolicy::open_loop(per_step, cost.cone)
    }
}

/// Result of the exhaustive open-loop search.
#[derive(Debug, Clone)]
pub struct OpenLoopResult {
    /// Grid indices of the best candidate, `[j * n + i]`.
    pub best_indices: Vec<usize>,
    /// Control values of the best candidate, `[interval][particle]`.
    pub best_controls: Vec<Vec<f64>>,
    pub best: ValueEstimate,
    pub best_samples: Vec<f64>,
    /// Mean cost of every candidate in lexicographic index order.
    pub table: Vec<f64>,
    /// Largest measured change of the value per unit control change, per
    /// (interval, particle) coordinate.
    pub lipschitz: Vec<f64>,
    /// `sum_c L_c * spacing / 2`: bound on `|J(a) - J(proj a)|` for any
    /// candidate-shaped control inside the grid hull.
    pub grid_gap: f64,
}

const CHUNK_PATHS: usize = 256;

struct Batch<'a> {
    system: &'a SystemSpec,
    cost: &'a CostSpec,
    prop: Matrix,
    n: usize,
    dt: f64,
    /// `sigma dW` per step, one column per path.
    noise: Vec<Matrix>,
}

struct Chunk {
    first_path: usize,
    states: Matrix,
    costs: Vec<f64>,
}

impl Batch<'_> {
    fn means(&self, x: &Matrix) -> Vec<Vector> {
        let n = self.n;
        (0..x.ncols() / n)
            .map(|g| x.columns(g * n, n).column_sum() / n as f64)
            .collect()
    }

    fn advance(&self, c: &mut Chunk, k: usize, q: &[f64]) {
        let n = self.n;
        let qdim = self.system.control_dim();
        let x = &c.states;
        let means = self.means(x);
        let cols = x.ncols();
        for (g, mean) in means.iter().enumerate() {
            let mut run = 0.0;
            for i in 0..n {
                let qi = vec![q[i]; qdim];
                run += self.cost.running_cost(x.column(g * n + i).as_slice(), mean.as_slice(), &qi);
            }
            c.costs[g] += self.dt * (run / n as f64);
        }
        let qm = Matrix::from_fn(qdim, cols, |_, col| q[col % n]);
        let mut y = x + (&self.system.drift_self * x + &self.system.control_map * qm) * self.dt;
        for (g, mean) in means.iter().enumerate() {
            let shift = &self.system.drift_mean * mean * self.dt + self.noise[k].column(c.first_path + g);
            for i in 0..n {
                let mut col = y.column_mut(g * n + i);
                col += &shift;
            }
        }
        c.states = &self.prop * y;
    }

    fn finish(&self, c: &Chunk) -> Vec<f64> {
        let n = self.n;
        let means = self.means(&c.states);
        means
            .iter()
            .enumerate()
            .map(|(g, mean)| {
                let term: f64 = (0..n)
                    .map(|i| self.cost.terminal_cost(c.states.column(g * n + i).as_slice(), mean.as_slice()))
                    .sum();
                c.costs[g] + term / n as f64
            })
            .collect()
    }
}

/// Exhaustive search over piecewise-constant deterministic open-loop
/// controls with common random numbers across candidates.
///
/// Candidates sharing a prefix share its simulation; all paths of a node are
/// advanced together as the columns of one matrix.
pub fn oracle_open_loop(
    system: &SystemSpec,
    cost: &CostSpec,
    x0: &[Vector],
    coarse: &CoarseSpec,
    cfg: &SimConfig,
) -> Result<OpenLoopResult> {
    cfg.validate()?;
    let x = pack(x0)?;
    let n = x.ncols();
    ensure_dim(system.dim(), x.nrows(), "initial state")?;
    ensure_dim(system.control_dim(), cost.control_dim(), "control channels")?;
    cost.check_dim(system.dim())?;
    let g = coarse.grid.len();
    if g == 0 || coarse.intervals == 0 || coarse.intervals > cfg.steps {
        return Err(Error::InvalidParameter(
            "need a nonempty grid and 1 <= intervals <= steps".into(),
        ));
    }
    if coarse.grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("control grid must be strictly ascending".into()));
    }
    for &v in &coarse.grid {
        if !cost.cone.contains(v) {
            return Err(Error::OutsideCone {
                value: v,
                cone: cost.cone.to_string(),
            });
        }
    }
    let coords = coarse.intervals * n;
    let size = (g as f64).powi(coords as i32);
    if size > MAX_CANDIDATES {
        return Err(Error::SearchSpaceTooLarge {
            size,
            limit: MAX_CANDIDATES,
        });
    }
    let dt = cfg.dt();
    let noise: Vec<Matrix> = (0..cfg.steps)
        .map(|k| {
            let mut m = Matrix::zeros(system.dim(), cfg.paths);
            for p in 0..cfg.paths {
                let dw = increments(cfg, p, k, system.noise_rank());
                m.set_column(p, &(&system.noise_map * dw));
            }
            m
        })
        .collect();
    let batch = Batch {
        system,
        cost,
        prop: system.bundle.propagator(dt)?.into_owned(),
        n,
        dt,
        noise,
    };
    let chunks: Vec<Chunk> = (0..cfg.paths)
        .step_by(CHUNK_PATHS)
        .map(|first| {
            let len = CHUNK_PATHS.min(cfg.paths - first);
            let mut states = Matrix::zeros(x.nrows(), len * n);
            for p in 0..len {
                states.columns_mut(p * n, n).copy_from(&x);
            }
            Chunk {
                first_path: first,
                states,
                costs: vec![0.0; len],
            }
        })
        .collect();

    let combos = g.pow(n as u32);
    let mut table = Vec::with_capacity(size as usize);
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    let mut prefix = Vec::with_capacity(coords);
    search(&batch, coarse, cfg.steps, 0, chunks, combos, &mut prefix, &mut table, &mut best);
    let (_, best_indices, best_samples) = best.expect("at least one candidate");

    let mut lipschitz = vec![0.0f64; coords];
    for (pos, &v) in table.iter().enumerate() {
        let mut rem = pos;
        let mut digits = vec![0; coords];
        for c in (0..coords).rev() {
            digits[c] = rem % g;
            rem /= g;
        }
        let mut stride = 1;
        for c in (0..coords).rev() {
            if digits[c] + 1 < g {
                let w = table[pos + stride];
                let dq = coarse.grid[digits[c] + 1] - coarse.grid[digits[c]];
                lipschitz[c] = lipschitz[c].max((w - v).abs() / dq);
            }
            stride *= g;
        }
    }
    let spacing = coarse.grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let grid_gap = lipschitz.iter().sum::<f64>() * spacing / 2.0;
    let best_controls = (0..coarse.intervals)
        .map(|j| (0..n).map(|i| coarse.grid[best_indices[j * n + i]]).collect())
        .collect();
    let best = ValueEstimate::from_samples(&best_samples, cfg.seed, super::estimate::describe(cfg, n))?;
    Ok(OpenLoopResult {
        best_indices,
        best_controls,
        best,
        best_samples,
        table,
        lipschitz,
        grid_gap,
    })
}

#[allow(clippy::too_many_arguments)]
fn search(
    batch: &Batch<'_>,
    coarse: &CoarseSpec,
    steps: usize,
    level: usize,
    chunks: Vec<Chunk>,
    combos: usize,
    prefix: &mut Vec<usize>,
    table: &mut Vec<f64>,
    best: &mut Option<(f64, Vec<usize>, Vec<f64>)>,
) {
    if level == coarse.intervals {
        let samples: Vec<f64> = chunks.par_iter().flat_map_iter(|c| batch.finish(c)).collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        table.push(mean);
        if best.as_ref().is_none_or(|b| mean < b.0) {
            *best = Some((mean, prefix.clone(), samples));
        }
        return;
    }
    let g = coarse.grid.len();
    let n = batch.n;
    let (start, end) = coarse.interval_steps(level, steps);
    for combo in 0..combos {
        let mut digits = vec![0; n];
        let mut rem = combo;
        for i in (0..n).rev() {
            digits[i] = rem % g;
            rem /= g;
        }
        let q: Vec<f64> = digits.iter().map(|&d| coarse.grid[d]).collect();
        let mut next: Vec<Chunk> = chunks
            .iter()
            .map(|c| Chunk {
                first_path: c.first_path,
                states: c.states.clone(),
                costs: c.costs.clone(),
            })
            .collect();
        next.par_iter_mut().for_each(|c| {
            for k in start..end {
                batch.advance(c, k, &q);
            }
        });
        prefix.extend_from_slice(&digits);
        search(batch, coarse, steps, level + 1, next, combos, prefix, table, best);
        prefix.truncate(prefix.len() - n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::StateCost;
    use crate::models::AdvertisingParams;
    use crate::value_lab::estimate::path_costs;

    fn small() -> (AdvertisingParams, SystemSpec, CostSpec) {
        let p = AdvertisingParams {
            grid_m: 11,
            ..Default::default()
        };
        let (s, c, _) = p.build().unwrap();
        (p, s, c)
    }

    fn start(sys: &SystemSpec) -> Vector {
        Vector::from_element(sys.dim(), 1.0)
    }

    #[test]
    fn zero_costs_give_zero_control() {
        let (_, sys, mut cost) = small();
        cost.running = StateCost::Zero;
        cost.terminal = StateCost::Zero;
        let cfg = SimConfig::new(0.0, 1.0, 20, 1, 0).unwrap();
        let sol = oracle_adjoint_linear(&sys, &cost, &[start(&sys)], &cfg).unwrap();
        assert!(sol.controls.iter().all(|a| a[0] == 0.0));
        assert_eq!(sol.value, 0.0);
        let coarse = CoarseSpec {
            grid: vec![0.0, 0.5, 1.0],
            intervals: 2,
        };
        let r = oracle_open_loop(&sys, &cost, &[start(&sys)], &coarse, &cfg.with_paths(8)).unwrap();
        assert_eq!(r.best_indices, vec![0, 0]);
    }

    #[test]
    fn goodwill_reward_makes_control_positive_near_horizon() {
        let (_, sys, mut cost) = small();
        cost.running = StateCost::Zero;
        let cfg = SimConfig::new(0.0, 1.0, 20, 1, 0).unwrap();
        let sol = oracle_adjoint_linear(&sys, &cost, &[start(&sys)], &cfg).unwrap();
        assert!(sol.costate[20][0] < 0.0 && sol.costate[19][0] < 0.0);
        assert!(sol.controls[19][0] > 0.0);
    }

    #[test]
    fn discrete_and_continuous_values_close() {
        let (_, sys, cost) = small();
        let cfg = SimConfig::new(0.0, 1.0, 200, 1, 0).unwrap();
        let sol = oracle_adjoint_linear(&sys, &cost, &[start(&sys)], &cfg).unwrap();
        assert!((sol.value - sol.value_continuous).abs() < 2e-2, "{} {}", sol.value, sol.value_continuous);
    }

    #[test]
    fn monte_carlo_matches_oracle_value() {
        let (p, sys, cost) = small();
        let cfg = SimConfig::new(0.0, 1.0, 20, 4000, 42).unwrap();
        let x0 = [start(&sys)];
        let sol = oracle_adjoint_linear(&sys, &cost, &x0, &cfg).unwrap();
        let pol = advertising_feedback(&sol, 1, p.e0, p.control_weight);
        let samples = path_costs(&sys, &cost, &pol, &x0, &cfg).unwrap();
        let est = ValueEstimate::from_samples(&samples, 42, "").unwrap();
        assert!((est.mean - sol.value).abs() <= 3.0 * est.std_error, "{est:?} vs {}", sol.value);
        // both feedback constructions agree
        let general = costate_feedback(&sys, &cost, &sol);
        let other = path_costs(&sys, &cost, &general, &x0, &cfg.with_paths(16)).unwrap();
        for (a, b) in other.iter().zip(&samples) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn nonlinear_cost_rejected() {
        let (_, sys, mut cost) = small();
        cost.terminal = StateCost::General(Arc::new(|x: &[f64], _: &[f64]| x[0] * x[0]));
        let cfg = SimConfig::new(0.0, 1.0, 10, 1, 0).unwrap();
        assert!(matches!(
            oracle_adjoint_linear(&sys, &cost, &[start(&sys)], &cfg),
            Err(Error::Nonlinear(_))
        ));
    }

    #[test]
    fn table_entries_match_direct_simulation() {
        let (_, sys, cost) = small();
        let x0 = [start(&sys), Vector::from_element(sys.dim(), 0.5)];
        let coarse = CoarseSpec {
            grid: vec![0.0, 1.0, 2.0],
            intervals: 2,
        };
        let cfg = SimConfig::new(0.0, 1.0, 10, 300, 9).unwrap();
        let r = oracle_open_loop(&sys, &cost, &x0, &coarse, &cfg).unwrap();
        assert_eq!(r.table.len(), 81);
        let min = r.table.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(min, r.best.mean);
        for pos in [0usize, 17, 80] {
            let mut idx = vec![0; 4];
            let mut rem = pos;
            for c in (0..4).rev() {
                idx[c] = rem % 3;
                rem /= 3;
            }
            let pol = coarse.policy(&idx, 2, 1, cfg.steps, &cost).unwrap();
            let s = path_costs(&sys, &cost, &pol, &x0, &cfg).unwrap();
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            assert!((mean - r.table[pos]).abs() < 1e-10 * (1.0 + mean.abs()));
        }
    }

    #[test]
    fn search_space_limit() {
        let (_, sys, cost) = small();
        let coarse = CoarseSpec {
            grid: (0..10).map(|i| i as f64).collect(),
            intervals: 7,
        };
        let cfg = SimConfig::new(0.0, 1.0, 10, 1, 0).unwrap();
        assert!(matches!(
            oracle_open_loop(&sys, &cost, &[start(&sys)], &coarse, &cfg),
            Err(Error::SearchSpaceTooLarge { .. })
        ));
        let bad = CoarseSpec {
            grid: vec![-1.0, 0.0],
            intervals: 1,
        };
        assert!(oracle_open_loop(&sys, &cost, &[start(&sys)], &bad, &cfg).is_err());
    }
}
