use super::noise::gaussian_increment;
use super::simulate::for_each_path;
use super::system::SimConfig;
use crate::error::{ensure_dim, Error, Result};
use crate::hamiltonian::ControlPolicy;
use crate::models::AdvertisingParams;
use crate::space_ops::build_delay_space;
use crate::{Matrix, Vector};

/// Scalar goodwill paths: `values[path][(k, i)]` is particle `i` at `t0 + k dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SddePaths {
    pub t0: f64,
    pub dt: f64,
    pub steps: usize,
    pub values: Vec<Matrix>,
}

/// Past of one particle: the initial segment on the delay grid followed by
/// values stored on the simulation time grid.
struct Past<'a> {
    grid: &'a [f64],
    segment: Vec<f64>,
    t0: f64,
    dt: f64,
}

impl Past<'_> {
    /// `y(t)` for `t <= t0 + k dt`, linear in between nodes.
    fn at(&self, t: f64, stored: &[f64]) -> f64 {
        if t >= self.t0 {
            let u = (t - self.t0) / self.dt;
            let k = (u.floor() as usize).min(stored.len() - 1);
            if k + 1 >= stored.len() {
                return stored[stored.len() - 1];
            }
            let f = u - k as f64;
            (1.0 - f) * stored[k] + f * stored[k + 1]
        } else {
            let xi = t - self.t0;
            let m = self.grid.len();
            let (a, b) = (self.grid[0], self.grid[m - 1]);
            let u = ((xi - a) / (b - a)).clamp(0.0, 1.0) * (m - 1) as f64;
            let j = (u.floor() as usize).min(m - 2);
            let f = u - j as f64;
            (1.0 - f) * self.segment[j] + f * self.segment[j + 1]
        }
    }
}

/// Euler–Maruyama for the goodwill delay equation of each particle, with the
/// delay integrals evaluated by trapezoid quadrature on the model's delay
/// grid over stored past values.
///
/// `x0[i]` holds `(y_i(t0), y_i(t0 + xi_j))`; the grid value at `xi = 0` is
/// replaced by `y_i(t0)`. The Brownian increment of step `k` on path `p` is
/// the one the abstract simulation uses for noise coordinate 0.
pub fn simulate_sdde_direct(
    params: &AdvertisingParams,
    policy: &ControlPolicy,
    x0: &[Vector],
    cfg: &SimConfig,
) -> Result<SddePaths> {
    cfg.validate()?;
    let (eta, chi) = params.validate()?;
    let space = build_delay_space(params.d, params.grid_m)?;
    let m = space.grid_len();
    let n = x0.len();
    if n == 0 {
        return Err(Error::InvalidParameter("at least one particle is required".into()));
    }
    for x in x0 {
        ensure_dim(space.dim, x.len(), "delay history")?;
    }
    ensure_dim(1, policy.control_dim(), "policy control dimension")?;
    policy.check_compatible(n, cfg.steps)?;
    let dt = cfg.dt();
    let sq = dt.sqrt();
    let pasts: Vec<Past> = x0
        .iter()
        .map(|x| {
            let mut segment: Vec<f64> = x.as_slice()[1..].to_vec();
            segment[m - 1] = x[0];
            Past {
                grid: &space.grid,
                segment,
                t0: cfg.t0,
                dt,
            }
        })
        .collect();
    let wk: Vec<f64> = (0..m).map(|j| space.weights[j]).collect();

    let values = for_each_path(cfg.paths, |path| {
        let mut stored: Vec<Vec<f64>> = x0.iter().map(|x| vec![x[0]]).collect();
        let mut out = Matrix::zeros(cfg.steps + 1, n);
        for i in 0..n {
            out[(0, i)] = x0[i][0];
        }
        let mut states = Matrix::zeros(space.dim, n);
        for k in 0..cfg.steps {
            let t = cfg.time(k);
            for i in 0..n {
                states[(0, i)] = *stored[i].last().unwrap();
                for j in 0..m {
                    states[(1 + j, i)] = pasts[i].at(t + space.grid[j], &stored[i]);
                }
            }
            let mean = states.column_sum() / n as f64;
            let q = policy.controls(k, t, &states, &mean)?;
            let dw = sq * gaussian_increment(cfg.seed, path as u64, k as u64, 0);
            let ybar = mean[0];
            let mut chi_int = 0.0;
            for j in 0..m {
                chi_int += wk[j] * chi[j] * mean[1 + j];
            }
            for i in 0..n {
                let y = states[(0, i)];
                let mut eta_int = 0.0;
                for j in 0..m {
                    eta_int += wk[j] * eta[j] * states[(1 + j, i)];
                }
                let drift = params.b0 * y + params.c0 * ybar + eta_int + chi_int + params.e0 * q[(0, i)];
                let next = y + dt * drift + params.sigma0 * dw;
                if !next.is_finite() {
                    return Err(Error::NonFinite { path, step: k + 1 });
                }
                stored[i].push(next);
                out[(k + 1, i)] = next;
            }
        }
        Ok(out)
    })?;
    Ok(SddePaths {
        t0: cfg.t0,
        dt,
        steps: cfg.steps,
        values,
    })
}

/// Deterministic single-particle reference (`ybar = y`, no noise): Heun's
/// method with step `(T - t0) / steps`, delay integrals by the trapezoid rule
/// on the same step (shrunk so it divides `d`) over linearly interpolated
/// past values. Returns `y` at every step node.
pub fn delay_reference<H, C>(
    params: &AdvertisingParams,
    head: f64,
    history: H,
    control: C,
    t0: f64,
    horizon: f64,
    steps: usize,
) -> Result<Vec<f64>>
where
    H: Fn(f64) -> f64,
    C: Fn(f64) -> f64,
{
    params.validate()?;
    if !(horizon > t0) || steps == 0 {
        return Err(Error::InvalidParameter("reference needs t0 < T and steps >= 1".into()));
    }
    let dt = (horizon - t0) / steps as f64;
    let d = params.d;
    let nq = (d / dt).ceil().max(1.0) as usize;
    let hq = d / nq as f64;
    let kern = |xi: f64| {
        params.eta1.eval(xi, -d, 0.0) + params.chi1.eval(xi, -d, 0.0)
    };
    let weights: Vec<f64> = (0..=nq)
        .map(|l| if l == 0 || l == nq { 0.5 * hq } else { hq })
        .collect();
    let kvals: Vec<f64> = (0..=nq).map(|l| kern(-d + l as f64 * hq)).collect();
    let y_at = |t: f64, ys: &[f64]| -> f64 {
        if t >= t0 {
            let u = (t - t0) / dt;
            let k = (u.floor() as usize).min(ys.len() - 1);
            if k + 1 >= ys.len() {
                return ys[ys.len() - 1];
            }
            let f = u - k as f64;
            (1.0 - f) * ys[k] + f * ys[k + 1]
        } else if t - t0 >= -1e-15 * d {
            head
        } else {
            history(t - t0)
        }
    };
    let rhs = |t: f64, ys: &[f64]| -> f64 {
        let y = ys[ys.len() - 1];
        let mut integral = 0.0;
        for l in 0..=nq {
            let s = t - d + l as f64 * hq;
            integral += weights[l] * kvals[l] * y_at(s, ys);
        }
        (params.b0 + params.c0) * y + integral + params.e0 * control(t)
    };
    let mut ys = vec![head];
    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        let f0 = rhs(t, &ys);
        let pred = ys[k] + dt * f0;
        ys.push(pred);
        let f1 = rhs(t + dt, &ys);
        ys[k + 1] = ys[k] + 0.5 * dt * (f0 + f1);
        if !ys[k + 1].is_finite() {
            return Err(Error::NonFinite { path: 0, step: k + 1 });
        }
    }
    Ok(ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::ControlCone;
    use crate::models::Kernel;

    fn constant_history(p: &AdvertisingParams, v: f64) -> Vector {
        Vector::from_element(p.grid_m + 1, v)
    }

    #[test]
    fn no_delay_reduces_to_scalar_euler() {
        let p = AdvertisingParams {
            eta1: Kernel::Zero,
            chi1: Kernel::Zero,
            c0: 0.0,
            ..Default::default()
        };
        let pol = ControlPolicy::constant(Vector::from_element(1, 0.3), ControlCone::Nonnegative).unwrap();
        let cfg = SimConfig::new(0.0, 1.0, 40, 3, 17).unwrap();
        let out = simulate_sdde_direct(&p, &pol, &[constant_history(&p, 1.0)], &cfg).unwrap();
        let dt = cfg.dt();
        for (path, v) in out.values.iter().enumerate() {
            let mut y: f64 = 1.0;
            for k in 0..cfg.steps {
                let dw = dt.sqrt() * gaussian_increment(cfg.seed, path as u64, k as u64, 0);
                y = y + dt * (p.b0 * y + p.e0 * 0.3) + p.sigma0 * dw;
                assert_eq!(v[(k + 1, 0)], y);
            }
        }
    }

    #[test]
    fn deterministic_case_converges_to_reference() {
        let p = AdvertisingParams {
            sigma0: 0.0,
            ..Default::default()
        };
        let pol = ControlPolicy::zero(1, ControlCone::Nonnegative).unwrap();
        let mut errs = Vec::new();
        for (m, steps) in [(11, 20), (21, 40), (41, 80)] {
            let q = AdvertisingParams { grid_m: m, ..p.clone() };
            let cfg = SimConfig::new(0.0, 2.0, steps, 1, 0).unwrap();
            let direct = simulate_sdde_direct(&q, &pol, &[constant_history(&q, 1.0)], &cfg).unwrap();
            let reference = delay_reference(&q, 1.0, |_| 1.0, |_| 0.0, 0.0, 2.0, steps * 10).unwrap();
            let err = (0..=steps)
                .map(|k| (direct.values[0][(k, 0)] - reference[10 * k]).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        let order = (errs[1] / errs[2]).log2();
        assert!(order >= 0.7, "errors {errs:?}");
    }

    #[test]
    fn reference_without_delay_is_exponential() {
        let p = AdvertisingParams {
            eta1: Kernel::Zero,
            chi1: Kernel::Zero,
            sigma0: 0.0,
            ..Default::default()
        };
        let ys = delay_reference(&p, 1.0, |_| 1.0, |_| 0.0, 0.0, 1.0, 1000).unwrap();
        let exact = (p.b0 + p.c0).exp();
        assert!((ys[1000] - exact).abs() < 1e-6);
    }

    #[test]
    fn history_length_checked() {
        let p = AdvertisingParams::default();
        let pol = ControlPolicy::zero(1, ControlCone::Nonnegative).unwrap();
        let cfg = SimConfig::new(0.0, 1.0, 10, 1, 0).unwrap();
        assert!(simulate_sdde_direct(&p, &pol, &[Vector::zeros(5)], &cfg).is_err());
    }
}
