use std::io::{self, Write};

use rayon::prelude::*;

use super::noise::gaussian_increment;
use super::system::{SimConfig, SystemSpec};
use crate::error::{ensure_dim, Error, Result};
use crate::hamiltonian::ControlPolicy;
use crate::measures::BlockFunction;
use crate::{Matrix, Vector};

/// Whether columns of a stored state are particles or lifted blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Particles,
    Lifted,
}

/// Receives every step of one simulated path.
pub trait PathObserver {
    /// Called before the update from `t_k` to `t_{k+1}`; `controls` are held
    /// on the whole step and `dw` is the common Brownian increment.
    fn on_step(&mut self, k: usize, t: f64, states: &Matrix, mean: &Vector, controls: &Matrix, dw: &Vector);
    fn on_final(&mut self, t: f64, states: &Matrix, mean: &Vector);
}

/// One Monte Carlo path: `steps + 1` ensembles, `steps` control matrices and
/// `steps` Brownian increments.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub path: usize,
    pub states: Vec<Matrix>,
    pub controls: Vec<Matrix>,
    pub increments: Vec<Vector>,
}

impl PathRecord {
    pub fn new(path: usize, steps: usize) -> Self {
        Self {
            path,
            states: Vec::with_capacity(steps + 1),
            controls: Vec::with_capacity(steps),
            increments: Vec::with_capacity(steps),
        }
    }
}

impl<O: PathObserver> PathObserver for Vec<O> {
    fn on_step(&mut self, k: usize, t: f64, states: &Matrix, mean: &Vector, controls: &Matrix, dw: &Vector) {
        for o in self.iter_mut() {
            o.on_step(k, t, states, mean, controls, dw);
        }
    }

    fn on_final(&mut self, t: f64, states: &Matrix, mean: &Vector) {
        for o in self.iter_mut() {
            o.on_final(t, states, mean);
        }
    }
}

impl<A: PathObserver, B: PathObserver> PathObserver for (A, B) {
    fn on_step(&mut self, k: usize, t: f64, states: &Matrix, mean: &Vector, controls: &Matrix, dw: &Vector) {
        self.0.on_step(k, t, states, mean, controls, dw);
        self.1.on_step(k, t, states, mean, controls, dw);
    }

    fn on_final(&mut self, t: f64, states: &Matrix, mean: &Vector) {
        self.0.on_final(t, states, mean);
        self.1.on_final(t, states, mean);
    }
}

impl PathObserver for PathRecord {
    fn on_step(&mut self, _k: usize, _t: f64, states: &Matrix, _mean: &Vector, controls: &Matrix, dw: &Vector) {
        self.states.push(states.clone());
        self.controls.push(controls.clone());
        self.increments.push(dw.clone());
    }

    fn on_final(&mut self, _t: f64, states: &Matrix, _mean: &Vector) {
        self.states.push(states.clone());
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub t0: f64,
    pub dt: f64,
    pub steps: usize,
    pub representation: Representation,
    pub records: Vec<PathRecord>,
}

impl PathBundle {
    pub fn paths(&self) -> usize {
        self.records.len()
    }

    /// Number of particles (or blocks).
    pub fn n(&self) -> usize {
        self.records.first().map_or(0, |r| r.states[0].ncols())
    }

    /// Long-format CSV: `path,step,particle,coordinate,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "path,step,particle,coordinate,value")?;
        for r in &self.records {
            for (k, s) in r.states.iter().enumerate() {
                for (i, col) in s.column_iter().enumerate() {
                    for (c, v) in col.iter().enumerate() {
                        writeln!(w, "{},{},{},{},{}", r.path, k, i, c, v)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Run `make(path)` for every path in parallel; results come back in path
/// order, so any reduction over them is independent of scheduling.
pub fn for_each_path<O, F>(paths: usize, make: F) -> Result<Vec<O>>
where
    O: Send,
    F: Fn(usize) -> Result<O> + Sync + Send,
{
    (0..paths).into_par_iter().map(make).collect()
}

pub(crate) fn increments(cfg: &SimConfig, path: usize, k: usize, rank: usize) -> Vector {
    let sq = cfg.dt().sqrt();
    Vector::from_fn(rank, |j, _| {
        sq * gaussian_increment(cfg.seed, path as u64, k as u64, j as u64)
    })
}

fn check_finite(m: &Matrix, path: usize, step: usize) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { path, step })
    }
}

fn check_inputs(system: &SystemSpec, policy: &ControlPolicy, dim: usize, n: usize, cfg: &SimConfig) -> Result<()> {
    cfg.validate()?;
    ensure_dim(system.dim(), dim, "initial state")?;
    ensure_dim(system.control_dim(), policy.control_dim(), "policy control dimension")?;
    if n == 0 {
        return Err(Error::InvalidParameter("at least one particle is required".into()));
    }
    policy.check_compatible(n, cfg.steps)
}

/// One path of the exponential-Euler particle scheme
/// `x_{k+1} = exp(dt A) (x_k + dt f(x_k, mu_k, a_k) + sigma dW_k)`.
pub fn run_particle_path<O: PathObserver>(
    system: &SystemSpec,
    policy: &ControlPolicy,
    x0: &Matrix,
    cfg: &SimConfig,
    prop: &Matrix,
    path: usize,
    obs: &mut O,
) -> Result<()> {
    let n = x0.ncols();
    let inv_n = 1.0 / n as f64;
    let dt = cfg.dt();
    let mut x = x0.clone();
    for k in 0..cfg.steps {
        let t = cfg.time(k);
        let mean = x.column_sum() * inv_n;
        let q = policy.controls(k, t, &x, &mean)?;
        let dw = increments(cfg, path, k, system.noise_rank());
        obs.on_step(k, t, &x, &mean, &q, &dw);
        let shift = &system.drift_mean * &mean * dt + &system.noise_map * &dw;
        let mut y = &x + (&system.drift_self * &x + &system.control_map * &q) * dt;
        for mut col in y.column_iter_mut() {
            col += &shift;
        }
        x = prop * y;
        check_finite(&x, path, k + 1)?;
    }
    let mean = x.column_sum() * inv_n;
    obs.on_final(cfg.horizon, &x, &mean);
    Ok(())
}

/// One path of the lifted equation restricted to block functions, evaluated
/// block by block with integrals taken against Lebesgue measure on `(0, 1)`.
pub fn run_lifted_path<O: PathObserver>(
    system: &SystemSpec,
    policy: &ControlPolicy,
    x0: &BlockFunction,
    cfg: &SimConfig,
    prop: &Matrix,
    path: usize,
    obs: &mut O,
) -> Result<()> {
    let n = x0.partition_size();
    let dt = cfg.dt();
    let mut x = x0.clone();
    let mut q = Matrix::zeros(system.control_dim(), n);
    for k in 0..cfg.steps {
        let t = cfg.time(k);
        let mean = x.expectation();
        for i in 0..n {
            let qi = policy.control_for(k, t, i, n, x.values.column(i).as_view(), &mean)?;
            q.set_column(i, &qi);
        }
        let dw = increments(cfg, path, k, system.noise_rank());
        obs.on_step(k, t, &x.values, &mean, &q, &dw);
        // same grouping of terms as the particle scheme
        let shift = &system.drift_mean * &mean * dt + &system.noise_map * &dw;
        let mut next = Matrix::zeros(x.dim(), n);
        for i in 0..n {
            let xi = x.values.column(i);
            let y = xi + (&system.drift_self * xi + &system.control_map * q.column(i)) * dt + &shift;
            next.set_column(i, &(prop * y));
        }
        check_finite(&next, path, k + 1)?;
        x.values = next;
    }
    let mean = x.expectation();
    obs.on_final(cfg.horizon, &x.values, &mean);
    Ok(())
}

fn pack(x0: &[Vector]) -> Result<Matrix> {
    let first = x0
        .first()
        .ok_or_else(|| Error::InvalidParameter("at least one particle is required".into()))?;
    for x in x0 {
        ensure_dim(first.len(), x.len(), "particle state")?;
    }
    Ok(Matrix::from_columns(x0))
}

/// Simulate `cfg.paths` paths of the `n`-particle system and keep everything.
pub fn simulate_particles(
    system: &SystemSpec,
    policy: &ControlPolicy,
    x0: &[Vector],
    cfg: &SimConfig,
) -> Result<PathBundle> {
    let x0 = pack(x0)?;
    check_inputs(system, policy, x0.nrows(), x0.ncols(), cfg)?;
    let prop = system.bundle.propagator(cfg.dt())?.into_owned();
    let records = for_each_path(cfg.paths, |p| {
        let mut rec = PathRecord::new(p, cfg.steps);
        run_particle_path(system, policy, &x0, cfg, &prop, p, &mut rec)?;
        Ok(rec)
    })?;
    Ok(PathBundle {
        t0: cfg.t0,
        dt: cfg.dt(),
        steps: cfg.steps,
        representation: Representation::Particles,
        records,
    })
}

/// Simulate the lifted equation from a block function; block `i` is driven
/// by the policy exactly as particle `i` would be.
pub fn simulate_lifted(
    system: &SystemSpec,
    policy: &ControlPolicy,
    x0: &BlockFunction,
    cfg: &SimConfig,
) -> Result<PathBundle> {
    check_inputs(system, policy, x0.dim(), x0.partition_size(), cfg)?;
    let prop = system.bundle.propagator(cfg.dt())?.into_owned();
    let records = for_each_path(cfg.paths, |p| {
        let mut rec = PathRecord::new(p, cfg.steps);
        run_lifted_path(system, policy, x0, cfg, &prop, p, &mut rec)?;
        Ok(rec)
    })?;
    Ok(PathBundle {
        t0: cfg.t0,
        dt: cfg.dt(),
        steps: cfg.steps,
        representation: Representation::Lifted,
        records,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::hamiltonian::ControlCone;
    use crate::measures::{lift, pushforward, EmpiricalMeasure};
    use crate::models::AdvertisingParams;
    use crate::space_ops::{assemble_generator, build_delay_space};

    fn pure_flow() -> SystemSpec {
        let b = assemble_generator(build_delay_space(1.0, 11).unwrap(), 0.0).unwrap();
        let d = b.dim();
        SystemSpec::new(
            b,
            Matrix::zeros(d, d),
            Matrix::zeros(d, d),
            Matrix::zeros(d, 1),
            Matrix::zeros(d, 1),
        )
        .unwrap()
    }

    #[test]
    fn pure_semigroup_flow() {
        let sys = pure_flow();
        let cfg = SimConfig::new(0.0, 1.0, 8, 2, 5).unwrap();
        let x0 = Vector::from_fn(sys.dim(), |i, _| (i as f64).sin());
        let pol = ControlPolicy::zero(1, ControlCone::Nonnegative).unwrap();
        let pb = simulate_particles(&sys, &pol, std::slice::from_ref(&x0), &cfg).unwrap();
        for k in 0..=cfg.steps {
            let e = sys.bundle.propagator(k as f64 * cfg.dt()).unwrap();
            let expect = &*e * &x0;
            let got = pb.records[1].states[k].column(0);
            assert!((got - &expect).amax() < 1e-12, "step {k}");
        }
    }

    #[test]
    fn identical_particles_stay_identical() {
        let (sys, _, _) = AdvertisingParams::default().build().unwrap();
        let x = Vector::from_fn(sys.dim(), |i, _| 1.0 + 0.01 * i as f64);
        let pol = ControlPolicy::feedback(
            1,
            ControlCone::Nonnegative,
            Arc::new(|inp| Vector::from_element(1, inp.state[0].abs())),
        );
        let cfg = SimConfig::new(0.0, 1.0, 20, 3, 1).unwrap();
        let pb = simulate_particles(&sys, &pol, &[x.clone(), x], &cfg).unwrap();
        for r in &pb.records {
            for s in &r.states {
                assert_eq!(s.column(0), s.column(1));
            }
        }
    }

    #[test]
    fn scalar_head_decay_matches_ode() {
        let p = AdvertisingParams {
            sigma0: 0.0,
            c0: 0.0,
            eta1: crate::models::Kernel::Zero,
            chi1: crate::models::Kernel::Zero,
            ..AdvertisingParams::default()
        };
        let (sys, _, _) = p.build().unwrap();
        let mut x0 = Vector::zeros(sys.dim());
        x0[0] = 1.0;
        let pol = ControlPolicy::zero(1, ControlCone::Nonnegative).unwrap();
        let mut errs = Vec::new();
        for steps in [50, 100, 200] {
            let cfg = SimConfig::new(0.0, 1.0, steps, 1, 0).unwrap();
            let pb = simulate_particles(&sys, &pol, std::slice::from_ref(&x0), &cfg).unwrap();
            let y = pb.records[0].states[steps][(0, 0)];
            errs.push((y - (p.b0 * 1.0f64).exp()).abs());
        }
        assert!(errs[0] < 0.01);
        assert!(errs[1] < 0.6 * errs[0] && errs[2] < 0.6 * errs[1], "{errs:?}");
    }

    #[test]
    fn lifted_matches_particles_and_pushforward() {
        let (sys, _, _) = AdvertisingParams::default().build().unwrap();
        let atoms: Vec<Vector> = (0..5)
            .map(|i| Vector::from_fn(sys.dim(), |j, _| ((i * 7 + j) as f64 * 0.37).sin()))
            .collect();
        let pol = ControlPolicy::feedback(
            1,
            ControlCone::Nonnegative,
            Arc::new(|inp| Vector::from_element(1, (inp.state[0] - inp.mean[0]).abs() + 0.1 * inp.time)),
        );
        let cfg = SimConfig::new(0.0, 1.0, 25, 4, 9).unwrap();
        let pb = simulate_particles(&sys, &pol, &atoms, &cfg).unwrap();
        let lb = simulate_lifted(&sys, &pol, &lift(&atoms).unwrap(), &cfg).unwrap();
        for (a, b) in pb.records.iter().zip(&lb.records) {
            for (sa, sb) in a.states.iter().zip(&b.states) {
                assert!((sa - sb).amax() < 1e-12);
                let mu = EmpiricalMeasure::from_columns(sa).unwrap();
                let nu = pushforward(&BlockFunction::from_matrix(sb.clone()).unwrap());
                for (x, y) in mu.atoms().iter().zip(nu.atoms()) {
                    assert!((x - y).amax() < 1e-12);
                }
            }
            assert_eq!(a.increments, b.increments);
        }
    }

    #[test]
    fn nan_aborts_with_location() {
        let sys = pure_flow();
        let mut x0 = Vector::zeros(sys.dim());
        x0[0] = f64::NAN;
        let pol = ControlPolicy::zero(1, ControlCone::Nonnegative).unwrap();
        let cfg = SimConfig::new(0.0, 1.0, 3, 1, 0).unwrap();
        assert!(matches!(
            simulate_particles(&sys, &pol, &[x0], &cfg),
            Err(Error::NonFinite { path: 0, step: 1 })
        ));
    }

    #[test]
    fn open_loop_particle_count_mismatch() {
        let sys = pure_flow();
        let pol = ControlPolicy::open_loop(vec![Matrix::zeros(1, 3); 4], ControlCone::Nonnegative).unwrap();
        let cfg = SimConfig::new(0.0, 1.0, 4, 1, 0).unwrap();
        let x0 = vec![Vector::zeros(sys.dim()); 2];
        assert!(simulate_particles(&sys, &pol, &x0, &cfg).is_err());
    }

    #[test]
    fn csv_dump_layout() {
        let sys = pure_flow();
        let pol = ControlPolicy::zero(1, ControlCone::Nonnegative).unwrap();
        let cfg = SimConfig::new(0.0, 1.0, 2, 1, 0).unwrap();
        let pb = simulate_particles(&sys, &pol, &[Vector::zeros(sys.dim())], &cfg).unwrap();
        let mut out = Vec::new();
        pb.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("path,step,particle,coordinate,value\n"));
        assert_eq!(text.lines().count(), 1 + 3 * sys.dim());
    }
}
