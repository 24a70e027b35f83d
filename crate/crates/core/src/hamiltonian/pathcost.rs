use super::cost::CostSpec;
use crate::dynamics::{PathBundle, PathObserver, Representation, SimConfig};
use crate::error::{ensure_dim, Error, Result};
use crate::{Matrix, Vector};

/// Streams the cost of one path: left-endpoint quadrature of the running
/// cost plus the averaged terminal cost.
#[derive(Debug, Clone)]
pub struct CostAccumulator<'a> {
    cost: &'a CostSpec,
    dt: f64,
    representation: Representation,
    total: f64,
}

impl<'a> CostAccumulator<'a> {
    pub fn new(cost: &'a CostSpec, dt: f64, representation: Representation) -> Self {
        Self {
            cost,
            dt,
            representation,
            total: 0.0,
        }
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// `(1/n) sum_i phi(i)` for particles, `sum_i |A_i| phi(i)` for blocks.
    fn average(&self, n: usize, mut phi: impl FnMut(usize) -> f64) -> f64 {
        match self.representation {
            Representation::Particles => (0..n).map(&mut phi).sum::<f64>() / n as f64,
            Representation::Lifted => {
                let len = 1.0 / n as f64;
                (0..n).map(|i| len * phi(i)).sum()
            }
        }
    }
}

impl PathObserver for CostAccumulator<'_> {
    fn on_step(&mut self, _k: usize, _t: f64, states: &Matrix, mean: &Vector, controls: &Matrix, _dw: &Vector) {
        let m = mean.as_slice();
        let run = self.average(states.ncols(), |i| {
            let x = states.column(i);
            let q = controls.column(i);
            self.cost.running_cost(x.as_slice(), m, q.as_slice())
        });
        self.total += self.dt * run;
    }

    fn on_final(&mut self, _t: f64, states: &Matrix, mean: &Vector) {
        let m = mean.as_slice();
        self.total += self.average(states.ncols(), |i| {
            self.cost.terminal_cost(states.column(i).as_slice(), m)
        });
    }
}

/// Per-path total cost of stored paths.
pub fn cost_of_pathbundle(paths: &PathBundle, cost: &CostSpec, cfg: &SimConfig) -> Result<Vec<f64>> {
    if paths.steps != cfg.steps || (paths.dt - cfg.dt()).abs() > 1e-14 * cfg.dt().abs().max(1.0) {
        return Err(Error::InvalidParameter(
            "path bundle time grid does not match the configuration".into(),
        ));
    }
    let mut out = Vec::with_capacity(paths.paths());
    for rec in &paths.records {
        ensure_dim(paths.steps + 1, rec.states.len(), "stored states")?;
        ensure_dim(paths.steps, rec.controls.len(), "stored controls")?;
        let mut acc = CostAccumulator::new(cost, paths.dt, paths.representation);
        for k in 0..paths.steps {
            let s = &rec.states[k];
            ensure_dim(cost.control_dim(), rec.controls[k].nrows(), "stored control channels")?;
            let mean = mean_of(s, paths.representation);
            acc.on_step(k, cfg.time(k), s, &mean, &rec.controls[k], &Vector::zeros(0));
        }
        let s = &rec.states[paths.steps];
        acc.on_final(cfg.horizon, s, &mean_of(s, paths.representation));
        out.push(acc.total());
    }
    Ok(out)
}

fn mean_of(states: &Matrix, repr: Representation) -> Vector {
    let n = states.ncols();
    match repr {
        Representation::Particles => states.column_sum() / n as f64,
        Representation::Lifted => {
            let len = 1.0 / n as f64;
            let mut acc = Vector::zeros(states.nrows());
            for col in states.column_iter() {
                acc.axpy(len, &col, 1.0);
            }
            acc
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate_lifted, simulate_particles};
    use crate::hamiltonian::{ControlCone, ControlCost, ControlPolicy, StateCost};
    use crate::measures::lift;
    use crate::models::AdvertisingParams;

    #[test]
    fn zero_and_constant_costs() {
        let (sys, mut cost, _) = AdvertisingParams::default().build().unwrap();
        cost.running = StateCost::Constant(0.7);
        cost.terminal = StateCost::Zero;
        let cfg = SimConfig::new(0.25, 2.0, 7, 3, 4).unwrap();
        let pol = ControlPolicy::zero(1, ControlCone::Nonnegative).unwrap();
        let x0 = vec![Vector::from_element(sys.dim(), 0.3); 2];
        let pb = simulate_particles(&sys, &pol, &x0, &cfg).unwrap();
        for c in cost_of_pathbundle(&pb, &cost, &cfg).unwrap() {
            assert!((c - 0.7 * 1.75).abs() < 1e-12);
        }
        cost.running = StateCost::Zero;
        for c in cost_of_pathbundle(&pb, &cost, &cfg).unwrap() {
            assert_eq!(c, 0.0);
        }
    }

    #[test]
    fn lifted_costs_match_particle_costs() {
        let (sys, mut cost, _) = AdvertisingParams::default().build().unwrap();
        cost.control = ControlCost::half_square();
        let atoms: Vec<Vector> = (0..4)
            .map(|i| Vector::from_fn(sys.dim(), |j, _| 0.5 + 0.1 * ((i + j) as f64).cos()))
            .collect();
        let pol = ControlPolicy::constant(Vector::from_element(1, 0.4), ControlCone::Nonnegative).unwrap();
        let cfg = SimConfig::new(0.0, 1.0, 10, 5, 2).unwrap();
        let a = cost_of_pathbundle(&simulate_particles(&sys, &pol, &atoms, &cfg).unwrap(), &cost, &cfg).unwrap();
        let b = cost_of_pathbundle(
            &simulate_lifted(&sys, &pol, &lift(&atoms).unwrap(), &cfg).unwrap(),
            &cost,
            &cfg,
        )
        .unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_mismatch_rejected() {
        let (sys, cost, _) = AdvertisingParams::default().build().unwrap();
        let pol = ControlPolicy::zero(1, ControlCone::Nonnegative).unwrap();
        let cfg = SimConfig::new(0.0, 1.0, 4, 1, 0).unwrap();
        let pb = simulate_particles(&sys, &pol, &[Vector::zeros(sys.dim())], &cfg).unwrap();
        let other = SimConfig::new(0.0, 1.0, 5, 1, 0).unwrap();
        assert!(cost_of_pathbundle(&pb, &cost, &other).is_err());
    }
}
