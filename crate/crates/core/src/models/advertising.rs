use super::kernel::Kernel;
use crate::dynamics::SystemSpec;
use crate::error::{Error, Result};
use crate::hamiltonian::{ControlCone, ControlCost, CostSpec, StateCost};
use crate::space_ops::{assemble_generator, build_delay_space, GeneratorBundle};
use crate::{Matrix, Vector};

/// Goodwill dynamics with delayed memory:
///
/// `dy = [b0 y + c0 ybar + int_{-d}^0 (eta1 y(s+xi) + chi1 ybar(s+xi)) dxi + e0 a] ds + sigma0 dW`
///
/// with running cost `-(alpha y + beta ybar) + weight a^2 / 2` and terminal
/// cost `-(gamma_t y + delta_t ybar) + kappa_t y^2 / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvertisingParams {
    pub b0: f64,
    pub c0: f64,
    pub e0: f64,
    pub sigma0: f64,
    pub d: f64,
    pub eta1: Kernel,
    pub chi1: Kernel,
    pub alpha: f64,
    pub beta: f64,
    pub gamma_t: f64,
    pub delta_t: f64,
    pub kappa_t: f64,
    pub control_weight: f64,
    pub grid_m: usize,
}

impl Default for AdvertisingParams {
    fn default() -> Self {
        Self {
            b0: -0.5,
            c0: -0.1,
            e0: 1.0,
            sigma0: 0.2,
            d: 1.0,
            eta1: Kernel::RampUp { scale: -0.3 },
            chi1: Kernel::RampUp { scale: -0.1 },
            alpha: 1.0,
            beta: 0.0,
            gamma_t: 1.0,
            delta_t: 0.0,
            kappa_t: 0.0,
            control_weight: 1.0,
            grid_m: 41,
        }
    }
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Assumption(msg()))
    }
}

impl AdvertisingParams {
    /// Check sign constraints and kernel endpoints; returns `(eta1, chi1)`
    /// on the delay grid.
    pub fn validate(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        for (name, v) in [
            ("b0", self.b0),
            ("c0", self.c0),
            ("e0", self.e0),
            ("sigma0", self.sigma0),
            ("d", self.d),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma_t", self.gamma_t),
            ("delta_t", self.delta_t),
            ("kappa_t", self.kappa_t),
            ("control_weight", self.control_weight),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        require(self.b0 <= 0.0, || format!("deterioration b0 must be <= 0, got {}", self.b0))?;
        require(self.c0 <= 0.0, || format!("deterioration c0 must be <= 0, got {}", self.c0))?;
        require(self.e0 >= 0.0, || format!("effectiveness e0 must be >= 0, got {}", self.e0))?;
        require(self.sigma0 >= 0.0, || format!("volatility sigma0 must be >= 0, got {}", self.sigma0))?;
        require(self.d > 0.0, || format!("delay d must be > 0, got {}", self.d))?;
        require(self.kappa_t >= 0.0, || format!("terminal curvature must be >= 0, got {}", self.kappa_t))?;
        require(self.control_weight > 0.0, || {
            format!("control cost weight must be > 0, got {}", self.control_weight)
        })?;
        let space = build_delay_space(self.d, self.grid_m)?;
        let eta = self.eta1.validate("eta1", &space.grid, -1.0, 0)?;
        let chi = self.chi1.validate("chi1", &space.grid, -1.0, 0)?;
        Ok((eta, chi))
    }

    pub fn build(&self) -> Result<(SystemSpec, CostSpec, GeneratorBundle)> {
        build_advertising(self)
    }

    /// `|A^* iota|` for the head evaluation `iota`; bounds `|x^0| <= C |x|_-1`.
    pub fn head_bound(&self) -> Result<f64> {
        let bundle = assemble_generator(build_delay_space(self.d, self.grid_m)?, 0.0)?;
        let mut iota = Vector::zeros(bundle.dim());
        iota[0] = 1.0;
        bundle.norm(&(bundle.a_adjoint() * iota))
    }
}

pub fn build_advertising(p: &AdvertisingParams) -> Result<(SystemSpec, CostSpec, GeneratorBundle)> {
    let (eta, chi) = p.validate()?;
    let space = build_delay_space(p.d, p.grid_m)?;
    let bundle = assemble_generator(space.clone(), 0.0)?;
    let dim = bundle.dim();
    let mut s = Matrix::zeros(dim, dim);
    let mut m = Matrix::zeros(dim, dim);
    // the generator's head row is -x^0, so +1 restores b0
    s[(0, 0)] = p.b0 + 1.0;
    m[(0, 0)] = p.c0;
    for j in 0..space.grid_len() {
        s[(0, 1 + j)] = eta[j] * space.weights[j];
        m[(0, 1 + j)] = chi[j] * space.weights[j];
    }
    let mut e = Matrix::zeros(dim, 1);
    e[(0, 0)] = p.e0;
    let mut sigma = Matrix::zeros(dim, 1);
    sigma[(0, 0)] = p.sigma0;
    let system = SystemSpec::new(bundle.clone(), s, m, e, sigma)?;

    let head = |c: f64| {
        let mut v = Vector::zeros(dim);
        v[0] = c;
        v
    };
    let running = StateCost::affine(head(-p.alpha), head(-p.beta), 0.0);
    let terminal = if p.kappa_t > 0.0 {
        StateCost::Quadratic {
            on_state: head(-p.gamma_t),
            on_mean: head(-p.delta_t),
            constant: 0.0,
            direction: head(1.0),
            curvature: p.kappa_t,
        }
    } else {
        StateCost::affine(head(-p.gamma_t), head(-p.delta_t), 0.0)
    };
    let cost = CostSpec::new(
        running,
        ControlCost::Quadratic {
            weight: p.control_weight,
        },
        Vector::from_element(1, 1.0),
        terminal,
        ControlCone::Nonnegative,
    )?;
    cost.check_dim(dim)?;
    Ok((system, cost, bundle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space_ops::verify_operator_assumptions;

    #[test]
    fn defaults_pass_operator_checks() {
        let (_, _, bundle) = AdvertisingParams::default().build().unwrap();
        let diag = verify_operator_assumptions(&bundle, 0.02).unwrap();
        assert!(diag.all_pass(), "{:?}", diag.rows());
        assert_eq!(bundle.c0, 0.0);
    }

    #[test]
    fn zero_couplings_leave_only_head_entry() {
        let p = AdvertisingParams {
            c0: 0.0,
            eta1: Kernel::Zero,
            chi1: Kernel::Zero,
            ..Default::default()
        };
        let (sys, _, _) = p.build().unwrap();
        assert_eq!(sys.drift_self[(0, 0)], 0.5);
        assert_eq!(sys.drift_self.iter().filter(|v| **v != 0.0).count(), 1);
        assert!(sys.drift_mean.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn kernel_not_vanishing_at_left_end_rejected() {
        let p = AdvertisingParams {
            eta1: Kernel::Constant(-1.0),
            ..Default::default()
        };
        match p.build() {
            Err(Error::Assumption(msg)) => assert!(msg.contains("eta1")),
            other => panic!("expected an assumption error, got {other:?}"),
        }
    }

    #[test]
    fn sign_violations_rejected() {
        for p in [
            AdvertisingParams { b0: 0.1, ..Default::default() },
            AdvertisingParams { c0: 0.1, ..Default::default() },
            AdvertisingParams { e0: -1.0, ..Default::default() },
            AdvertisingParams { sigma0: -0.2, ..Default::default() },
            AdvertisingParams { d: 0.0, ..Default::default() },
        ] {
            assert!(p.build().is_err());
        }
    }

    #[test]
    fn head_is_controlled_by_dual_norm() {
        let p = AdvertisingParams::default();
        assert!((p.head_bound().unwrap() - 1.0).abs() < 1e-12);
        let (_, _, bundle) = p.build().unwrap();
        let mut state = 0x1234_5678u64;
        for _ in 0..1000 {
            let x = Vector::from_fn(bundle.dim(), |_, _| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            });
            assert!(x[0].abs() <= bundle.dual_norm(&x).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn delay_functional_matches_quadrature() {
        let p = AdvertisingParams::default();
        let (sys, _, bundle) = p.build().unwrap();
        // history x^1 = 1: int_{-1}^0 -0.3 (xi + 1) dxi = -0.15
        let mut x = Vector::from_element(bundle.dim(), 1.0);
        x[0] = 0.0;
        let row = (&sys.drift_self * &x)[0];
        assert!((row + 0.15).abs() < 1e-12);
    }
}
