use super::cost::{ControlCost, CostSpec};
use super::policy::ControlCone;
use crate::dynamics::SystemSpec;
use crate::error::{ensure_dim, Error, Result};
use crate::Vector;

/// Initial grid resolution of the derivative-free channel minimizer.
pub const GRID_POINTS: usize = 1 << 14;
/// Bracket width at which golden-section refinement stops.
pub const GOLDEN_TOL: f64 = 1e-8;

/// `n e0 (p^0)^-`: minimizer of `n e0 p a + a^2 / 2` over `a >= 0`.
pub fn feedback_gamma_star(p_head: f64, n: usize, e0: f64) -> f64 {
    n as f64 * e0 * (-p_head).max(0.0)
}

/// Per-channel slopes `s_j = <e_j, p>` in the weighted inner product.
pub fn channel_slopes(system: &SystemSpec, p: &Vector) -> Result<Vector> {
    ensure_dim(system.dim(), p.len(), "co-state")?;
    let wp = p.component_mul(&system.bundle.space.weight_diag());
    Ok(system.control_map.tr_mul(&wp))
}

/// Radius `K` such that every minimizer of the Hamiltonian with `|p| <= c_p`
/// satisfies `|q_j| <= K` on every channel.
///
/// With `a = max_j |e_j| c_p / nu_j` and growth constants `(C1, C2)`:
/// `K = (a + sqrt(a^2 + 8 C1 C2)) / (2 C2)`. The bound uses that zero is
/// admissible; for a box without zero the box radius is returned instead.
pub fn truncation_radius(c_p: f64, system: &SystemSpec, cost: &CostSpec) -> Result<f64> {
    if !(c_p.is_finite() && c_p >= 0.0) {
        return Err(Error::InvalidParameter(format!("co-state bound must be >= 0, got {c_p}")));
    }
    ensure_dim(system.control_dim(), cost.control_dim(), "control channels")?;
    let (c1, c2, _) = cost.control.coercivity();
    if !(c2 > 0.0 && c1 >= 0.0) {
        return Err(Error::Coercivity(format!("need C1 >= 0 and C2 > 0, got {c1}, {c2}")));
    }
    let box_radius = match cost.cone {
        ControlCone::Box { lo, hi } => Some(lo.abs().max(hi.abs())),
        _ => None,
    };
    if !cost.cone.contains_zero() {
        return Ok(box_radius.unwrap_or(0.0));
    }
    let space = &system.bundle.space;
    let mut a: f64 = 0.0;
    for (j, col) in system.control_map.column_iter().enumerate() {
        let e_norm = space.norm_slice(col.clone_owned().as_slice());
        a = a.max(e_norm * c_p / cost.channel_weights[j]);
    }
    let k = (a + (a * a + 8.0 * c1 * c2).sqrt()) / (2.0 * c2);
    Ok(match box_radius {
        Some(r) => k.min(r),
        None => k,
    })
}

/// `min_q s q + nu c(q)` over `[lo, hi]` by grid search then golden section.
pub fn minimize_channel_numeric(control: &ControlCost, lo: f64, hi: f64, s: f64, nu: f64) -> (f64, f64) {
    let g = |q: f64| s * q + nu * control.eval(q);
    if hi <= lo {
        return (g(lo), lo);
    }
    let step = (hi - lo) / GRID_POINTS as f64;
    let at = |i: usize| if i == GRID_POINTS { hi } else { lo + i as f64 * step };
    let mut best = 0;
    let mut best_v = g(lo);
    for i in 1..=GRID_POINTS {
        let v = g(at(i));
        if v < best_v {
            best_v = v;
            best = i;
        }
    }
    let mut a = at(best.saturating_sub(1));
    let mut b = at((best + 1).min(GRID_POINTS));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > GOLDEN_TOL {
        if gc <= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    let mut q = 0.5 * (a + b);
    let mut v = g(q);
    // never return something worse than the best grid point or an endpoint
    for cand in [at(best), lo, hi] {
        let gv = g(cand);
        if gv < v {
            v = gv;
            q = cand;
        }
    }
    (v, q)
}

/// `min_q s q + nu c(q)` over the cone; closed form for quadratic costs.
pub fn minimize_channel(control: &ControlCost, cone: ControlCone, s: f64, nu: f64, radius: f64) -> (f64, f64) {
    match control {
        ControlCost::Quadratic { weight } => {
            let q = cone.project(-s / (nu * weight));
            (s * q + nu * control.eval(q), q)
        }
        ControlCost::Convex { .. } => {
            let (lo, hi) = cone.search_interval(radius);
            minimize_channel_numeric(control, lo, hi, s, nu)
        }
    }
}

/// `H(x, mean, p) = inf_q <f(x, mean, q), p> + l(x, mean, q)` and its argmin.
pub fn hamiltonian_pointwise(
    x: &Vector,
    mean: &Vector,
    p: &Vector,
    system: &SystemSpec,
    cost: &CostSpec,
) -> Result<(f64, Vector)> {
    let dim = system.dim();
    ensure_dim(dim, x.len(), "state")?;
    ensure_dim(dim, mean.len(), "mean")?;
    ensure_dim(system.control_dim(), cost.control_dim(), "control channels")?;
    let space = &system.bundle.space;
    let drift = &system.drift_self * x + &system.drift_mean * mean;
    let mut value = space.inner_unchecked(drift.as_slice(), p.as_slice())
        + cost.running.eval(x.as_slice(), mean.as_slice());
    let slopes = channel_slopes(system, p)?;
    let radius = match cost.control {
        ControlCost::Quadratic { .. } => f64::INFINITY,
        ControlCost::Convex { .. } => {
            let k = truncation_radius(space.norm_slice(p.as_slice()), system, cost)?;
            cost.control.check_coercivity(k)?;
            k
        }
    };
    let mut q = Vector::zeros(slopes.len());
    for j in 0..slopes.len() {
        let (v, qj) = minimize_channel(&cost.control, cost.cone, slopes[j], cost.channel_weights[j], radius);
        value += v;
        q[j] = qj;
    }
    Ok((value, q))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::hamiltonian::StateCost;
    use crate::models::AdvertisingParams;

    fn advertising() -> (SystemSpec, CostSpec) {
        let p = AdvertisingParams::default();
        let (sys, cost, _) = p.build().unwrap();
        (sys, cost)
    }

    #[test]
    fn gamma_star_values() {
        assert_eq!(feedback_gamma_star(0.0, 3, 1.0), 0.0);
        assert_eq!(feedback_gamma_star(1.0, 3, 1.0), 0.0);
        assert_eq!(feedback_gamma_star(-0.5, 4, 2.0), 4.0);
    }

    #[test]
    fn quadratic_channel_closed_form() {
        let c = ControlCost::half_square();
        let (v, q) = minimize_channel(&c, ControlCone::Nonnegative, -2.0, 1.0, f64::INFINITY);
        assert_eq!(q, 2.0);
        assert_eq!(v, -2.0);
        let (v, q) = minimize_channel(&c, ControlCone::Nonnegative, 3.0, 1.0, f64::INFINITY);
        assert_eq!((v, q), (0.0, 0.0));
        // dense grid agrees
        let (vn, qn) = minimize_channel_numeric(&c, 0.0, 10.0, -2.0, 1.0);
        assert!((vn + 2.0).abs() < 1e-12 && (qn - 2.0).abs() < 1e-7);
    }

    #[test]
    fn decoupled_control_gives_cost_minimizer() {
        let (mut sys, cost) = advertising();
        sys.control_map.fill(0.0);
        let x = Vector::from_fn(sys.dim(), |i, _| 0.1 * i as f64);
        let mean = x.clone();
        let p = Vector::from_element(sys.dim(), -1.0);
        let (v, q) = hamiltonian_pointwise(&x, &mean, &p, &sys, &cost).unwrap();
        let drift = &sys.drift_self * &x + &sys.drift_mean * &mean;
        let expect = sys.bundle.inner(&drift, &p).unwrap() + cost.running.eval(x.as_slice(), mean.as_slice());
        assert!((v - expect).abs() < 1e-12);
        assert_eq!(q[0], 0.0);
    }

    #[test]
    fn head_slope_drives_advertising_control() {
        let (sys, cost) = advertising();
        let mut p = Vector::zeros(sys.dim());
        p[0] = -2.0;
        let x = Vector::zeros(sys.dim());
        let (v, q) = hamiltonian_pointwise(&x, &x, &p, &sys, &cost).unwrap();
        assert_eq!(q[0], 2.0);
        assert!((v + 2.0).abs() < 1e-12);
    }

    #[test]
    fn radius_bounds_quadratic_minimizer() {
        let (sys, cost) = advertising();
        let k = truncation_radius(1.0, &sys, &cost).unwrap();
        assert!(k >= 1.0);
        assert_eq!(truncation_radius(0.0, &sys, &cost).unwrap(), 0.0);
    }

    #[test]
    fn convex_cost_uses_numeric_search() {
        let (sys, mut cost) = advertising();
        cost.control = ControlCost::Convex {
            f: Arc::new(|q: f64| 0.5 * q * q + 0.25 * q.abs()),
            c1: 1.0,
            c2: 0.5,
            c3: 1.0,
        };
        let mut p = Vector::zeros(sys.dim());
        p[0] = -2.0;
        let x = Vector::zeros(sys.dim());
        let (v, q) = hamiltonian_pointwise(&x, &x, &p, &sys, &cost).unwrap();
        // minimizer of -2q + q^2/2 + q/4 on q >= 0 is 1.75
        assert!((q[0] - 1.75).abs() < 1e-7);
        assert!((v - (-2.0 * 1.75 + 0.5 * 1.75 * 1.75 + 0.25 * 1.75)).abs() < 1e-12);
        cost.running = StateCost::Zero;
        cost.control = ControlCost::Convex {
            f: Arc::new(|q: f64| -q * q),
            c1: 1.0,
            c2: 0.5,
            c3: 1.0,
        };
        assert!(matches!(
            hamiltonian_pointwise(&x, &x, &p, &sys, &cost),
            Err(Error::Coercivity(_))
        ));
    }
}
