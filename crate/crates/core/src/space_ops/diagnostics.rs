use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::generator::GeneratorBundle;
use crate::error::Result;
use crate::{Matrix, Vector};

pub const DISSIPATIVITY_TOL: f64 = 1e-9;
pub const CONTRACTION_TOL: f64 = 1e-9;
pub const SEMIGROUP_TOL: f64 = 1e-9;
pub const WEAK_B_TOL: f64 = 1e-9;
pub const INVERSE_TOL: f64 = 1e-10;

/// Numeric margins for the operator assumptions of the abstract framework.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorDiagnostics {
    /// `-lambda_max` of the symmetric part of `A`; nonnegative when dissipative.
    pub dissipativity_margin: f64,
    /// Largest `<Ax, x> / |x|^2` over random test vectors.
    pub sampled_dissipativity: f64,
    /// `||exp(dt A)||` in the weighted operator norm.
    pub contraction_norm: f64,
    /// Max-entry error of `exp(2 dt A) - exp(dt A)^2`.
    pub semigroup_error: f64,
    /// Spectral norm of `A A^-1 - I`.
    pub inverse_residual: f64,
    /// Smallest eigenvalue of the symmetric part of `-A^* B + c0 B`.
    pub weak_b_min_eig: f64,
    /// Smallest eigenvalue of `B`.
    pub b_min_eig: f64,
    /// Max-entry deviation of `B` from its weighted adjoint.
    pub b_asymmetry: f64,
    pub c0: f64,
    pub dt: f64,
}

impl OperatorDiagnostics {
    pub fn dissipative(&self) -> bool {
        self.dissipativity_margin >= -DISSIPATIVITY_TOL
            && self.sampled_dissipativity <= DISSIPATIVITY_TOL
    }

    pub fn contractive(&self) -> bool {
        self.contraction_norm <= 1.0 + CONTRACTION_TOL
    }

    pub fn semigroup_ok(&self) -> bool {
        self.semigroup_error <= SEMIGROUP_TOL
    }

    pub fn weak_b_ok(&self) -> bool {
        self.weak_b_min_eig >= -WEAK_B_TOL
    }

    pub fn b_positive(&self) -> bool {
        self.b_min_eig > 0.0 && self.b_asymmetry <= 1e-9 * (1.0 + self.b_min_eig.abs())
    }

    pub fn inverse_ok(&self) -> bool {
        self.inverse_residual <= INVERSE_TOL
    }

    pub fn all_pass(&self) -> bool {
        self.dissipative()
            && self.contractive()
            && self.semigroup_ok()
            && self.weak_b_ok()
            && self.b_positive()
            && self.inverse_ok()
    }

    /// Named checks as `(name, value, tolerance, pass)` rows.
    pub fn rows(&self) -> Vec<(&'static str, f64, f64, bool)> {
        vec![
            ("dissipativity_margin", self.dissipativity_margin, -DISSIPATIVITY_TOL, self.dissipative()),
            ("contraction_norm", self.contraction_norm, 1.0 + CONTRACTION_TOL, self.contractive()),
            ("semigroup_error", self.semigroup_error, SEMIGROUP_TOL, self.semigroup_ok()),
            ("inverse_residual", self.inverse_residual, INVERSE_TOL, self.inverse_ok()),
            ("weak_b_min_eig", self.weak_b_min_eig, -WEAK_B_TOL, self.weak_b_ok()),
            ("b_min_eig", self.b_min_eig, 0.0, self.b_positive()),
        ]
    }
}

fn symmetric_part_eigs(bundle: &GeneratorBundle, m: &Matrix) -> Vector {
    let g = bundle.space.to_euclidean(m);
    let sym = (&g + g.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
}

/// Check dissipativity, contraction, the semigroup law, invertibility and the
/// weak B-condition for an assembled generator.
pub fn verify_operator_assumptions(bundle: &GeneratorBundle, dt: f64) -> Result<OperatorDiagnostics> {
    let n = bundle.dim();
    let a_eigs = symmetric_part_eigs(bundle, &bundle.a);
    let dissipativity_margin = -a_eigs.max();

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0d15);
    let mut sampled = f64::NEG_INFINITY;
    for _ in 0..200 {
        let x = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let ax = &bundle.a * &x;
        let r = bundle.inner(&ax, &x)? / bundle.inner(&x, &x)?;
        sampled = sampled.max(r);
    }

    let e1 = bundle.propagator(dt)?.into_owned();
    let e2 = bundle.propagator(2.0 * dt)?.into_owned();
    let contraction_norm = bundle.space.to_euclidean(&e1).singular_values().max();
    let semigroup_error = (&e1 * &e1 - e2).abs().max();

    let inverse_residual = (&bundle.a * &bundle.a_inv - Matrix::identity(n, n))
        .singular_values()
        .max();

    let weak_b = -(bundle.a_adjoint() * &bundle.b) + &bundle.b * bundle.c0;
    let weak_b_min_eig = symmetric_part_eigs(bundle, &weak_b).min();

    let b_min_eig = symmetric_part_eigs(bundle, &bundle.b).min();
    let b_asymmetry = (bundle.space.adjoint(&bundle.b) - &bundle.b).abs().max();

    Ok(OperatorDiagnostics {
        dissipativity_margin,
        sampled_dissipativity: sampled,
        contraction_norm,
        semigroup_error,
        inverse_residual,
        weak_b_min_eig,
        b_min_eig,
        b_asymmetry,
        c0: bundle.c0,
        dt,
    })
}
