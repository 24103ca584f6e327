//! Numerical form-bound constants of a sampled drift.
//!
//! `weak_formbound_estimate` returns `||A||^2` for `A = |b|^{1/2}(lambda -
//! Delta)^{-1/4}`, `formbound_estimate` the same for `A = |b|(lambda -
//! Delta)^{-1/2}`. Both run power iteration on `A*A`, which is a product of
//! real multipliers and pointwise weights and hence self-adjoint on the grid.

use super::grid::GridFunction;
use super::power::{power_iteration, start_vector, PowerEstimate, DEFAULT_POWER_TOL};
use super::spectral::bessel_apply;

fn scalar_template(b: &GridFunction) -> GridFunction {
    GridFunction::zeros(*b.grid(), 1)
}

/// `delta_hat = || |b|^{1/2} (lambda - Delta)^{-1/4} ||^2`.
pub fn weak_formbound_estimate(b: &GridFunction, lambda: f64, iters: usize) -> PowerEstimate {
    weak_formbound_estimate_tol(b, lambda, iters, DEFAULT_POWER_TOL)
}

pub fn weak_formbound_estimate_tol(
    b: &GridFunction,
    lambda: f64,
    iters: usize,
    tol: f64,
) -> PowerEstimate {
    let w = b.magnitude();
    power_iteration(
        |u| bessel_apply(&bessel_apply(u, 0.25, lambda).weighted(&w), 0.25, lambda),
        start_vector(&scalar_template(b)),
        tol,
        iters,
    )
}

/// `delta1_hat = || |b| (lambda - Delta)^{-1/2} ||^2`.
pub fn formbound_estimate(b: &GridFunction, lambda: f64, iters: usize) -> PowerEstimate {
    formbound_estimate_tol(b, lambda, iters, DEFAULT_POWER_TOL)
}

pub fn formbound_estimate_tol(
    b: &GridFunction,
    lambda: f64,
    iters: usize,
    tol: f64,
) -> PowerEstimate {
    let w2: Vec<f64> = b.magnitude().iter().map(|m| m * m).collect();
    power_iteration(
        |u| bessel_apply(&bessel_apply(u, 0.5, lambda).weighted(&w2), 0.5, lambda),
        start_vector(&scalar_template(b)),
        tol,
        iters,
    )
}

/// Operator norms of the adjoint pair `(mu - Delta)^{-1/2}|b|^{1/2}` and
/// `|b|^{1/2}(mu - Delta)^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityCheck {
    pub left: f64,
    pub right: f64,
    pub converged: bool,
}

impl DualityCheck {
    pub fn relative_gap(&self) -> f64 {
        (self.left - self.right).abs() / self.left.max(self.right).max(f64::MIN_POSITIVE)
    }
}

pub fn duality_check(b: &GridFunction, mu: f64, iters: usize, tol: f64) -> DualityCheck {
    let sqrt_b: Vec<f64> = b.magnitude().iter().map(|m| m.sqrt()).collect();
    let start = start_vector(&scalar_template(b));
    // A = M|b|^{1/2}: A*A = |b|^{1/2} M^2 |b|^{1/2}.
    let left = power_iteration(
        |u| bessel_apply(&u.weighted(&sqrt_b), 1.0, mu).weighted(&sqrt_b),
        start.clone(),
        tol,
        iters,
    );
    // A = |b|^{1/2} M: A*A = M |b| M.
    let w: Vec<f64> = sqrt_b.iter().map(|s| s * s).collect();
    let right = power_iteration(
        |u| bessel_apply(&bessel_apply(u, 0.5, mu).weighted(&w), 0.5, mu),
        start,
        tol,
        iters,
    );
    DualityCheck {
        left: left.value.max(0.0).sqrt(),
        right: right.value.max(0.0).sqrt(),
        converged: left.converged && right.converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::DriftField;
    use crate::operators::{sample_drift, Grid};

    fn scaled_field(b: &GridFunction, factor: f64) -> GridFunction {
        b.scale(rustfft::num_complex::Complex64::new(factor, 0.0))
    }

    #[test]
    fn zero_field_gives_zero() {
        let g = Grid::new(3, 4.0, 8).unwrap();
        let b = GridFunction::zeros(g, 3);
        assert_eq!(weak_formbound_estimate(&b, 1.0, 50).value, 0.0);
        assert_eq!(formbound_estimate(&b, 1.0, 50).value, 0.0);
    }

    #[test]
    fn constant_field_norm_is_explicit() {
        // |b| = 2 everywhere: ||A||^2 = 2 / lambda^{1/2}.
        let g = Grid::new(3, 4.0, 8).unwrap();
        let b = GridFunction::from_real(g, 3, &vec![2.0f64 / 3f64.sqrt(); 3 * g.len()]).unwrap();
        let est = weak_formbound_estimate_tol(&b, 4.0, 200, 1e-12);
        assert!((est.value - 1.0).abs() < 1e-9, "{}", est.value);
        let est1 = formbound_estimate_tol(&b, 4.0, 200, 1e-12);
        assert!((est1.value - 1.0).abs() < 1e-9, "{}", est1.value);
    }

    #[test]
    fn scaling_laws_are_exact() {
        let g = Grid::new(3, 4.0, 8).unwrap();
        let b = sample_drift(&DriftField::model_radial(0.2, 3).unwrap(), &g).unwrap();
        let b2 = scaled_field(&b, 2.0);
        let w1 = weak_formbound_estimate(&b, 1.0, 200);
        let w2 = weak_formbound_estimate(&b2, 1.0, 200);
        assert_eq!(w2.value, 2.0 * w1.value);
        let f1 = formbound_estimate(&b, 1.0, 200);
        let f2 = formbound_estimate(&b2, 1.0, 200);
        assert_eq!(f2.value, 4.0 * f1.value);
    }

    #[test]
    fn monotone_under_domination() {
        let g = Grid::new(3, 4.0, 8).unwrap();
        let small = sample_drift(&DriftField::model_radial(0.1, 3).unwrap(), &g).unwrap();
        let big = sample_drift(&DriftField::model_radial(0.15, 3).unwrap(), &g).unwrap();
        let a = weak_formbound_estimate_tol(&small, 1.0, 500, 1e-10).value;
        let b = weak_formbound_estimate_tol(&big, 1.0, 500, 1e-10).value;
        assert!(a <= b + 1e-8);
    }
}
