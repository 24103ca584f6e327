//! Fourier-multiplier calculus on a periodic grid.
//!
//! All multipliers act on the continuous symbol `|xi|^2` restricted to the
//! discrete dual lattice `xi = pi m / L`, so they commute exactly and
//! `(lambda - Delta)^{-s}` composes to machine precision. The box replaces
//! `R^d`, which makes every constant here grid dependent; reports carry
//! `(L, N)` so refinement is visible.

pub mod gmres;
mod grid;
mod norms;
mod power;
mod resolvent;
mod spectral;
mod weights;

pub use grid::{sample_drift, sample_field, sample_mollified, Grid, GridFunction};
pub use norms::{
    duality_check, formbound_estimate, formbound_estimate_tol, weak_formbound_estimate,
    weak_formbound_estimate_tol, DualityCheck,
};
pub use power::{power_iteration, start_vector, PowerEstimate, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL};
pub use resolvent::{
    factorized_resolvent, factorized_resolvent_tol, i_s_interval, t_norm_bound, t_norm_estimate,
    t_norm_estimate_tol, t_operator_apply, ExponentInterval, FactorizedResolvent, OperatorBundle,
    NEUMANN_TAIL_TOL,
};
pub use spectral::{
    apply_multiplier, bessel_apply, fd_resolvent, gradient, gradient_adjoint, neg_laplacian,
    pointwise_dot, pointwise_outer, resolvent_power,
};
pub use weights::{
    commutator_identity_residual, free_resolvent_p_to_inf, weight_bound_check,
    weighted_estimate_report, WeightBoundCheck, WeightSpec, WeightedReport, WeightedRow,
    GROWTH_SLOPE_TOL,
};

pub use rustfft::num_complex::Complex64;

/// One line of an operator report.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorRow {
    pub operator: String,
    pub l: f64,
    pub n: usize,
    pub lambda_or_zeta: f64,
    pub estimate: f64,
    pub bound: f64,
    pub pass: bool,
}

impl OperatorRow {
    pub const CSV_HEADER: &'static str = "operator,L,N,lambda_or_zeta,estimate,bound,pass";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.12e},{:.12e},{}",
            self.operator, self.l, self.n, self.lambda_or_zeta, self.estimate, self.bound, self.pass
        )
    }
}
