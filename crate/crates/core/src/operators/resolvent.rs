//! The factorized resolvent
//!
//! ```text
//! (zeta + Lambda(b))^{-1} f = R f - R^{1/2 + 1/2q} Q (1 + T)^{-1} G R^{1/2r'} f
//! ```
//!
//! with `R = (zeta - Delta)^{-1}`, `Q = R^{1/2 - 1/2q} |b|^{1/p'}`,
//! `G = b^{1/p} . grad R^{1/2 + 1/2r}` and `T = b^{1/p} . grad R |b|^{1/p'}`,
//! where `Lambda(b) = -Delta + b . grad` and `b^{1/p} = |b|^{1/p - 1} b`.

use rustfft::num_complex::Complex64;

use super::grid::GridFunction;
use super::power::{power_iteration, start_vector, PowerEstimate, DEFAULT_POWER_TOL};
use super::spectral::{gradient, gradient_adjoint, pointwise_dot, pointwise_outer, resolvent_power};
use crate::drift::{kappa, m_d_constant};
use crate::error::{Error, Result};

pub const NEUMANN_TAIL_TOL: f64 = 1e-10;
const NEUMANN_MAX_TERMS: usize = 2000;

/// Pieces of the factorization for a fixed drift sample and spectral point.
#[derive(Debug, Clone)]
pub struct OperatorBundle {
    zeta: Complex64,
    lambda: f64,
    p: f64,
    q: f64,
    r: f64,
    /// `|b|^{1/p'}`.
    b_left: Vec<f64>,
    /// `b^{1/p}` as a vector function.
    b_right: GridFunction,
}

impl OperatorBundle {
    /// Requires `Re zeta >= kappa_d lambda` and `1 <= r < p < q`.
    pub fn new(b: &GridFunction, zeta: Complex64, lambda: f64, p: f64, q: f64, r: f64) -> Result<Self> {
        let d = b.grid().dim();
        if b.comps() != d {
            return Err(Error::InvalidArgument("drift must be a d-vector field".into()));
        }
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
        let corner = kappa(d) * lambda;
        if zeta.re < corner * (1.0 - 1e-14) {
            return Err(Error::InvalidArgument(format!(
                "Re zeta = {} lies left of kappa_d lambda = {corner}",
                zeta.re
            )));
        }
        if !(1.0 <= r && r < p && p < q) {
            return Err(Error::InvalidArgument(format!(
                "exponents must satisfy 1 <= r < p < q, got r={r} p={p} q={q}"
            )));
        }
        let mag = b.magnitude();
        let p_dual = p / (p - 1.0);
        let b_left: Vec<f64> = mag.iter().map(|&m| m.powf(1.0 / p_dual)).collect();
        let scale: Vec<f64> = mag
            .iter()
            .map(|&m| if m == 0.0 { 0.0 } else { m.powf(1.0 / p - 1.0) })
            .collect();
        Ok(Self {
            zeta,
            lambda,
            p,
            q,
            r,
            b_left,
            b_right: b.weighted(&scale),
        })
    }

    /// Default exponents `p = 2, q = 3, r = 3/2` at `zeta = kappa_d lambda`.
    pub fn at_corner(b: &GridFunction, lambda: f64) -> Result<Self> {
        let z = kappa(b.grid().dim()) * lambda;
        Self::new(b, Complex64::new(z, 0.0), lambda, 2.0, 3.0, 1.5)
    }

    pub fn zeta(&self) -> Complex64 {
        self.zeta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn exponents(&self) -> (f64, f64, f64) {
        (self.p, self.q, self.r)
    }

    /// `c_p = p p' / 4`.
    pub fn c_p(&self) -> f64 {
        self.p * self.p / (self.p - 1.0) / 4.0
    }

    pub fn is_zero(&self) -> bool {
        self.b_left.iter().all(|&v| v == 0.0)
    }

    /// `Q h = R^{1/2 - 1/2q} |b|^{1/p'} h`.
    pub fn q_apply(&self, h: &GridFunction) -> GridFunction {
        resolvent_power(&h.weighted(&self.b_left), 0.5 - 0.5 / self.q, self.zeta)
    }

    /// `G h = b^{1/p} . grad R^{1/2 + 1/2r} h`.
    pub fn g_apply(&self, h: &GridFunction) -> GridFunction {
        let rh = resolvent_power(h, 0.5 + 0.5 / self.r, self.zeta);
        pointwise_dot(&self.b_right, &gradient(&rh))
    }

    /// `T h = b^{1/p} . grad R |b|^{1/p'} h`.
    pub fn t_apply(&self, h: &GridFunction) -> GridFunction {
        let rh = resolvent_power(&h.weighted(&self.b_left), 1.0, self.zeta);
        pointwise_dot(&self.b_right, &gradient(&rh))
    }

    /// `T* g = |b|^{1/p'} R(conj zeta) grad* (b^{1/p} g)`; the drift is real.
    pub fn t_adjoint_apply(&self, g: &GridFunction) -> GridFunction {
        let div = gradient_adjoint(&pointwise_outer(&self.b_right, g));
        resolvent_power(&div, 1.0, self.zeta.conj()).weighted(&self.b_left)
    }
}

/// `T h` for an arbitrary bundle.
pub fn t_operator_apply(bundle: &OperatorBundle, h: &GridFunction) -> GridFunction {
    bundle.t_apply(h)
}

/// `||T||_{2->2}` by power iteration on `T*T`. Only meaningful for `p = 2`.
pub fn t_norm_estimate(bundle: &OperatorBundle, iters: usize) -> Result<PowerEstimate> {
    t_norm_estimate_tol(bundle, iters, DEFAULT_POWER_TOL)
}

pub fn t_norm_estimate_tol(bundle: &OperatorBundle, iters: usize, tol: f64) -> Result<PowerEstimate> {
    if bundle.p != 2.0 {
        return Err(Error::InvalidArgument(format!(
            "2->2 norm certification needs p = 2, got p = {}",
            bundle.p
        )));
    }
    let template = GridFunction::zeros(*bundle.b_right.grid(), 1);
    let est = power_iteration(
        |h| bundle.t_adjoint_apply(&bundle.t_apply(h)),
        start_vector(&template),
        tol,
        iters,
    );
    Ok(PowerEstimate {
        value: est.value.max(0.0).sqrt(),
        ..est
    })
}

/// Certified bound `m_d c_p delta` on `||T_p||`.
pub fn t_norm_bound(d: usize, c_p: f64, delta: f64) -> Result<f64> {
    Ok(m_d_constant(d)? * c_p * delta)
}

#[derive(Debug, Clone)]
pub struct FactorizedResolvent {
    pub u: GridFunction,
    /// Number of Neumann terms summed.
    pub terms: usize,
    /// Largest observed ratio `||T^{k+1} g|| / ||T^k g||`.
    pub observed_ratio: f64,
    /// Power-iteration estimate of `||T||` when `p = 2`.
    pub t_norm: Option<f64>,
}

/// Evaluates the factorized resolvent; the Neumann series for `(1+T)^{-1}`
/// is summed until the last term is `1e-10` of the partial sum.
pub fn factorized_resolvent(bundle: &OperatorBundle, f: &GridFunction) -> Result<FactorizedResolvent> {
    factorized_resolvent_tol(bundle, f, NEUMANN_TAIL_TOL)
}

pub fn factorized_resolvent_tol(
    bundle: &OperatorBundle,
    f: &GridFunction,
    tail_tol: f64,
) -> Result<FactorizedResolvent> {
    if f.comps() != 1 {
        return Err(Error::InvalidArgument("resolvent input must be scalar".into()));
    }
    let zeta = bundle.zeta;
    let free = resolvent_power(f, 1.0, zeta);
    if bundle.is_zero() {
        return Ok(FactorizedResolvent {
            u: free,
            terms: 0,
            observed_ratio: 0.0,
            t_norm: Some(0.0),
        });
    }
    let t_norm = if bundle.p == 2.0 {
        let est = t_norm_estimate(bundle, 1000)?;
        if est.value >= 1.0 {
            return Err(Error::SeriesDivergence(est.value));
        }
        Some(est.value)
    } else {
        None
    };
    let r_dual = bundle.r / (bundle.r - 1.0);
    let g = bundle.g_apply(&resolvent_power(f, 0.5 / r_dual, zeta));
    let mut sum = g.clone();
    let mut term = g;
    let mut prev_norm = term.norm_l2();
    let mut ratio = 0.0f64;
    let mut terms = 1;
    while prev_norm > tail_tol * sum.norm_l2() {
        if terms >= NEUMANN_MAX_TERMS {
            return Err(Error::SeriesDivergence(ratio));
        }
        term = bundle.t_apply(&term).scale(Complex64::new(-1.0, 0.0));
        let nrm = term.norm_l2();
        ratio = ratio.max(nrm / prev_norm);
        if terms >= 8 && nrm >= prev_norm {
            return Err(Error::SeriesDivergence(nrm / prev_norm));
        }
        sum = sum.add(&term);
        prev_norm = nrm;
        terms += 1;
    }
    let correction = resolvent_power(&bundle.q_apply(&sum), 0.5 + 0.5 / bundle.q, zeta);
    Ok(FactorizedResolvent {
        u: free.sub(&correction),
        terms,
        observed_ratio: ratio,
        t_norm,
    })
}

/// `I_s = ]2/(1 + sqrt(1 - m_d delta)), 2/(1 - sqrt(1 - m_d delta))[` and its
/// part above `d - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentInterval {
    pub p_lo: f64,
    pub p_hi: f64,
    /// `]d-1, p_hi[` (clipped below by `p_lo`) when nonempty.
    pub window: Option<(f64, f64)>,
}

impl ExponentInterval {
    pub fn require_window(&self, d: usize) -> Result<(f64, f64)> {
        self.window.ok_or(Error::NoSobolevWindow {
            d_minus_one: d as f64 - 1.0,
            p_hi: self.p_hi,
        })
    }
}

pub fn i_s_interval(delta: f64, d: usize) -> Result<ExponentInterval> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be nonnegative, got {delta}")));
    }
    let md = m_d_constant(d)? * delta;
    if md >= 1.0 {
        return Err(Error::EmptyInterval(md));
    }
    let s = (1.0 - md).sqrt();
    let p_lo = 2.0 / (1.0 + s);
    let p_hi = if s == 1.0 { f64::INFINITY } else { 2.0 / (1.0 - s) };
    let lo = (d as f64 - 1.0).max(p_lo);
    let window = (p_hi > lo).then_some((lo, p_hi));
    Ok(ExponentInterval { p_lo, p_hi, window })
}
