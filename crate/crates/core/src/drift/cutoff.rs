//! Smooth radial cutoffs `xi_k(y) = upsilon(|y| + 1 - k)` for `|y| >= k`, one inside.

use super::check_dim;
use crate::error::Result;
use crate::quadrature::{adaptive_gk, GaussLegendre};

const PROFILE_RULE_ORDER: usize = 48;
const BOUND_SAMPLES: usize = 20_000;

/// Transition bump on (1, 2).
fn psi(t: f64) -> f64 {
    if t <= 1.0 || t >= 2.0 {
        0.0
    } else {
        (-1.0 / ((t - 1.0) * (2.0 - t))).exp()
    }
}

fn psi_prime(t: f64) -> f64 {
    if t <= 1.0 || t >= 2.0 {
        0.0
    } else {
        let a = t - 1.0;
        let b = 2.0 - t;
        psi(t) * (b - a) / (a * a * b * b)
    }
}

/// `upsilon(s) = int_s^2 psi / int_1^2 psi`: one on [0,1], zero on [2, inf).
#[derive(Debug, Clone)]
pub struct Upsilon {
    mass: f64,
    rule: GaussLegendre,
}

impl Upsilon {
    pub fn new() -> Result<Self> {
        let (mass, _) = adaptive_gk(psi, 1.0, 2.0, 1e-13, 0.0, 500)?;
        Ok(Self {
            mass,
            rule: GaussLegendre::new(PROFILE_RULE_ORDER),
        })
    }

    pub fn value(&self, s: f64) -> f64 {
        if s <= 1.0 {
            1.0
        } else if s >= 2.0 {
            0.0
        } else {
            self.rule.integrate(s, 2.0, psi) / self.mass
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        -psi(s) / self.mass
    }

    pub fn second_derivative(&self, s: f64) -> f64 {
        -psi_prime(s) / self.mass
    }
}

/// Cutoff `xi_k` in dimension `d` with its k-uniform derivative bounds.
#[derive(Debug, Clone)]
pub struct Cutoff {
    pub k: f64,
    pub d: usize,
    upsilon: Upsilon,
    /// `sup |grad xi_k|`.
    pub alpha: f64,
    /// `sup_{k >= 1} sup |Laplacian xi_k|`.
    pub beta: f64,
}

impl Cutoff {
    pub fn new(k: f64, d: usize) -> Result<Self> {
        check_dim(d)?;
        if !(k >= 1.0 && k.is_finite()) {
            return Err(crate::Error::InvalidArgument(format!(
                "cutoff radius k must be at least 1, got {k}"
            )));
        }
        let upsilon = Upsilon::new()?;
        let (alpha, beta) = derivative_bounds(&upsilon, d);
        Ok(Self {
            k,
            d,
            upsilon,
            alpha,
            beta,
        })
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let r = super::norm(y);
        if r < self.k {
            1.0
        } else {
            self.upsilon.value(r + 1.0 - self.k)
        }
    }

    /// Gradient written into `out`.
    pub fn gradient(&self, y: &[f64], out: &mut [f64]) {
        let r = super::norm(y);
        if r < self.k {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let g = self.upsilon.derivative(r + 1.0 - self.k) / r;
        for (o, &yi) in out.iter_mut().zip(y) {
            *o = g * yi;
        }
    }

    pub fn laplacian(&self, y: &[f64]) -> f64 {
        let r = super::norm(y);
        if r < self.k {
            return 0.0;
        }
        let s = r + 1.0 - self.k;
        self.upsilon.second_derivative(s)
            + self.upsilon.derivative(s) * (self.d as f64 - 1.0) / r
    }

    /// Dense-sampled `sup |Laplacian xi_k|` for this particular `k`.
    pub fn laplacian_sup(&self) -> f64 {
        (1..BOUND_SAMPLES)
            .map(|i| 1.0 + i as f64 / BOUND_SAMPLES as f64)
            .map(|s| {
                (self.upsilon.second_derivative(s)
                    + self.upsilon.derivative(s) * (self.d as f64 - 1.0) / (s + self.k - 1.0))
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Sup norms of the cutoff derivatives, sampled on (1, 2).
///
/// `|grad xi_k| = |upsilon'|` does not see `k`. The Laplacian carries a
/// `(d-1)/|y|` term; since `|y| >= k >= 1` on the transition shell, the
/// bound is the larger of the `k = 1` and `k -> inf` extremes.
pub fn derivative_bounds(upsilon: &Upsilon, d: usize) -> (f64, f64) {
    let mut alpha = 0.0f64;
    let mut beta = 0.0f64;
    for i in 1..BOUND_SAMPLES {
        let s = 1.0 + i as f64 / BOUND_SAMPLES as f64;
        let u1 = upsilon.derivative(s);
        let u2 = upsilon.second_derivative(s);
        alpha = alpha.max(u1.abs());
        beta = beta.max(u2.abs()).max((u2 + u1 * (d as f64 - 1.0) / s).abs());
    }
    (alpha, beta)
}

impl Cutoff {
    /// `(alpha, beta)`.
    pub fn derivative_bounds(&self) -> (f64, f64) {
        (self.alpha, self.beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn plateau_and_support() {
        let cut = Cutoff::new(4.0, 3).unwrap();
        assert_eq!(cut.value(&[2.0, 0.0, 0.0]), 1.0);
        assert_eq!(cut.value(&[0.0, 6.0, 0.0]), 0.0);
        assert_eq!(cut.value(&[0.0, 0.0, 5.0]), 0.0);
    }

    #[test]
    fn profile_is_continuous_at_the_ends() {
        let u = Upsilon::new().unwrap();
        assert!((u.value(1.0 + 1e-9) - 1.0).abs() < 1e-12);
        assert!(u.value(2.0 - 1e-9).abs() < 1e-12);
        assert!((u.value(1.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn alpha_does_not_depend_on_k() {
        let a = Cutoff::new(5.0, 3).unwrap();
        let b = Cutoff::new(50.0, 3).unwrap();
        assert_eq!(a.alpha, b.alpha);
        assert_eq!(a.beta, b.beta);
        assert!(a.laplacian_sup() <= a.beta * (1.0 + 1e-12));
        assert!(b.laplacian_sup() <= b.beta * (1.0 + 1e-12));
        assert!(Cutoff::new(1.0, 3).unwrap().laplacian_sup() <= a.beta * (1.0 + 1e-12));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let cut = Cutoff::new(2.0, 3).unwrap();
        let y = [1.7, 0.9, -0.4];
        let h = 1e-4;
        let mut g = [0.0; 3];
        cut.gradient(&y, &mut g);
        let mut lap = 0.0;
        for i in 0..3 {
            let mut p = y;
            let mut m = y;
            p[i] += h;
            m[i] -= h;
            let fd = (cut.value(&p) - cut.value(&m)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6, "component {i}: {fd} vs {}", g[i]);
            lap += (cut.value(&p) - 2.0 * cut.value(&y) + cut.value(&m)) / (h * h);
        }
        assert!((lap - cut.laplacian(&y)).abs() < 1e-4, "{lap} vs {}", cut.laplacian(&y));
    }

    proptest! {
        #[test]
        fn sandwiched_between_indicators(k in 1.0f64..20.0, r in 0.0f64..30.0) {
            let cut = Cutoff::new(k, 3).unwrap();
            let v = cut.value(&[r, 0.0, 0.0]);
            let lower = if r < k { 1.0 } else { 0.0 };
            let upper = if r < k + 1.0 { 1.0 } else { 0.0 };
            prop_assert!(lower <= v + 1e-15 && v <= upper + 1e-15);
            prop_assert!((0.0..=1.0 + 1e-15).contains(&v));
        }
    }
}
