//! Weights `rho(y) = (1 + l|y|^2)^{-nu}` and the weighted resolvent estimates.

use rustfft::num_complex::Complex64;

use super::grid::{Grid, GridFunction};
use super::spectral::{bessel_apply, gradient, pointwise_dot};
use crate::error::{Error, Result};
use crate::semigroup::{resolvent_direct, Boundary, Discretization};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSpec {
    pub l: f64,
    pub nu: f64,
}

impl WeightSpec {
    pub fn new(l: f64, nu: f64) -> Result<Self> {
        if !(l > 0.0 && nu > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weight needs l > 0 and nu > 0, got l={l} nu={nu}"
            )));
        }
        Ok(Self { l, nu })
    }

    /// Checks `nu > d/(2p) + 1`.
    pub fn admissible_for(&self, d: usize, p: f64) -> bool {
        self.nu > d as f64 / (2.0 * p) + 1.0
    }

    pub fn rho(&self, y: &[f64]) -> f64 {
        let r2: f64 = y.iter().map(|v| v * v).sum();
        (1.0 + self.l * r2).powf(-self.nu)
    }

    /// `grad rho = -2 nu l y (1 + l|y|^2)^{-nu-1}`.
    pub fn grad_rho(&self, y: &[f64], out: &mut [f64]) {
        let r2: f64 = y.iter().map(|v| v * v).sum();
        let g = -2.0 * self.nu * self.l * (1.0 + self.l * r2).powf(-self.nu - 1.0);
        for (o, &yi) in out.iter_mut().zip(y) {
            *o = g * yi;
        }
    }

    /// `Delta rho = rho [4 nu (nu+1) l^2 |y|^2 / q^2 - 2 nu d l / q]`, `q = 1 + l|y|^2`.
    pub fn laplacian_rho(&self, y: &[f64]) -> f64 {
        let r2: f64 = y.iter().map(|v| v * v).sum();
        let q = 1.0 + self.l * r2;
        let (nu, l, d) = (self.nu, self.l, y.len() as f64);
        q.powf(-nu) * (4.0 * nu * (nu + 1.0) * l * l * r2 / (q * q) - 2.0 * nu * d * l / q)
    }

    pub fn sample(&self, grid: &Grid) -> GridFunction {
        GridFunction::scalar_fn(*grid, |y| self.rho(y))
    }
}

/// Worst sampled ratios `|grad rho|/rho` and `|Delta rho|/rho` against the
/// bounds `nu sqrt(l)` and `2 nu (2 nu + d + 2) l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightBoundCheck {
    pub grad_ratio: f64,
    pub grad_bound: f64,
    pub lap_ratio: f64,
    pub lap_bound: f64,
}

impl WeightBoundCheck {
    pub fn holds(&self) -> bool {
        self.grad_ratio <= self.grad_bound && self.lap_ratio <= self.lap_bound
    }
}

pub fn weight_bound_check(w: &WeightSpec, grid: &Grid) -> WeightBoundCheck {
    let d = grid.dim();
    let mut y = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut grad_ratio = 0.0f64;
    let mut lap_ratio = 0.0f64;
    for i in 0..grid.len() {
        grid.point_into(i, &mut y);
        let rho = w.rho(&y);
        w.grad_rho(&y, &mut g);
        grad_ratio = grad_ratio.max(crate::drift::norm(&g) / rho);
        lap_ratio = lap_ratio.max(w.laplacian_rho(&y).abs() / rho);
    }
    WeightBoundCheck {
        grad_ratio,
        grad_bound: w.nu * w.l.sqrt(),
        lap_ratio,
        lap_bound: 2.0 * w.nu * (2.0 * w.nu + d as f64 + 2.0) * w.l,
    }
}

/// Relative residual of
///
/// ```text
/// rho u + R((Delta rho) u) + 2 R(grad rho . grad u) - R(rho f) = 0,  u = R f,
/// ```
///
/// with `R = (mu - Delta)^{-1}`, every piece assembled spectrally.
pub fn commutator_identity_residual(w: &WeightSpec, mu: f64, f: &GridFunction) -> f64 {
    let grid = *f.grid();
    let d = grid.dim();
    let u = bessel_apply(f, 1.0, mu);
    let rho = w.sample(&grid);
    let mut grad = GridFunction::zeros(grid, d);
    let mut lap = vec![0.0; grid.len()];
    let mut y = vec![0.0; d];
    let mut g = vec![0.0; d];
    let n = grid.len();
    for i in 0..n {
        grid.point_into(i, &mut y);
        w.grad_rho(&y, &mut g);
        for k in 0..d {
            grad.values_mut()[k * n + i] = Complex64::new(g[k], 0.0);
        }
        lap[i] = w.laplacian_rho(&y);
    }
    let rho_re = rho.real_parts();
    let term1 = u.weighted(&rho_re);
    let term2 = bessel_apply(&u.weighted(&lap), 1.0, mu);
    let term3 = bessel_apply(&pointwise_dot(&grad, &gradient(&u)), 1.0, mu).scale(Complex64::new(2.0, 0.0));
    let term4 = bessel_apply(&f.weighted(&rho_re), 1.0, mu);
    let res = term1.add(&term2).add(&term3).sub(&term4);
    res.norm_l2() / term1.norm_l2().max(term4.norm_l2())
}

/// Fitted constants for one level `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedRow {
    pub n: u32,
    /// `max_h ||rho u||_inf / ||rho h||_p`, `u = (mu + Lambda(b_n))^{-1} h`.
    pub k1: f64,
    /// `max_h ||rho (mu + Lambda(b_n))^{-1} |b_m| h||_inf / |||b_m|^{1/p} rho h||_p`.
    pub k2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedReport {
    pub rows: Vec<WeightedRow>,
    pub k1_fit: f64,
    pub k2_fit: f64,
    /// Least-squares slopes of `log K` against `log n`.
    pub k1_slope: f64,
    pub k2_slope: f64,
    pub l_used: f64,
    pub pass: bool,
}

/// Growth exponent above which a `K` column counts as trending upward.
pub const GROWTH_SLOPE_TOL: f64 = 0.1;

impl WeightedReport {
    pub const CSV_HEADER: &'static str = "n,K1,K2";

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| format!("{},{:.12e},{:.12e}", r.n, r.k1, r.k2))
            .collect()
    }
}

fn loglog_slope(ns: &[u32], ks: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = ks.iter().map(|k| k.max(f64::MIN_POSITIVE).ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Ratios for the weighted estimates over a sample set, for each sampled
/// drift in `drifts` (one per level `n`, with `m = n`). The resolvent is the
/// periodic upwind solve of [`resolvent_direct`].
pub fn weighted_estimate_report(
    drifts: &[(u32, GridFunction)],
    mu: f64,
    p: f64,
    weight: &WeightSpec,
    sample_h: &[GridFunction],
) -> Result<WeightedReport> {
    let Some((_, first)) = drifts.first() else {
        return Err(Error::InvalidArgument("no drift levels given".into()));
    };
    let grid = *first.grid();
    let d = grid.dim();
    if !weight.admissible_for(d, p) {
        return Err(Error::InvalidArgument(format!(
            "nu = {} must exceed d/(2p) + 1 = {}",
            weight.nu,
            d as f64 / (2.0 * p) + 1.0
        )));
    }
    let rho = weight.sample(&grid).real_parts();
    let zeta = Complex64::new(mu, 0.0);
    let mut rows = Vec::with_capacity(drifts.len());
    for (n, b) in drifts {
        let mag = b.magnitude();
        let mag_p: Vec<f64> = mag.iter().map(|m| m.powf(1.0 / p)).collect();
        let mut k1 = 0.0f64;
        let mut k2 = 0.0f64;
        for h in sample_h {
            let u = resolvent_direct(b, zeta, h, Boundary::Periodic, Discretization::Upwind)?.u;
            k1 = k1.max(u.weighted(&rho).sup_norm() / h.weighted(&rho).norm_lp(p));
            let bh = h.weighted(&mag);
            let v = resolvent_direct(b, zeta, &bh, Boundary::Periodic, Discretization::Upwind)?.u;
            let denom = h.weighted(&rho).weighted(&mag_p).norm_lp(p);
            if denom > 0.0 {
                k2 = k2.max(v.weighted(&rho).sup_norm() / denom);
            }
        }
        rows.push(WeightedRow { n: *n, k1, k2 });
    }
    let ns: Vec<u32> = rows.iter().map(|r| r.n).collect();
    let k1s: Vec<f64> = rows.iter().map(|r| r.k1).collect();
    let k2s: Vec<f64> = rows.iter().map(|r| r.k2).collect();
    let k1_slope = loglog_slope(&ns, &k1s);
    let k2_slope = loglog_slope(&ns, &k2s);
    Ok(WeightedReport {
        k1_fit: k1s.iter().fold(0.0, |a, &b| a.max(b)),
        k2_fit: k2s.iter().fold(0.0, |a, &b| a.max(b)),
        k1_slope,
        k2_slope,
        l_used: weight.l,
        pass: k1_slope <= GROWTH_SLOPE_TOL && k2_slope <= GROWTH_SLOPE_TOL,
        rows,
    })
}

/// `(sum_x |G(x)|^{p'} h^d)^{1/p'}` for the upwind free resolvent kernel
/// `G = (mu - Delta_h)^{-1} delta_0`: by Hölder, the grid `p -> inf` norm.
pub fn free_resolvent_p_to_inf(grid: &Grid, mu: f64, p: f64) -> Result<f64> {
    let origin = grid
        .nearest_index(&vec![0.0; grid.dim()])
        .ok_or_else(|| Error::InvalidArgument("origin outside grid".into()))?;
    let mut delta = GridFunction::zeros(*grid, 1);
    delta.values_mut()[origin] = Complex64::new(1.0 / grid.cell_volume(), 0.0);
    let zero = GridFunction::zeros(*grid, grid.dim());
    let k = resolvent_direct(&zero, Complex64::new(mu, 0.0), &delta, Boundary::Periodic, Discretization::Upwind)?.u;
    let p_dual = p / (p - 1.0);
    Ok(k.norm_lp(p_dual))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_bounds_hold_on_grid() {
        let g = Grid::new(3, 16.0, 32).unwrap();
        for l in [1e-2, 1e-3, 0.5] {
            let chk = weight_bound_check(&WeightSpec::new(l, 2.0).unwrap(), &g);
            assert!(chk.holds(), "{chk:?}");
        }
    }

    #[test]
    fn weight_derivatives_match_finite_differences() {
        let w = WeightSpec::new(0.3, 1.7).unwrap();
        let y = [0.4, -1.1, 0.8];
        let h = 1e-4;
        let mut g = [0.0; 3];
        w.grad_rho(&y, &mut g);
        let mut lap = 0.0;
        for k in 0..3 {
            let mut p = y;
            let mut m = y;
            p[k] += h;
            m[k] -= h;
            assert!(((w.rho(&p) - w.rho(&m)) / (2.0 * h) - g[k]).abs() < 1e-8);
            lap += (w.rho(&p) - 2.0 * w.rho(&y) + w.rho(&m)) / (h * h);
        }
        assert!((lap - w.laplacian_rho(&y)).abs() < 1e-5);
    }

    #[test]
    fn zero_drift_k1_bounded_by_free_kernel() {
        let g = Grid::new(3, 4.0, 16).unwrap();
        let w = WeightSpec::new(1e-9, 2.0).unwrap();
        let p = 4.0;
        let mu = 1.5;
        let hs = vec![
            GridFunction::scalar_fn(g, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp()),
            GridFunction::scalar_fn(g, |x| if x[0].abs() < 1.0 { 1.0 } else { 0.0 }),
        ];
        let rep = weighted_estimate_report(&[(1, GridFunction::zeros(g, 3))], mu, p, &w, &hs).unwrap();
        let bound = free_resolvent_p_to_inf(&g, mu, p).unwrap();
        assert!(rep.k1_fit <= bound * (1.0 + 1e-6), "{} vs {bound}", rep.k1_fit);
    }
}
