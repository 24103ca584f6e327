//! Friedrichs-mollified truncations `b_n = gamma_eps * (1_n b)`.
//!
//! `1_n` is the indicator of `{|x| <= n, |b(x)| <= n}` and `gamma` is the
//! exponential bump `exp(1/(|x|^2 - 1))` on the unit ball, normalized to unit
//! mass. For the model field the convolution is radial, so it is computed as a
//! two-dimensional integral on a table of radii and interpolated; other
//! fields use a tensor Gauss–Legendre rule over the mollifier ball.

use std::sync::OnceLock;

use statrs::function::gamma::gamma;

use super::{DriftField, DriftKind, VectorField};
use crate::error::{Error, Result};
use crate::quadrature::{adaptive_gk, GaussLegendre};

pub const DEFAULT_QUADRATURE_ORDER: usize = 64;

/// Relative tolerance for the mollifier normalization constant.
const NORMALIZATION_TOL: f64 = 1e-12;

/// Profile nodes per mollifier radius in the fine segments.
const FINE_NODES_PER_EPS: f64 = 64.0;
/// Profile nodes per mollifier radius where the ball avoids both cuts.
const COARSE_NODES_PER_EPS: f64 = 16.0;

/// Unnormalized bump `exp(1/(rho^2 - 1))` for `rho < 1`, zero otherwise.
pub fn bump(rho: f64) -> f64 {
    let q = rho * rho;
    if q >= 1.0 {
        0.0
    } else {
        (1.0 / (q - 1.0)).exp()
    }
}

/// Surface area of the unit sphere `S^{k-1}` in `R^k`.
pub(crate) fn sphere_area(k: usize) -> f64 {
    let h = k as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / gamma(h)
}

const MAX_CACHED_DIM: usize = 64;

static NORMALIZATION: [OnceLock<std::result::Result<f64, Error>>; MAX_CACHED_DIM] =
    [const { OnceLock::new() }; MAX_CACHED_DIM];

/// Constant `c_d` with `c_d * int_{R^d} bump(|x|) dx = 1`, computed once per
/// dimension by adaptive quadrature.
pub fn mollifier_normalization(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let compute = || -> Result<f64> {
        let (radial, _) = adaptive_gk(
            |t| bump(t) * t.powi(d as i32 - 1),
            0.0,
            1.0,
            NORMALIZATION_TOL,
            0.0,
            2000,
        )?;
        Ok(1.0 / (sphere_area(d) * radial))
    };
    if d <= MAX_CACHED_DIM {
        NORMALIZATION[d - 1].get_or_init(compute).clone()
    } else {
        compute()
    }
}

/// Default radius schedule `eps_n = 1/(n+1)`.
pub fn default_epsilon(n: u32) -> f64 {
    1.0 / (n as f64 + 1.0)
}

/// One uniform piece of the radial table.
#[derive(Debug, Clone)]
struct Segment {
    start: f64,
    step: f64,
    values: Vec<f64>,
}

impl Segment {
    fn end(&self) -> f64 {
        self.start + self.step * (self.values.len() - 1) as f64
    }

    fn interpolate(&self, r: f64) -> f64 {
        let m = self.values.len();
        let t = (r - self.start) / self.step;
        let i = (t.floor() as isize).clamp(1, m as isize - 3) as usize;
        let x = t - i as f64;
        let (p0, p1, p2, p3) = (
            self.values[i - 1],
            self.values[i],
            self.values[i + 1],
            self.values[i + 2],
        );
        // cubic Lagrange through nodes -1, 0, 1, 2
        let w0 = -x * (x - 1.0) * (x - 2.0) / 6.0;
        let w1 = (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0;
        let w2 = -(x + 1.0) * x * (x - 2.0) / 2.0;
        let w3 = (x + 1.0) * x * (x - 1.0) / 6.0;
        w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3
    }
}

/// Tabulated radial component `phi(r)` of a radial mollified drift,
/// `b_n(x) = phi(|x|) x / |x|`.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    segments: Vec<Segment>,
    r_max: f64,
    sup: f64,
}

struct RadialIntegrand {
    c: f64,
    n: f64,
    eps: f64,
    d: usize,
    prefactor: f64,
}

impl RadialIntegrand {
    fn new(c: f64, n: f64, eps: f64, d: usize) -> Result<Self> {
        let norm = mollifier_normalization(d)?;
        Ok(Self {
            c,
            n,
            eps,
            d,
            prefactor: c * sphere_area(d - 1) * norm / eps.powi(d as i32),
        })
    }

    /// phi(r) with the given rule in both variables.
    fn value(&self, r: f64, gl: &GaussLegendre) -> f64 {
        if r <= 0.0 || self.c == 0.0 {
            return 0.0;
        }
        let s_lo = (self.c / self.n).max(r - self.eps).max(0.0);
        let s_hi = self.n.min(r + self.eps);
        if s_lo >= s_hi {
            return 0.0;
        }
        let eps2 = self.eps * self.eps;
        let angular_power = (self.d as f64 - 3.0) / 2.0;
        let outer = gl.integrate(s_lo, s_hi, |s| {
            if s <= 0.0 {
                return 0.0;
            }
            let u0 = ((r * r + s * s - eps2) / (2.0 * r * s)).max(-1.0);
            if u0 >= 1.0 {
                return 0.0;
            }
            let inner = gl.integrate(u0, 1.0, |u| {
                let q = (r * r + s * s - 2.0 * r * s * u).max(0.0);
                let w = if self.d == 3 {
                    1.0
                } else {
                    (1.0 - u * u).max(0.0).powf(angular_power)
                };
                bump(q.sqrt() / self.eps) * u * w
            });
            s.powi(self.d as i32 - 2) * inner
        });
        self.prefactor * outer
    }
}

impl RadialProfile {
    fn build(c: f64, n: f64, eps: f64, d: usize, order: usize) -> Result<Self> {
        let integrand = RadialIntegrand::new(c, n, eps, d)?;
        let gl = GaussLegendre::new(order);
        let r_max = n + eps;
        let fine = eps / FINE_NODES_PER_EPS;
        let coarse = eps / COARSE_NODES_PER_EPS;
        let r_a = (c / n + 4.0 * eps).min(r_max);
        let r_b = (n - 2.0 * eps).max(r_a);

        let mut segments = Vec::new();
        let mut start = 0.0;
        for (end, step) in [(r_a, fine), (r_b, coarse), (r_max, fine)] {
            if end <= start {
                continue;
            }
            let count = ((end - start) / step).ceil().max(3.0) as usize;
            let step = (end - start) / count as f64;
            let values: Vec<f64> = (0..=count)
                .map(|i| integrand.value(start + step * i as f64, &gl))
                .collect();
            segments.push(Segment {
                start,
                step,
                values,
            });
            start = end;
        }

        let sup = segments
            .iter()
            .flat_map(|s| s.values.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));

        // Re-evaluate a spread of nodes with a doubled rule.
        let check = GaussLegendre::new(2 * order);
        let tol = 1e-8 * sup.max(f64::MIN_POSITIVE) + 1e-14;
        for seg in &segments {
            let stride = (seg.values.len() / 16).max(1);
            for (i, &v) in seg.values.iter().enumerate().step_by(stride) {
                let r = seg.start + seg.step * i as f64;
                let refined = integrand.value(r, &check);
                if (refined - v).abs() > tol {
                    return Err(Error::QuadratureFailure(format!(
                        "mollified radial profile at r={r}: order {order} gives {v}, \
                         order {} gives {refined}",
                        2 * order
                    )));
                }
            }
        }

        Ok(Self {
            segments,
            r_max,
            sup,
        })
    }

    /// Radial component at radius `r`.
    pub fn value(&self, r: f64) -> f64 {
        if r >= self.r_max {
            return 0.0;
        }
        for seg in &self.segments {
            if r <= seg.end() {
                return seg.interpolate(r);
            }
        }
        0.0
    }

    pub fn sup(&self) -> f64 {
        self.sup
    }

    pub fn support_radius(&self) -> f64 {
        self.r_max
    }

    pub fn node_count(&self) -> usize {
        self.segments.iter().map(|s| s.values.len()).sum()
    }
}

/// Tensor-product rule on the mollifier ball. The weights are rescaled to
/// sum to one so that constants are reproduced exactly; `raw_mass` keeps the
/// mass before rescaling as an accuracy diagnostic.
#[derive(Debug, Clone)]
struct BallRule {
    points: Vec<f64>,
    weights: Vec<f64>,
    raw_mass: f64,
}

impl BallRule {
    fn new(d: usize, order: usize) -> Result<Self> {
        let norm = mollifier_normalization(d)?;
        let gl = GaussLegendre::new(order);
        let total = order.pow(d as u32);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut z = vec![0.0; d];
        for flat in 0..total {
            let mut rem = flat;
            let mut w = 1.0;
            for zi in z.iter_mut() {
                let k = rem % order;
                rem /= order;
                *zi = gl.nodes[k];
                w *= gl.weights[k];
            }
            let rho = super::norm(&z);
            let g = bump(rho);
            if g > 0.0 {
                points.extend_from_slice(&z);
                weights.push(w * g * norm);
            }
        }
        let raw_mass: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= raw_mass);
        Ok(Self {
            points,
            weights,
            raw_mass,
        })
    }

    fn mass(&self) -> f64 {
        self.raw_mass
    }
}

#[derive(Debug, Clone)]
enum Engine {
    Radial(RadialProfile),
    Ball(BallRule),
}

/// `b_n = gamma_{eps} * (1_n b)`: bounded, smooth, supported in `|x| <= n + eps`.
#[derive(Debug, Clone)]
pub struct MollifiedDrift {
    base: DriftField,
    n: u32,
    epsilon: f64,
    quadrature_order: usize,
    engine: Engine,
}

impl MollifiedDrift {
    /// Regularization at level `n` with the default radius `1/(n+1)`.
    pub fn new(base: DriftField, n: u32) -> Result<Self> {
        let order = match base.kind() {
            DriftKind::ModelRadial { .. } => DEFAULT_QUADRATURE_ORDER,
            _ => 12,
        };
        Self::with_params(base, n, default_epsilon(n), order)
    }

    pub fn with_params(
        base: DriftField,
        n: u32,
        epsilon: f64,
        quadrature_order: usize,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "truncation level n must be positive".into(),
            ));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "mollifier radius must be positive, got {epsilon}"
            )));
        }
        if quadrature_order < 2 {
            return Err(Error::InvalidArgument(
                "quadrature order must be at least 2".into(),
            ));
        }
        let engine = match base.kind() {
            DriftKind::ModelRadial { c } => Engine::Radial(RadialProfile::build(
                *c,
                n as f64,
                epsilon,
                base.dimension(),
                quadrature_order,
            )?),
            _ => Engine::Ball(BallRule::new(base.dimension(), quadrature_order)?),
        };
        Ok(Self {
            base,
            n,
            epsilon,
            quadrature_order,
            engine,
        })
    }

    pub fn base(&self) -> &DriftField {
        &self.base
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn quadrature_order(&self) -> usize {
        self.quadrature_order
    }

    pub fn dimension(&self) -> usize {
        self.base.dimension()
    }

    pub fn radial_profile(&self) -> Option<&RadialProfile> {
        match &self.engine {
            Engine::Radial(p) => Some(p),
            Engine::Ball(_) => None,
        }
    }

    /// Total weight of the ball rule (one, up to quadrature error); `None`
    /// for the radial engine.
    pub fn ball_rule_mass(&self) -> Option<f64> {
        match &self.engine {
            Engine::Ball(rule) => Some(rule.mass()),
            Engine::Radial(_) => None,
        }
    }

    /// Upper bound on `sup |b_n|`.
    pub fn sup_norm(&self) -> f64 {
        match &self.engine {
            Engine::Radial(p) => p.sup(),
            Engine::Ball(_) => {
                let n = self.n as f64;
                self.base.sup_bound().map_or(n, |s| s.min(n))
            }
        }
    }

    pub fn support_radius(&self) -> f64 {
        self.n as f64 + self.epsilon
    }

    /// Writes `b_n(x)`; defined everywhere.
    pub fn eval_at(&self, x: &[f64], out: &mut [f64]) {
        match &self.engine {
            Engine::Radial(p) => {
                let r = super::norm(x);
                if r == 0.0 || r >= p.support_radius() {
                    out.iter_mut().for_each(|o| *o = 0.0);
                    return;
                }
                let scale = p.value(r) / r;
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = scale * xi;
                }
            }
            Engine::Ball(rule) => {
                let d = x.len();
                let n = self.n as f64;
                out.iter_mut().for_each(|o| *o = 0.0);
                if super::norm(x) > n + self.epsilon {
                    return;
                }
                let mut y = vec![0.0; d];
                let mut by = vec![0.0; d];
                for (z, &w) in rule.points.chunks_exact(d).zip(&rule.weights) {
                    for ((yi, &xi), &zi) in y.iter_mut().zip(x).zip(z) {
                        *yi = xi - self.epsilon * zi;
                    }
                    if super::norm(&y) > n || self.base.is_singular_at(&y) {
                        continue;
                    }
                    self.base.eval_unchecked(&y, &mut by);
                    if super::norm(&by) > n {
                        continue;
                    }
                    for (o, &b) in out.iter_mut().zip(&by) {
                        *o += w * b;
                    }
                }
            }
        }
    }

    /// Radial component `x/|x| . b_n(x)` at radius `r` (model field only).
    pub fn radial_value(&self, r: f64) -> Option<f64> {
        self.radial_profile().map(|p| p.value(r))
    }
}

impl VectorField for MollifiedDrift {
    fn dim(&self) -> usize {
        self.base.dimension()
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.dim() || out.len() != self.dim() {
            return Err(Error::InvalidArgument("dimension mismatch".into()));
        }
        self.eval_at(x, out);
        Ok(())
    }

    fn sup_bound(&self) -> Option<f64> {
        Some(self.sup_norm())
    }
}

/// `mollified_eval` under its operational name.
pub fn mollified_eval(m: &MollifiedDrift, x: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; m.dimension()];
    m.eval_into(x, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::SmoothField;

    // 40-digit reference values of 1 / int bump over R^d.
    const NORM3: f64 = 2.267_116_739_608_326_5;
    const NORM4: f64 = 2.611_132_508_627_123_2;

    #[test]
    fn normalization_matches_reference() {
        assert!((mollifier_normalization(3).unwrap() / NORM3 - 1.0).abs() < 1e-10);
        assert!((mollifier_normalization(4).unwrap() / NORM4 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn scaled_mollifier_has_unit_mass() {
        // Independent route: Monte Carlo-free radial Gauss rule on the scaled kernel.
        let norm = mollifier_normalization(3).unwrap();
        for eps in [0.05, 0.5, 3.0] {
            let (radial, _) = adaptive_gk(
                |r| bump(r / eps) * r * r / eps.powi(3),
                0.0,
                eps,
                1e-12,
                0.0,
                2000,
            )
            .unwrap();
            let mass = norm * sphere_area(3) * radial;
            assert!((mass - 1.0).abs() < 1e-6, "eps={eps} mass={mass}");
        }
    }

    #[test]
    fn ball_rule_mass_is_one() {
        let base = DriftField::zero(3).unwrap();
        let m = MollifiedDrift::new(base, 4).unwrap();
        assert!((m.ball_rule_mass().unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn constant_field_inside_truncation_is_reproduced() {
        let v = vec![0.3, -0.2, 0.5];
        let base = DriftField::bounded_smooth(SmoothField::Constant(v.clone()), 3).unwrap();
        let m = MollifiedDrift::new(base, 3).unwrap();
        let out = mollified_eval(&m, &[0.5, 1.0, -0.7]).unwrap();
        for (a, b) in out.iter().zip(&v) {
            assert!((a - b).abs() < 1e-14, "{out:?}");
        }
    }

    #[test]
    fn model_drift_vanishes_outside_support() {
        let base = DriftField::model_radial(0.2, 3).unwrap();
        let m = MollifiedDrift::new(base, 4).unwrap();
        let r = 4.0 + m.epsilon() + 1e-9;
        assert_eq!(mollified_eval(&m, &[r, 0.0, 0.0]).unwrap(), vec![0.0; 3]);
        assert_eq!(mollified_eval(&m, &[0.0; 3]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn radial_profile_agrees_with_ball_rule() {
        // Same field routed through the generic tensor rule.
        let c = 0.7;
        let model = DriftField::model_radial(c, 3).unwrap();
        let radial = MollifiedDrift::new(model, 3).unwrap();
        let custom = crate::drift::CustomField::new("radial", move |x: &[f64], out: &mut [f64]| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            for (o, &xi) in out.iter_mut().zip(x) {
                *o = if r2 > 0.0 { c * xi / r2 } else { 0.0 };
            }
        });
        let generic = DriftField::custom(custom, 3, vec![vec![0.0; 3]]).unwrap();
        let ball = MollifiedDrift::with_params(generic, 3, radial.epsilon(), 40).unwrap();
        for x in [[1.0, 0.0, 0.0], [0.3, 0.2, -0.1], [0.0, 2.9, 0.1]] {
            let a = mollified_eval(&radial, &x).unwrap();
            let b = mollified_eval(&ball, &x).unwrap();
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() < 2e-3 * (1.0 + q.abs()), "{x:?}: {a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn far_from_cuts_the_model_field_is_nearly_unchanged() {
        let base = DriftField::model_radial(0.2, 3).unwrap();
        let m = MollifiedDrift::new(base, 16).unwrap();
        let v = mollified_eval(&m, &[1.0, 0.0, 0.0]).unwrap();
        assert!((v[0] - 0.2).abs() < 1e-3, "{v:?}");
        assert!(v[1].abs() < 1e-15 && v[2].abs() < 1e-15);
    }

    #[test]
    fn profile_interpolation_matches_direct_quadrature() {
        let integrand = RadialIntegrand::new(0.2, 8.0, 1.0 / 9.0, 3).unwrap();
        let m = MollifiedDrift::new(DriftField::model_radial(0.2, 3).unwrap(), 8).unwrap();
        let gl = GaussLegendre::new(96);
        for r in [0.003, 0.031, 0.077, 0.151, 0.6, 2.345, 7.91, 8.05] {
            let direct = integrand.value(r, &gl);
            let interp = m.radial_value(r).unwrap();
            assert!(
                (direct - interp).abs() < 1e-7 * (1.0 + direct.abs()),
                "r={r}: {direct} vs {interp}"
            );
        }
    }

    #[test]
    fn sup_is_bounded_by_truncation_level() {
        for (c, n) in [(0.2, 2u32), (0.2, 16), (3.0, 4), (4.0, 8)] {
            let m = MollifiedDrift::new(DriftField::model_radial(c, 3).unwrap(), n).unwrap();
            assert!(m.sup_norm() <= n as f64 * (1.0 + 1e-9), "c={c} n={n}");
        }
    }

    #[test]
    fn pointwise_convergence_along_the_schedule() {
        let base = DriftField::model_radial(0.2, 3).unwrap();
        let x = [0.3, 0.1, 0.0];
        let exact = base.eval(&x).unwrap();
        let mut prev = f64::INFINITY;
        for n in [2u32, 4, 8, 16, 32] {
            let m = MollifiedDrift::new(base.clone(), n).unwrap();
            let v = mollified_eval(&m, &x).unwrap();
            let err = super::super::dist(&v, &exact);
            assert!(err < prev, "n={n}: {err} !< {prev}");
            prev = err;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn zero_level_is_rejected() {
        let base = DriftField::model_radial(0.2, 3).unwrap();
        assert!(MollifiedDrift::new(base, 0).is_err());
    }
}
