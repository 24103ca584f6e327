//! Grid approximation of `e^{-t Lambda(b_n)}`, i.e. of `u_t = Delta u - b_n . grad u`.
//!
//! The generator is discretized as a Markov-chain generator: centred second
//! differences for `Delta` and first-order upwinding for the transport term
//! with velocity `-b_n`. Every off-diagonal weight is nonnegative, so the
//! implicit step is an M-matrix and Gauss–Seidel sweeps preserve positivity
//! and the maximum principle at every iterate.

mod feller;

use rustfft::num_complex::Complex64;

use crate::drift::MollifiedDrift;
use crate::error::{Error, Result};
use crate::operators::gmres::{gmres, GmresOptions};
use crate::operators::{
    fd_resolvent, gradient, pointwise_dot, resolvent_power, sample_mollified, Grid, GridFunction,
};

pub use feller::{feller_convergence_report, FellerReport, FellerRow};

const GS_TOL: f64 = 1e-13;
const GS_MAX_SWEEPS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Backward Euler in time with the upwind generator.
    ImplicitUpwind,
    /// Two-stage strong-stability-preserving Runge–Kutta, explicit.
    ExplicitRk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    /// `u = 0` on the faces `x_k = -L` (which, under the periodic index
    /// identification, surround the box).
    Absorbing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    pub grid: Grid,
    pub dt: f64,
    pub scheme: Scheme,
    pub boundary: Boundary,
}

impl EvolutionConfig {
    pub fn implicit(grid: Grid, dt: f64, boundary: Boundary) -> Self {
        Self {
            grid,
            dt,
            scheme: Scheme::ImplicitUpwind,
            boundary,
        }
    }
}

/// Upwind Markov generator `L_h` for `Delta - b . grad`.
#[derive(Debug, Clone)]
pub struct UpwindGenerator {
    grid: Grid,
    boundary: Boundary,
    /// Per point: `2d` rates, ordered (axis 0 forward, axis 0 backward, ...).
    rates: Vec<f64>,
    /// Per point: total outflow rate.
    out_rate: Vec<f64>,
    /// Per point: neighbour indices in the same order as `rates`.
    neighbours: Vec<usize>,
    fixed: Vec<bool>,
}

impl UpwindGenerator {
    pub fn new(drift: &GridFunction, boundary: Boundary) -> Result<Self> {
        let grid = *drift.grid();
        let d = grid.dim();
        if drift.comps() != d {
            return Err(Error::InvalidArgument("drift must be a d-vector field".into()));
        }
        let n = grid.len();
        let h = grid.spacing();
        let diff = 1.0 / (h * h);
        let mut rates = vec![0.0; 2 * d * n];
        let mut neighbours = vec![0; 2 * d * n];
        let mut out_rate = vec![0.0; n];
        for i in 0..n {
            let mut total = 0.0;
            for k in 0..d {
                // Velocity of the chain is -b.
                let a = -drift.component(k)[i].re;
                let fwd = diff + a.max(0.0) / h;
                let bwd = diff + (-a).max(0.0) / h;
                rates[2 * d * i + 2 * k] = fwd;
                rates[2 * d * i + 2 * k + 1] = bwd;
                neighbours[2 * d * i + 2 * k] = grid.shift(i, k, true);
                neighbours[2 * d * i + 2 * k + 1] = grid.shift(i, k, false);
                total += fwd + bwd;
            }
            out_rate[i] = total;
        }
        let fixed = (0..n)
            .map(|i| boundary == Boundary::Absorbing && grid.on_boundary(i))
            .collect();
        Ok(Self {
            grid,
            boundary,
            rates,
            out_rate,
            neighbours,
            fixed,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn max_out_rate(&self) -> f64 {
        self.out_rate.iter().fold(0.0, |m, &v| m.max(v))
    }

    /// `(L_h u)_i`, zero on fixed boundary nodes.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let m = 2 * self.grid.dim();
        for i in 0..u.len() {
            if self.fixed[i] {
                out[i] = 0.0;
                continue;
            }
            let mut s = -self.out_rate[i] * u[i];
            for j in 0..m {
                s += self.rates[m * i + j] * u[self.neighbours[m * i + j]];
            }
            out[i] = s;
        }
    }

    fn apply_complex(&self, u: &[Complex64]) -> Vec<Complex64> {
        let m = 2 * self.grid.dim();
        (0..u.len())
            .map(|i| {
                if self.fixed[i] {
                    return Complex64::default();
                }
                let mut s = -self.out_rate[i] * u[i];
                for j in 0..m {
                    s += self.rates[m * i + j] * u[self.neighbours[m * i + j]];
                }
                s
            })
            .collect()
    }

    /// Solves `(shift - tau L_h) u = rhs` by symmetric Gauss–Seidel, starting
    /// from `u`. Fixed nodes are held at zero.
    fn gauss_seidel(&self, shift: f64, tau: f64, rhs: &[f64], u: &mut [f64]) -> Result<usize> {
        let n = u.len();
        let m = 2 * self.grid.dim();
        let scale = rhs.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        for (i, v) in u.iter_mut().enumerate() {
            if self.fixed[i] {
                *v = 0.0;
            }
        }
        let relax = |i: usize, u: &mut [f64]| -> f64 {
            if self.fixed[i] {
                return 0.0;
            }
            let mut s = rhs[i];
            for j in 0..m {
                s += tau * self.rates[m * i + j] * u[self.neighbours[m * i + j]];
            }
            let new = s / (shift + tau * self.out_rate[i]);
            let change = (new - u[i]).abs();
            u[i] = new;
            change
        };
        for sweep in 1..=GS_MAX_SWEEPS {
            let mut change = 0.0f64;
            if sweep % 2 == 1 {
                for i in 0..n {
                    change = change.max(relax(i, u));
                }
            } else {
                for i in (0..n).rev() {
                    change = change.max(relax(i, u));
                }
            }
            if change <= GS_TOL * scale {
                return Ok(sweep);
            }
        }
        Err(Error::SolverFailure(format!(
            "Gauss-Seidel did not reach {GS_TOL:e} in {GS_MAX_SWEEPS} sweeps"
        )))
    }
}

/// Time stepper for a fixed drift sample.
#[derive(Debug, Clone)]
pub struct Evolver {
    cfg: EvolutionConfig,
    gen: UpwindGenerator,
}

impl Evolver {
    pub fn new(drift: &GridFunction, cfg: EvolutionConfig) -> Result<Self> {
        if drift.grid() != &cfg.grid {
            return Err(Error::InvalidArgument("drift sampled on a different grid".into()));
        }
        if !(cfg.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", cfg.dt)));
        }
        let gen = UpwindGenerator::new(drift, cfg.boundary)?;
        if cfg.scheme == Scheme::ExplicitRk {
            let bound = explicit_stability_bound(drift);
            if cfg.dt > bound {
                return Err(Error::StabilityViolation { dt: cfg.dt, bound });
            }
        }
        Ok(Self { cfg, gen })
    }

    pub fn generator(&self) -> &UpwindGenerator {
        &self.gen
    }

    /// Advances `u` (real values) by time `t` in place.
    pub fn advance(&self, u: &mut Vec<f64>, t: f64) -> Result<()> {
        if t < 0.0 {
            return Err(Error::InvalidArgument(format!("negative time {t}")));
        }
        if t == 0.0 {
            return Ok(());
        }
        let steps = (t / self.cfg.dt - 1e-9).ceil().max(1.0) as usize;
        let dt = t / steps as f64;
        let n = u.len();
        match self.cfg.scheme {
            Scheme::ImplicitUpwind => {
                let mut rhs = vec![0.0; n];
                for _ in 0..steps {
                    rhs.copy_from_slice(u);
                    self.gen.gauss_seidel(1.0, dt, &rhs, u)?;
                }
            }
            Scheme::ExplicitRk => {
                let mut lu = vec![0.0; n];
                let mut stage = vec![0.0; n];
                for _ in 0..steps {
                    self.gen.apply(u, &mut lu);
                    for i in 0..n {
                        stage[i] = u[i] + dt * lu[i];
                    }
                    self.gen.apply(&stage, &mut lu);
                    for i in 0..n {
                        u[i] = 0.5 * u[i] + 0.5 * (stage[i] + dt * lu[i]);
                    }
                }
                for (i, v) in u.iter_mut().enumerate() {
                    if self.gen.fixed[i] {
                        *v = 0.0;
                    }
                }
            }
        }
        Ok(())
    }

    /// `u(t)` for each `t` in `times` (nondecreasing), starting from `f`.
    pub fn snapshots(&self, f: &GridFunction, times: &[f64]) -> Result<Vec<GridFunction>> {
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("snapshot times must be sorted".into()));
        }
        let mut u = real_scalar(f)?;
        let mut now = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            self.advance(&mut u, t - now)?;
            now = t;
            out.push(GridFunction::from_real(self.cfg.grid, 1, &u)?);
        }
        Ok(out)
    }
}

fn real_scalar(f: &GridFunction) -> Result<Vec<f64>> {
    if f.comps() != 1 {
        return Err(Error::InvalidArgument("expected a scalar grid function".into()));
    }
    Ok(f.real_parts())
}

/// `1 / (2d/h^2 + sum_k max|b_k| / h)`: the largest step for which each
/// forward-Euler stage is a convex combination.
pub fn explicit_stability_bound(drift: &GridFunction) -> f64 {
    let g = drift.grid();
    let h = g.spacing();
    let adv: f64 = (0..drift.comps())
        .map(|k| drift.component(k).iter().fold(0.0f64, |m, v| m.max(v.re.abs())))
        .sum();
    1.0 / (2.0 * g.dim() as f64 / (h * h) + adv / h)
}

/// `u(t) ~ e^{-t Lambda(b_n)} f` for a sampled drift; `u(0) = f` exactly.
pub fn evolve(drift: &GridFunction, f: &GridFunction, t: f64, cfg: &EvolutionConfig) -> Result<GridFunction> {
    if t == 0.0 {
        return Ok(f.clone());
    }
    let ev = Evolver::new(drift, *cfg)?;
    let mut u = real_scalar(f)?;
    ev.advance(&mut u, t)?;
    GridFunction::from_real(cfg.grid, 1, &u)
}

/// [`evolve`] with the drift sampled from a mollified field.
pub fn evolve_mollified(
    m: &MollifiedDrift,
    f: &GridFunction,
    t: f64,
    cfg: &EvolutionConfig,
) -> Result<GridFunction> {
    evolve(&sample_mollified(m, &cfg.grid)?, f, t, cfg)
}

/// Discretization of `(zeta - Delta + b . grad)` for the direct resolvent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discretization {
    /// Fourier Laplacian and gradient, as in [`crate::operators`]; periodic.
    Spectral,
    /// The upwind generator used by [`evolve`].
    Upwind,
}

#[derive(Debug, Clone)]
pub struct DirectSolve {
    pub u: GridFunction,
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `(zeta - Delta + b . grad) u = f` by right-preconditioned GMRES
/// to relative residual `1e-10`; the preconditioner is the free resolvent of
/// the same discretization.
pub fn resolvent_direct(
    drift: &GridFunction,
    zeta: Complex64,
    f: &GridFunction,
    boundary: Boundary,
    disc: Discretization,
) -> Result<DirectSolve> {
    let grid = *drift.grid();
    if f.grid() != &grid || f.comps() != 1 {
        return Err(Error::InvalidArgument("datum must be scalar on the drift grid".into()));
    }
    let opts = GmresOptions::default();
    let to_fn = |v: &[Complex64]| GridFunction::from_values(grid, 1, v.to_vec()).expect("shape");
    let (sol, u) = match disc {
        Discretization::Spectral => {
            if boundary != Boundary::Periodic {
                return Err(Error::InvalidArgument(
                    "spectral resolvent requires a periodic boundary".into(),
                ));
            }
            // (zeta - Delta + B) R v = v + B R v.
            let op = |v: &[Complex64]| -> Vec<Complex64> {
                let rv = resolvent_power(&to_fn(v), 1.0, zeta);
                let brv = pointwise_dot(drift, &gradient(&rv));
                v.iter().zip(brv.values()).map(|(a, b)| a + b).collect()
            };
            let sol = gmres(op, f.values(), opts)?;
            let u = resolvent_power(&to_fn(&sol.x), 1.0, zeta);
            (sol, u)
        }
        Discretization::Upwind => {
            let gen = UpwindGenerator::new(drift, boundary)?;
            let mut rhs = f.values().to_vec();
            for (i, v) in rhs.iter_mut().enumerate() {
                if gen.fixed[i] {
                    *v = Complex64::default();
                }
            }
            // Dirichlet rows are the identity; the rest are zeta - L_h.
            let matvec = |u: &[Complex64]| -> Vec<Complex64> {
                let lu = gen.apply_complex(u);
                u.iter()
                    .zip(&lu)
                    .enumerate()
                    .map(|(i, (a, l))| if gen.fixed[i] { *a } else { zeta * a - l })
                    .collect()
            };
            let op = |v: &[Complex64]| matvec(fd_resolvent(&to_fn(v), zeta).values());
            let sol = gmres(op, &rhs, opts)?;
            let u = fd_resolvent(&to_fn(&sol.x), zeta);
            (sol, u)
        }
    };
    Ok(DirectSolve {
        u,
        iterations: sol.iterations,
        residual: sol.residual,
    })
}

/// Upwind resolvent `(mu - L_h)^{-1} f` for real `mu` and real `f` by
/// Gauss–Seidel; monotone, so `f >= 0` gives `u >= 0`.
pub fn resolvent_upwind_gs(
    drift: &GridFunction,
    mu: f64,
    f: &GridFunction,
    boundary: Boundary,
) -> Result<GridFunction> {
    let gen = UpwindGenerator::new(drift, boundary)?;
    let rhs = real_scalar(f)?;
    let mut u = vec![0.0; rhs.len()];
    gen.gauss_seidel(mu, 1.0, &rhs, &mut u)?;
    GridFunction::from_real(*drift.grid(), 1, &u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::{DriftField, MollifiedDrift};
    use crate::operators::bessel_apply;

    fn bump_datum(g: Grid) -> GridFunction {
        GridFunction::scalar_fn(g, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp())
    }

    #[test]
    fn zero_time_is_identity() {
        let g = Grid::new(3, 3.0, 8).unwrap();
        let b = GridFunction::zeros(g, 3);
        let f = bump_datum(g);
        let cfg = EvolutionConfig::implicit(g, 0.01, Boundary::Absorbing);
        assert_eq!(evolve(&b, &f, 0.0, &cfg).unwrap(), f);
    }

    #[test]
    fn heat_mode_decays_at_the_discrete_rate() {
        let g = Grid::new(2, std::f64::consts::PI, 32).unwrap();
        let b = GridFunction::zeros(g, 2);
        let f = GridFunction::scalar_fn(g, |x| x[0].cos());
        let h = g.spacing();
        let sym = (2.0 - 2.0 * h.cos()) / (h * h);
        let t = 0.5;
        let dt = 1e-3;
        let cfg = EvolutionConfig::implicit(g, dt, Boundary::Periodic);
        let u = evolve(&b, &f, t, &cfg).unwrap();
        let steps = (t / dt).round();
        let factor = (1.0 + dt * sym).powf(-steps);
        let err = u.sub(&f.scale(Complex64::new(factor, 0.0))).sup_norm();
        assert!(err < 1e-10, "{err}");
        // And the continuum rate to first order.
        assert!((factor - (-t).exp()).abs() < 2e-3);
    }

    #[test]
    fn mass_is_conserved_without_drift() {
        let g = Grid::new(3, 3.0, 16).unwrap();
        let b = GridFunction::zeros(g, 3);
        let f = bump_datum(g);
        let cfg = EvolutionConfig::implicit(g, 0.02, Boundary::Periodic);
        let u = evolve(&b, &f, 0.3, &cfg).unwrap();
        let m0: f64 = f.real_parts().iter().sum();
        let m1: f64 = u.real_parts().iter().sum();
        assert!((m0 - m1).abs() < 1e-9 * m0);
    }

    #[test]
    fn explicit_scheme_checks_stability() {
        let g = Grid::new(3, 3.0, 16).unwrap();
        let b = GridFunction::zeros(g, 3);
        let bound = explicit_stability_bound(&b);
        let cfg = EvolutionConfig {
            grid: g,
            dt: 2.0 * bound,
            scheme: Scheme::ExplicitRk,
            boundary: Boundary::Periodic,
        };
        assert!(matches!(
            evolve(&b, &bump_datum(g), 0.1, &cfg),
            Err(Error::StabilityViolation { .. })
        ));
        let ok = EvolutionConfig { dt: bound, ..cfg };
        let u = evolve(&b, &bump_datum(g), 0.1, &ok).unwrap();
        let v = evolve(&b, &bump_datum(g), 0.1, &EvolutionConfig::implicit(g, 1e-4, Boundary::Periodic)).unwrap();
        assert!(u.sub(&v).sup_norm() < 2e-3, "{}", u.sub(&v).sup_norm());
    }

    #[test]
    fn contraction_and_positivity_with_model_drift() {
        let g = Grid::new(3, 4.0, 16).unwrap();
        let m = MollifiedDrift::new(DriftField::model_radial(0.2, 3).unwrap(), 4).unwrap();
        let b = sample_mollified(&m, &g).unwrap();
        let f = GridFunction::scalar_fn(g, |x| if x[0] > 0.0 { 1.0 } else { 0.2 });
        for scheme in [Scheme::ImplicitUpwind, Scheme::ExplicitRk] {
            for boundary in [Boundary::Periodic, Boundary::Absorbing] {
                let dt = match scheme {
                    Scheme::ImplicitUpwind => 0.05,
                    Scheme::ExplicitRk => explicit_stability_bound(&b),
                };
                let cfg = EvolutionConfig { grid: g, dt, scheme, boundary };
                let ev = Evolver::new(&b, cfg).unwrap();
                for u in ev.snapshots(&f, &[0.1, 0.3, 0.6]).unwrap() {
                    let r = u.real_parts();
                    assert!(r.iter().all(|&v| v >= -1e-12 && v <= 1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn semigroup_property() {
        let g = Grid::new(3, 4.0, 16).unwrap();
        let m = MollifiedDrift::new(DriftField::model_radial(0.2, 3).unwrap(), 4).unwrap();
        let b = sample_mollified(&m, &g).unwrap();
        let f = bump_datum(g);
        let cfg = EvolutionConfig::implicit(g, 0.01, Boundary::Absorbing);
        let whole = evolve(&b, &f, 0.4, &cfg).unwrap();
        let split = evolve(&b, &evolve(&b, &f, 0.1, &cfg).unwrap(), 0.3, &cfg).unwrap();
        assert!(whole.sub(&split).sup_norm() < 1e-10);
    }

    #[test]
    fn free_resolvent_of_constant() {
        let g = Grid::new(3, 2.0, 8).unwrap();
        let b = GridFunction::zeros(g, 3);
        let f = GridFunction::constant(g, 3.0);
        for disc in [Discretization::Spectral, Discretization::Upwind] {
            let u = resolvent_direct(&b, Complex64::new(1.5, 0.0), &f, Boundary::Periodic, disc)
                .unwrap()
                .u;
            assert!(u.values().iter().all(|v| (v - Complex64::new(2.0, 0.0)).norm() < 1e-12));
        }
        let gs = resolvent_upwind_gs(&b, 1.5, &f, Boundary::Periodic).unwrap();
        assert!(gs.real_parts().iter().all(|v| (v - 2.0).abs() < 1e-10));
    }

    #[test]
    fn spectral_direct_matches_free_multiplier() {
        let g = Grid::new(3, 3.0, 8).unwrap();
        let b = GridFunction::zeros(g, 3);
        let f = bump_datum(g);
        let u = resolvent_direct(&b, Complex64::new(2.0, 0.0), &f, Boundary::Periodic, Discretization::Spectral)
            .unwrap()
            .u;
        assert!(u.sub(&bessel_apply(&f, 1.0, 2.0)).norm_l2() < 1e-12);
    }

    #[test]
    fn direct_resolvent_is_linear() {
        let g = Grid::new(3, 3.0, 16).unwrap();
        let m = MollifiedDrift::new(DriftField::model_radial(0.2, 3).unwrap(), 4).unwrap();
        let b = sample_mollified(&m, &g).unwrap();
        let f1 = bump_datum(g);
        let f2 = GridFunction::scalar_fn(g, |x| (x[1] * std::f64::consts::PI / 3.0).sin());
        let z = Complex64::new(1.5, 0.0);
        for disc in [Discretization::Spectral, Discretization::Upwind] {
            let solve = |f: &GridFunction| resolvent_direct(&b, z, f, Boundary::Periodic, disc).unwrap().u;
            let lhs = solve(&f1.add(&f2));
            let rhs = solve(&f1).add(&solve(&f2));
            assert!(lhs.sub(&rhs).norm_l2() <= 1e-9 * lhs.norm_l2());
        }
    }

    #[test]
    fn laplace_transform_of_the_evolution() {
        // int_0^inf e^{-mu t} u(t) dt against the upwind resolvent; the
        // backward-Euler sum is the resolvent at mu' = (1 - e^{-mu dt}) / dt,
        // scaled by e^{-mu dt}, so the gap is first order in dt.
        let g = Grid::new(3, 3.0, 8).unwrap();
        let m = MollifiedDrift::new(DriftField::model_radial(0.2, 3).unwrap(), 2).unwrap();
        let b = sample_mollified(&m, &g).unwrap();
        let f = bump_datum(g);
        let mu = 2.0;
        let direct = resolvent_upwind_gs(&b, mu, &f, Boundary::Absorbing).unwrap();
        let mut errs = Vec::new();
        for dt in [0.02, 0.01] {
            let ev = Evolver::new(&b, EvolutionConfig::implicit(g, dt, Boundary::Absorbing)).unwrap();
            let t_end = -(1e-8f64).ln() / mu;
            let steps = (t_end / dt).ceil() as usize;
            let mut u = f.real_parts();
            let mut acc = vec![0.0; u.len()];
            for k in 1..=steps {
                ev.advance(&mut u, dt).unwrap();
                let w = dt * (-mu * k as f64 * dt).exp();
                acc.iter_mut().zip(&u).for_each(|(a, v)| *a += w * v);
            }
            let acc = GridFunction::from_real(g, 1, &acc).unwrap();
            errs.push(acc.sub(&direct).sup_norm() / direct.sup_norm());
        }
        assert!(errs[0] < 2.0 * mu * 0.02, "{errs:?}");
        assert!(errs[1] < 0.6 * errs[0], "{errs:?}");
    }
}
