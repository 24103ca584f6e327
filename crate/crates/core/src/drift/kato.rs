//! Box estimate of the Kato-class quantity `sup_y int |b(x)| k_lambda(x - y) dx`.
//!
//! `k_lambda` is the kernel of `(lambda - Delta)^{-1/2}`, written through
//! subordination as
//!
//! ```text
//! k(r) = pi^{-1/2} int_0^inf t^{-1/2} e^{-lambda t} (4 pi t)^{-d/2} e^{-r^2/4t} dt
//! ```
//!
//! and integrated in `t = e^u` by the trapezoid rule. The cell containing the
//! diagonal is replaced by a ball of equal volume, whose kernel mass is the
//! same integral with the Gaussian replaced by a chi-square probability.

use std::collections::HashMap;
use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use statrs::function::gamma::{gamma, gamma_lr};

use super::DriftField;
use crate::error::{Error, Result};
use crate::operators::{sample_drift, Grid};

const U_MIN: f64 = -50.0;
const U_MAX: f64 = 50.0;
const U_STEP: f64 = 0.02;

/// Diagonal cells carrying more than this share of the supremum signal an
/// under-resolved kernel.
const MAX_DIAGONAL_FRACTION: f64 = 0.5;

fn subordinated<F: Fn(f64) -> f64>(lambda: f64, g: F) -> f64 {
    let steps = ((U_MAX - U_MIN) / U_STEP).round() as usize;
    let mut acc = 0.0;
    for i in 0..=steps {
        let u = U_MIN + i as f64 * U_STEP;
        let t = u.exp();
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        // dt = t du, so t^{-1/2} dt = t^{1/2} du.
        acc += w * t.sqrt() * (-lambda * t).exp() * g(t);
    }
    acc * U_STEP / PI.sqrt()
}

/// `k_lambda(r)` in dimension `d`, `r > 0`.
pub fn kato_kernel(r: f64, lambda: f64, d: usize) -> f64 {
    let r2 = r * r;
    subordinated(lambda, |t| {
        (4.0 * PI * t).powf(-(d as f64) / 2.0) * (-r2 / (4.0 * t)).exp()
    })
}

/// `int_{|x| < rho} k_lambda(x) dx`.
fn ball_mass(rho: f64, lambda: f64, d: usize) -> f64 {
    let a = d as f64 / 2.0;
    subordinated(lambda, |t| gamma_lr(a, rho * rho / (4.0 * t)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KatoEstimate {
    pub value: f64,
    /// Grid point attaining the supremum.
    pub argmax: Vec<f64>,
    /// Share of `value` contributed by the diagonal cell at `argmax`.
    pub diagonal_fraction: f64,
    /// Kernel mass captured by the padded box; the continuum mass is `lambda^{-1/2}`.
    pub kernel_mass: f64,
    /// `lambda^{-1/2} - kernel_mass`: what the truncation to the box drops.
    pub kernel_tail: f64,
}

/// Estimates `|| |b| (lambda - Delta)^{-1/2} ||_{1->1}` on `[-half_width, half_width)^d`
/// with `resolution` points per axis. The field is sampled as in
/// [`crate::operators::sample_drift`].
pub fn kato_norm_estimate(
    field: &DriftField,
    lambda: f64,
    half_width: f64,
    resolution: usize,
) -> Result<KatoEstimate> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    let d = field.dimension();
    let grid = Grid::new(d, half_width, resolution)?;
    let h = grid.spacing();
    let n = resolution;
    let m = 2 * n;
    let total = m.pow(d as u32);
    let mag = sample_drift(field, &grid)?.magnitude();

    // Kernel weights on the doubled grid, indexed by circular offset.
    let vol = grid.cell_volume();
    let ball_radius = (vol * gamma(d as f64 / 2.0 + 1.0) / PI.powf(d as f64 / 2.0)).powf(1.0 / d as f64);
    let diag = ball_mass(ball_radius, lambda, d);
    let mut cache: HashMap<usize, f64> = HashMap::new();
    let mut kernel = vec![Complex64::default(); total];
    let mut idx = vec![0usize; d];
    let mut mass = 0.0;
    for (flat, slot) in kernel.iter_mut().enumerate() {
        let mut rest = flat;
        for k in (0..d).rev() {
            idx[k] = rest % m;
            rest /= m;
        }
        if idx.iter().any(|&j| j == n) {
            continue;
        }
        let q: usize = idx
            .iter()
            .map(|&j| {
                let s = if j < n { j } else { m - j };
                s * s
            })
            .sum();
        let w = if q == 0 {
            diag
        } else {
            *cache
                .entry(q)
                .or_insert_with(|| kato_kernel((q as f64).sqrt() * h, lambda, d) * vol)
        };
        *slot = Complex64::new(w, 0.0);
        mass += w;
    }

    // |b| zero-padded into the doubled grid.
    let mut field_pad = vec![Complex64::default(); total];
    for (i, &v) in mag.iter().enumerate() {
        field_pad[pad_index(i, n, d)] = Complex64::new(v, 0.0);
    }
    let conv = circular_convolution(&mut field_pad, &mut kernel, m, d);

    let mut best = (0.0f64, 0usize);
    for i in 0..grid.len() {
        let v = conv[pad_index(i, n, d)].re;
        if v > best.0 {
            best = (v, i);
        }
    }
    let (value, at) = best;
    let diagonal_fraction = if value > 0.0 { mag[at] * diag / value } else { 0.0 };
    if diagonal_fraction > MAX_DIAGONAL_FRACTION {
        return Err(Error::QuadratureFailure(format!(
            "diagonal cell carries {:.0}% of the estimate; refine the grid",
            100.0 * diagonal_fraction
        )));
    }
    Ok(KatoEstimate {
        value: value.max(0.0),
        argmax: grid.point(at),
        diagonal_fraction,
        kernel_mass: mass,
        kernel_tail: lambda.powf(-0.5) - mass,
    })
}

fn pad_index(i: usize, n: usize, d: usize) -> usize {
    let m = 2 * n;
    let mut rest = i;
    let mut out = 0;
    let mut scale = 1;
    for _ in 0..d {
        out += (rest % n) * scale;
        rest /= n;
        scale *= m;
    }
    out
}

/// Circular convolution of two arrays on `m^d` points by FFT along each axis.
fn circular_convolution(a: &mut [Complex64], b: &mut [Complex64], m: usize, d: usize) -> Vec<Complex64> {
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let transform = |data: &mut [Complex64], plan: &std::sync::Arc<dyn rustfft::Fft<f64>>| {
        let mut line = vec![Complex64::default(); m];
        for axis in 0..d {
            let s = m.pow((d - 1 - axis) as u32);
            let block = s * m;
            for base in (0..data.len()).step_by(block) {
                for off in 0..s {
                    for (j, l) in line.iter_mut().enumerate() {
                        *l = data[base + off + j * s];
                    }
                    plan.process(&mut line);
                    for (j, l) in line.iter().enumerate() {
                        data[base + off + j * s] = *l;
                    }
                }
            }
        }
    };
    transform(a, &fwd);
    transform(b, &fwd);
    let scale = 1.0 / a.len() as f64;
    let mut c: Vec<Complex64> = a.iter().zip(b.iter()).map(|(x, y)| x * y * scale).collect();
    transform(&mut c, &inv);
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_matches_closed_form_in_three_dimensions() {
        // d = 3: k(r) = K_1(sqrt(lambda) r) sqrt(lambda) / (2 pi^2 r); check the
        // small-r asymptote 1/(2 pi^2 r^2).
        for r in [1e-3, 1e-2] {
            let k = kato_kernel(r, 1.0, 3);
            let lead = 1.0 / (2.0 * PI * PI * r * r);
            assert!((k / lead - 1.0).abs() < 1e-3, "r={r}: {k} vs {lead}");
        }
    }

    #[test]
    fn kernel_mass_is_inverse_sqrt_lambda() {
        // Radial integral |S^2| int k(r) r^2 dr, split at r = 1.
        for lambda in [0.5, 1.0, 4.0] {
            let inner = ball_mass(1.0, lambda, 3);
            let (outer, _) = crate::quadrature::adaptive_gk(
                |s: f64| {
                    let r = 1.0 / s;
                    4.0 * PI * kato_kernel(r, lambda, 3) * r * r / (s * s)
                },
                1e-6,
                1.0,
                1e-10,
                0.0,
                500,
            )
            .unwrap();
            assert!((inner + outer - lambda.powf(-0.5)).abs() < 1e-7, "{lambda}");
        }
    }

    #[test]
    fn zero_field() {
        let b = DriftField::zero(3).unwrap();
        let est = kato_norm_estimate(&b, 1.0, 2.0, 8).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn nonincreasing_in_lambda() {
        let bump = super::super::SmoothField::GaussianBump {
            amplitude: 1.0,
            width: 0.7,
            direction: vec![0.0, 0.0, 1.0],
        };
        let b = DriftField::bounded_smooth(bump, 3).unwrap();
        let vals: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|&l| kato_norm_estimate(&b, l, 3.0, 16).unwrap().value)
            .collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{vals:?}");
    }

    #[test]
    fn coarse_grid_is_flagged() {
        let b = DriftField::bounded_smooth(super::super::SmoothField::Constant(vec![1.0, 0.0, 0.0]), 3).unwrap();
        assert!(matches!(
            kato_norm_estimate(&b, 1e4, 4.0, 8),
            Err(Error::QuadratureFailure(_))
        ));
    }
}
