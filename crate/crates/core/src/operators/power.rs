//! Power iteration for the top eigenvalue of a self-adjoint nonnegative map.

use rustfft::num_complex::Complex64;

use super::grid::GridFunction;

pub const DEFAULT_POWER_TOL: f64 = 1e-6;
pub const DEFAULT_POWER_ITERS: usize = 500;

/// Outcome of a power iteration. `converged == false` is the non-convergence
/// warning: `value` then holds the last Rayleigh quotient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl PowerEstimate {
    /// Strict form: non-convergence becomes an error.
    pub fn into_result(self) -> crate::Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(crate::Error::NonConvergence {
                iterations: self.iterations,
                estimate: self.value,
            })
        }
    }
}

/// Deterministic, non-symmetric start vector (splitmix64 of the index).
pub fn start_vector(template: &GridFunction) -> GridFunction {
    let mut out = template.clone();
    for (i, v) in out.values_mut().iter_mut().enumerate() {
        let mut z = (i as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        *v = Complex64::new(0.5 + (z >> 11) as f64 / (1u64 << 53) as f64, 0.0);
    }
    out
}

/// Top eigenvalue of `op`, which must be self-adjoint and nonnegative in the
/// grid inner product. Stops when successive Rayleigh quotients agree to
/// relative tolerance `tol`.
pub fn power_iteration<F>(op: F, start: GridFunction, tol: f64, max_iters: usize) -> PowerEstimate
where
    F: Fn(&GridFunction) -> GridFunction,
{
    let mut v = start;
    let nv = v.norm_l2();
    if nv == 0.0 {
        return PowerEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    v = v.scale(Complex64::new(1.0 / nv, 0.0));
    let mut last = f64::NAN;
    for it in 1..=max_iters {
        let w = op(&v);
        let rq = v.inner(&w).re;
        let nw = w.norm_l2();
        if nw == 0.0 {
            return PowerEstimate {
                value: 0.0,
                iterations: it,
                converged: true,
            };
        }
        if (rq - last).abs() <= tol * rq.abs() {
            return PowerEstimate {
                value: rq,
                iterations: it,
                converged: true,
            };
        }
        last = rq;
        v = w.scale(Complex64::new(1.0 / nw, 0.0));
    }
    PowerEstimate {
        value: last,
        iterations: max_iters,
        converged: false,
    }
}
