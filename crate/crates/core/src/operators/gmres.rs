//! Restarted GMRES for complex linear systems given as a matrix-free map.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    /// Stop when `||b - A x|| <= rtol ||b||`.
    pub rtol: f64,
    pub restart: usize,
    pub max_iters: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            restart: 60,
            max_iters: 3000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresSolution {
    pub x: Vec<Complex64>,
    pub iterations: usize,
    /// True relative residual of the returned iterate.
    pub residual: f64,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn gmres<F>(apply: F, rhs: &[Complex64], opts: GmresOptions) -> Result<GmresSolution>
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let n = rhs.len();
    let bnorm = norm(rhs);
    let mut x = vec![Complex64::default(); n];
    if bnorm == 0.0 {
        return Ok(GmresSolution {
            x,
            iterations: 0,
            residual: 0.0,
        });
    }
    let m = opts.restart.max(1);
    let mut total = 0;
    loop {
        let ax = apply(&x);
        let r: Vec<Complex64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        if beta <= opts.rtol * bnorm {
            return Ok(GmresSolution {
                x,
                iterations: total,
                residual: beta / bnorm,
            });
        }
        if total >= opts.max_iters {
            return Err(Error::SolverFailure(format!(
                "GMRES stopped after {total} iterations at relative residual {:.3e}",
                beta / bnorm
            )));
        }
        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![Complex64::default(); m]; m + 1];
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![Complex64::default(); m];
        let mut g = vec![Complex64::default(); m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..m {
            let mut w = apply(&basis[k]);
            // Modified Gram-Schmidt, applied twice for stability.
            for _ in 0..2 {
                for (j, v) in basis.iter().enumerate() {
                    let hij = dot(v, &w);
                    h[j][k] += hij;
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= hij * vi;
                    }
                }
            }
            let wn = norm(&w);
            h[k + 1][k] = Complex64::new(wn, 0.0);
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j].conj() * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let a = h[k][k];
            let b = h[k + 1][k];
            let rho = (a.norm_sqr() + b.norm_sqr()).sqrt();
            if rho == 0.0 {
                cs[k] = 1.0;
                sn[k] = Complex64::default();
            } else if a.norm() == 0.0 {
                cs[k] = 0.0;
                sn[k] = Complex64::new(1.0, 0.0);
            } else {
                let phase = a / a.norm();
                cs[k] = a.norm() / rho;
                sn[k] = phase * b.conj() / rho;
            }
            h[k][k] = cs[k] * a + sn[k] * b;
            h[k + 1][k] = Complex64::default();
            g[k + 1] = -sn[k].conj() * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            total += 1;
            if g[k + 1].norm() <= opts.rtol * bnorm * 0.5 || wn == 0.0 || total >= opts.max_iters {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![Complex64::default(); k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_nonsymmetric_system() {
        let a = [[4.0, 1.0, 0.0], [-2.0, 5.0, 1.0], [0.5, 0.0, 3.0]];
        let apply = |v: &[Complex64]| -> Vec<Complex64> {
            (0..3)
                .map(|i| (0..3).map(|j| v[j] * a[i][j]).sum())
                .collect()
        };
        let rhs = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 2.0),
            Complex64::new(-1.0, 1.0),
        ];
        let sol = gmres(apply, &rhs, GmresOptions::default()).unwrap();
        let back = apply(&sol.x);
        for (x, y) in back.iter().zip(&rhs) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn restarts_still_converge() {
        let n = 50;
        let apply = |v: &[Complex64]| -> Vec<Complex64> {
            (0..n)
                .map(|i| {
                    let left = if i > 0 { v[i - 1] } else { Complex64::default() };
                    v[i] * (3.0 + i as f64 * 0.01) - left
                })
                .collect()
        };
        let rhs: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0, i as f64 * 0.1)).collect();
        let opts = GmresOptions {
            restart: 5,
            ..Default::default()
        };
        let sol = gmres(apply, &rhs, opts).unwrap();
        assert!(sol.residual <= 1e-10);
    }
}
