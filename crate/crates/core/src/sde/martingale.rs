//! Martingale-problem residuals
//! `M^f(t) = f(X_t) - f(x0) + int_0^t (-Delta f + b . grad f)(X_s) ds`.
//!
//! The time integral is the trapezoid rule over stored snapshots; derivatives
//! of the test function are analytic.

use super::PathEnsemble;
use crate::drift::Cutoff;
use crate::error::{Error, Result};
use crate::stats::{mean_ci, Estimate};

/// Polynomial factor of a test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polynomial {
    One,
    /// `y_i`.
    Coordinate(usize),
    /// `y_i y_j`.
    Product(usize, usize),
    /// `|y|^2`.
    SquaredNorm,
}

impl Polynomial {
    fn value(self, y: &[f64]) -> f64 {
        match self {
            Polynomial::One => 1.0,
            Polynomial::Coordinate(i) => y[i],
            Polynomial::Product(i, j) => y[i] * y[j],
            Polynomial::SquaredNorm => y.iter().map(|v| v * v).sum(),
        }
    }

    fn gradient(self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        match self {
            Polynomial::One => {}
            Polynomial::Coordinate(i) => out[i] = 1.0,
            Polynomial::Product(i, j) => {
                out[i] += y[j];
                out[j] += y[i];
            }
            Polynomial::SquaredNorm => {
                for (o, &v) in out.iter_mut().zip(y) {
                    *o = 2.0 * v;
                }
            }
        }
    }

    fn laplacian(self, d: usize) -> f64 {
        match self {
            Polynomial::One | Polynomial::Coordinate(_) => 0.0,
            Polynomial::Product(i, j) => {
                if i == j {
                    2.0
                } else {
                    0.0
                }
            }
            Polynomial::SquaredNorm => 2.0 * d as f64,
        }
    }

    fn max_index(self) -> Option<usize> {
        match self {
            Polynomial::Coordinate(i) => Some(i),
            Polynomial::Product(i, j) => Some(i.max(j)),
            _ => None,
        }
    }

    fn name(self) -> String {
        match self {
            Polynomial::One => "1".into(),
            Polynomial::Coordinate(i) => format!("y{}", i + 1),
            Polynomial::Product(i, j) => format!("y{}y{}", i + 1, j + 1),
            Polynomial::SquaredNorm => "|y|^2".into(),
        }
    }
}

/// `f = xi_k p` with an optional smooth cutoff `xi_k`.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub poly: Polynomial,
    pub cutoff: Option<Cutoff>,
}

impl TestFunction {
    pub fn coordinate(i: usize) -> Self {
        Self { poly: Polynomial::Coordinate(i), cutoff: None }
    }

    pub fn product(i: usize, j: usize) -> Self {
        Self { poly: Polynomial::Product(i, j), cutoff: None }
    }

    pub fn squared_norm() -> Self {
        Self { poly: Polynomial::SquaredNorm, cutoff: None }
    }

    /// Compactly supported `xi_k p`.
    pub fn cutoff_polynomial(poly: Polynomial, cutoff: Cutoff) -> Self {
        Self { poly, cutoff: Some(cutoff) }
    }

    pub fn describe(&self) -> String {
        match &self.cutoff {
            None => self.poly.name(),
            Some(c) => format!("xi_{}*{}", c.k, self.poly.name()),
        }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let p = self.poly.value(y);
        self.cutoff.as_ref().map_or(p, |c| c.value(y) * p)
    }

    /// `-Delta f + b . grad f` at `y`.
    pub fn generator_term(&self, y: &[f64], b: &[f64]) -> f64 {
        let d = y.len();
        let mut gp = vec![0.0; d];
        self.poly.gradient(y, &mut gp);
        let lp = self.poly.laplacian(d);
        match &self.cutoff {
            None => {
                let drift: f64 = b.iter().zip(&gp).map(|(u, v)| u * v).sum();
                -lp + drift
            }
            Some(c) => {
                let mut gc = vec![0.0; d];
                c.gradient(y, &mut gc);
                let xi = c.value(y);
                let p = self.poly.value(y);
                let cross: f64 = gc.iter().zip(&gp).map(|(u, v)| u * v).sum();
                let lap = p * c.laplacian(y) + 2.0 * cross + xi * lp;
                let drift: f64 = b
                    .iter()
                    .zip(gc.iter().zip(&gp))
                    .map(|(bi, (a, q))| bi * (p * a + xi * q))
                    .sum();
                -lap + drift
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowResidual {
    pub s: f64,
    pub t: f64,
    /// Mean and radius of `M^f(t) - M^f(s)`.
    pub residual: Estimate,
}

impl WindowResidual {
    pub fn passes(&self) -> bool {
        self.residual.mean.abs() <= 3.0 * self.residual.ci
    }
}

#[derive(Debug, Clone)]
pub struct MartingaleReport {
    pub test_function: String,
    pub windows: Vec<WindowResidual>,
    /// Every window within three confidence radii of zero.
    pub pass: bool,
}

/// Tests that the increments of `M^f` over each window `(s, t)` have mean zero.
pub fn martingale_test(
    ens: &PathEnsemble,
    f: &TestFunction,
    windows: &[(f64, f64)],
) -> Result<MartingaleReport> {
    let d = ens.dim();
    if ens.config().stop_radius.is_some() {
        return Err(Error::InvalidArgument(
            "martingale residuals need an unstopped ensemble".into(),
        ));
    }
    if f.poly.max_index().is_some_and(|i| i >= d) {
        return Err(Error::InvalidArgument(format!(
            "test function {} uses a coordinate beyond d = {d}",
            f.describe()
        )));
    }
    let idx: Vec<(usize, usize)> = windows
        .iter()
        .map(|&(s, t)| {
            if s > t {
                return Err(Error::InvalidArgument(format!("window ({s}, {t}) is reversed")));
            }
            Ok((ens.snapshot_index(s)?, ens.snapshot_index(t)?))
        })
        .collect::<Result<_>>()?;
    let times = ens.times();
    let snaps = times.len();
    let x0 = &ens.config().x0;
    let f0 = f.value(x0);

    // M^f at every snapshot, path-major.
    let mut m = vec![0.0; ens.paths() * snaps];
    let mut b = vec![0.0; d];
    for (i, row) in m.chunks_mut(snaps).enumerate() {
        let mut integral = 0.0;
        let mut prev = None;
        for k in 0..snaps {
            let x = ens.state(i, k);
            ens.field().eval_into(x, &mut b)?;
            let g = f.generator_term(x, &b);
            if let Some((tp, gp)) = prev {
                integral += 0.5 * (times[k] - tp) * (g + gp);
            }
            prev = Some((times[k], g));
            row[k] = f.value(x) - f0 + integral;
        }
    }

    let windows: Vec<WindowResidual> = idx
        .iter()
        .map(|&(ks, kt)| {
            let inc: Vec<f64> = m.chunks(snaps).map(|row| row[kt] - row[ks]).collect();
            WindowResidual {
                s: times[ks],
                t: times[kt],
                residual: mean_ci(&inc),
            }
        })
        .collect();
    let pass = windows.iter().all(WindowResidual::passes);
    Ok(MartingaleReport {
        test_function: f.describe(),
        windows,
        pass,
    })
}
