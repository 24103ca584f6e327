//! One-dimensional quadrature rules shared by the drift and operator code.

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Integrates `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = fc * GK15_WEIGHTS[7];
    let mut gauss = fc * G7_WEIGHTS[3];
    for (j, (&x, &w)) in GK15_NODES[..7].iter().zip(&GK15_WEIGHTS[..7]).enumerate() {
        let f1 = f(mid - half * x);
        let f2 = f(mid + half * x);
        kronrod += w * (f1 + f2);
        if j % 2 == 1 {
            gauss += G7_WEIGHTS[j / 2] * (f1 + f2);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of `f` over [a, b].
///
/// Returns the integral and the accumulated error estimate; fails with
/// `QuadratureFailure` when the tolerance is not met within `max_intervals`.
pub fn adaptive_gk<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<(f64, f64)> {
    let (v, e) = gk15(&mut f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    loop {
        let total: f64 = intervals.iter().map(|iv| iv.2).sum();
        let err: f64 = intervals.iter().map(|iv| iv.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok((total, err));
        }
        if intervals.len() >= max_intervals {
            return Err(Error::QuadratureFailure(format!(
                "adaptive rule on [{a}, {b}] stalled at error {err:e} (value {total:e})"
            )));
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty interval list");
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let m = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, m);
        let (v2, e2) = gk15(&mut f, m, hi);
        intervals.push((lo, m, v1, e1));
        intervals.push((m, hi, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let gl = GaussLegendre::new(6);
        // degree 11 is the exactness limit for 6 nodes
        let v = gl.integrate(-1.0, 2.0, |x| x.powi(11) + 3.0 * x * x);
        let exact = (2f64.powi(12) - 1.0) / 12.0 + (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-10 * exact.abs());
        let wsum: f64 = gl.weights.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_odd_order_has_center_node() {
        let gl = GaussLegendre::new(7);
        assert!(gl.nodes[3].abs() < 1e-15);
        assert!((gl.integrate(0.0, std::f64::consts::PI, f64::sin) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let (v, _) = adaptive_gk(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10, 0.0, 500).unwrap();
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn adaptive_reports_failure() {
        let r = adaptive_gk(|x| 1.0 / x, 0.0, 1.0, 1e-12, 0.0, 20);
        assert!(matches!(r, Err(Error::QuadratureFailure(_))));
    }
}
