//! Fourier multipliers: Bessel potentials, complex resolvent powers, gradient.

use rustfft::num_complex::Complex64;

use super::grid::GridFunction;

/// Applies the symbol `m(|xi|^2)` to every component.
pub fn apply_multiplier<F: Fn(f64) -> Complex64>(u: &GridFunction, symbol: F) -> GridFunction {
    let spec = u.grid().spectral();
    let mut out = u.clone();
    for c in 0..u.comps() {
        let comp = out.component_mut(c);
        spec.forward(comp);
        for (v, &k) in comp.iter_mut().zip(&spec.xi2) {
            *v *= symbol(k);
        }
        spec.inverse(comp);
    }
    out
}

/// `(lambda - Delta)^{-s} u`, exact on the discrete frequency lattice.
pub fn bessel_apply(u: &GridFunction, s: f64, lambda: f64) -> GridFunction {
    if s == 0.0 {
        return u.clone();
    }
    apply_multiplier(u, |k| Complex64::new((lambda + k).powf(-s), 0.0))
}

/// `(zeta - Delta)^{-s} u` with the principal branch of the complex power.
pub fn resolvent_power(u: &GridFunction, s: f64, zeta: Complex64) -> GridFunction {
    if s == 0.0 {
        return u.clone();
    }
    if zeta.im == 0.0 {
        return bessel_apply(u, s, zeta.re);
    }
    apply_multiplier(u, |k| (zeta + k).powf(-s))
}

/// `(zeta - Delta_h)^{-1} u` for the periodic second-order difference
/// Laplacian `Delta_h`.
pub fn fd_resolvent(u: &GridFunction, zeta: Complex64) -> GridFunction {
    let spec = u.grid().spectral();
    let mut out = u.clone();
    for c in 0..u.comps() {
        let comp = out.component_mut(c);
        spec.forward(comp);
        for (v, &k) in comp.iter_mut().zip(&spec.fd_xi2) {
            *v /= zeta + k;
        }
        spec.inverse(comp);
    }
    out
}

/// `-Delta u`.
pub fn neg_laplacian(u: &GridFunction) -> GridFunction {
    apply_multiplier(u, |k| Complex64::new(k, 0.0))
}

/// Spectral gradient of a scalar function; symbol `i xi`, zero at Nyquist.
pub fn gradient(u: &GridFunction) -> GridFunction {
    assert_eq!(u.comps(), 1, "gradient of a vector function");
    let grid = *u.grid();
    let spec = grid.spectral();
    let n = grid.len();
    let mut hat = u.values().to_vec();
    spec.forward(&mut hat);
    let mut out = GridFunction::zeros(grid, grid.dim());
    for axis in 0..grid.dim() {
        let comp = out.component_mut(axis);
        for i in 0..n {
            comp[i] = Complex64::new(0.0, spec.xi_axis(i, axis)) * hat[i];
        }
        spec.inverse(comp);
    }
    out
}

/// Adjoint of [`gradient`]: `-div v`.
pub fn gradient_adjoint(v: &GridFunction) -> GridFunction {
    let grid = *v.grid();
    let spec = grid.spectral();
    let n = grid.len();
    let mut acc = vec![Complex64::default(); n];
    for axis in 0..grid.dim() {
        let mut hat = v.component(axis).to_vec();
        spec.forward(&mut hat);
        for i in 0..n {
            acc[i] -= Complex64::new(0.0, spec.xi_axis(i, axis)) * hat[i];
        }
    }
    spec.inverse(&mut acc);
    GridFunction::from_values(grid, 1, acc).expect("shape preserved")
}

/// `sum_j w_j(x) v_j(x)` for a vector weight `w` and vector function `v`.
pub fn pointwise_dot(w: &GridFunction, v: &GridFunction) -> GridFunction {
    let grid = *v.grid();
    let n = grid.len();
    let mut out = vec![Complex64::default(); n];
    for c in 0..v.comps() {
        let wc = w.component(c);
        let vc = v.component(c);
        for i in 0..n {
            out[i] += wc[i] * vc[i];
        }
    }
    GridFunction::from_values(grid, 1, out).expect("shape preserved")
}

/// `w(x) s(x)` for a vector weight `w` and scalar `s`.
pub fn pointwise_outer(w: &GridFunction, s: &GridFunction) -> GridFunction {
    let grid = *s.grid();
    let n = grid.len();
    let mut out = GridFunction::zeros(grid, w.comps());
    let sv = s.values();
    for c in 0..w.comps() {
        let wc = w.component(c);
        let oc = out.component_mut(c);
        for i in 0..n {
            oc[i] = wc[i] * sv[i];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::Grid;
    use proptest::prelude::*;

    fn test_fn(g: Grid) -> GridFunction {
        GridFunction::scalar_fn(g, |x| {
            (-(x[0] * x[0] + 2.0 * x[1] * x[1] + 0.5 * x[2] * x[2])).exp() + 0.3 * x[0].sin()
        })
    }

    #[test]
    fn constant_picks_up_lambda_power() {
        let g = Grid::new(3, 2.0, 8).unwrap();
        let one = GridFunction::constant(g, 1.0);
        let out = bessel_apply(&one, 0.75, 3.0);
        for v in out.values() {
            assert!((v.re - 3f64.powf(-0.75)).abs() < 1e-14 && v.im.abs() < 1e-14);
        }
        assert_eq!(bessel_apply(&one, 0.0, 3.0), one);
    }

    #[test]
    fn quarter_powers_compose_to_half() {
        let g = Grid::new(3, 4.0, 16).unwrap();
        let u = test_fn(g);
        let twice = bessel_apply(&bessel_apply(&u, 0.25, 1.0), 0.25, 1.0);
        let half = bessel_apply(&u, 0.5, 1.0);
        assert!(twice.sub(&half).norm_l2() < 1e-14 * half.norm_l2().max(1.0));
    }

    #[test]
    fn fourier_mode_eigenvalue() {
        let g = Grid::new(3, std::f64::consts::PI, 16).unwrap();
        let u = GridFunction::scalar_fn(g, |x| (x[0] + 2.0 * x[2]).cos());
        let out = resolvent_power(&u, 1.0, Complex64::new(1.5, 2.0));
        let expect = u.scale(Complex64::new(1.0, 0.0) / Complex64::new(6.5, 2.0));
        assert!(out.sub(&expect).norm_l2() < 1e-12);
    }

    #[test]
    fn gradient_adjoint_pairing() {
        let g = Grid::new(3, 3.0, 16).unwrap();
        let u = test_fn(g);
        let v = gradient(&GridFunction::scalar_fn(g, |x| (x[1] - x[2]).sin() * x[0].cos()));
        let lhs = gradient(&u).inner(&v);
        let rhs = u.inner(&gradient_adjoint(&v));
        assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1.0));
    }

    #[test]
    fn gradient_of_mode() {
        let g = Grid::new(3, std::f64::consts::PI, 8).unwrap();
        let u = GridFunction::scalar_fn(g, |x| (3.0 * x[1]).sin());
        let du = gradient(&u);
        let expect = GridFunction::scalar_fn(g, |x| 3.0 * (3.0 * x[1]).cos());
        assert!(du.component(0).iter().all(|v| v.norm() < 1e-12));
        let diff: f64 = du
            .component(1)
            .iter()
            .zip(expect.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn multipliers_commute(s1 in 0.05f64..1.5, s2 in 0.05f64..1.5, lam in 0.2f64..4.0) {
            let g = Grid::new(3, 4.0, 8).unwrap();
            let u = test_fn(g);
            let ab = bessel_apply(&neg_laplacian(&bessel_apply(&u, s1, lam)), s2, lam);
            let ba = neg_laplacian(&bessel_apply(&bessel_apply(&u, s2, lam), s1, lam));
            prop_assert!(ab.sub(&ba).norm_l2() < 1e-12 * ab.norm_l2().max(1.0));
        }
    }
}
