//! Uniform periodic grids on `[-L, L)^d` and functions sampled on them.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::drift::{DriftField, MollifiedDrift, VectorField};
use crate::error::{Error, Result};

/// Box `[-L, L)^d` with `N` points per axis, `x_i = -L + i h`, `h = 2L/N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    d: usize,
    l: f64,
    n: usize,
}

impl Grid {
    pub fn new(d: usize, l: f64, n: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidGrid("dimension must be positive".into()));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidGrid(format!("half-width must be positive, got {l}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if (n as f64).powi(d as i32) > 1e8 {
            return Err(Error::InvalidGrid(format!("{n}^{d} points is too many")));
        }
        Ok(Self { d, l, n })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn half_width(&self) -> f64 {
        self.l
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Stride of `axis` in the flat row-major layout (axis 0 slowest).
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.d - 1 - axis) as u32)
    }

    /// Multi-index of flat index `i`.
    pub fn multi_index(&self, mut i: usize, out: &mut [usize]) {
        for k in (0..self.d).rev() {
            out[k] = i % self.n;
            i /= self.n;
        }
    }

    /// Coordinates of flat index `i`.
    pub fn point_into(&self, i: usize, out: &mut [f64]) {
        let h = self.spacing();
        let mut rest = i;
        for k in (0..self.d).rev() {
            out[k] = -self.l + (rest % self.n) as f64 * h;
            rest /= self.n;
        }
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.d];
        self.point_into(i, &mut x);
        x
    }

    /// Flat index of the grid point nearest to `x`, or `None` outside the box.
    pub fn nearest_index(&self, x: &[f64]) -> Option<usize> {
        let h = self.spacing();
        let mut idx = 0;
        for &xk in x {
            let j = ((xk + self.l) / h).round();
            if j < 0.0 || j >= self.n as f64 {
                return None;
            }
            idx = idx * self.n + j as usize;
        }
        Some(idx)
    }

    /// Index along an axis of a neighbour, with periodic wrap.
    pub fn shift(&self, i: usize, axis: usize, forward: bool) -> usize {
        let s = self.stride(axis);
        let j = (i / s) % self.n;
        if forward {
            if j + 1 == self.n {
                i + s - self.n * s
            } else {
                i + s
            }
        } else if j == 0 {
            i + (self.n - 1) * s
        } else {
            i - s
        }
    }

    /// Whether flat index `i` lies on the face `x_k = -L` for some `k`. Under
    /// periodic identification this is the whole boundary of the box.
    pub fn on_boundary(&self, i: usize) -> bool {
        (0..self.d).any(|k| (i / self.stride(k)) % self.n == 0)
    }

    /// Angular frequency `pi m / L` of FFT bin `m`; the Nyquist bin is `-N/2`.
    pub fn frequency(&self, m: usize) -> f64 {
        let n = self.n as i64;
        let signed = if (m as i64) < n / 2 { m as i64 } else { m as i64 - n };
        std::f64::consts::PI * signed as f64 / self.l
    }

    pub(crate) fn spectral(&self) -> Arc<Spectral> {
        spectral_cache(self)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d={} L={} N={}", self.d, self.l, self.n)
    }
}

/// FFT plans and frequency tables shared by every function on a grid.
pub(crate) struct Spectral {
    pub grid: Grid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `|xi|^2` per flat index.
    pub xi2: Vec<f64>,
    /// Per-axis frequency with the Nyquist bin zeroed (for odd symbols).
    pub xi_odd: Vec<f64>,
    /// Symbol of the second-order difference Laplacian, `sum (2 - 2 cos(xi_k h)) / h^2`.
    pub fd_xi2: Vec<f64>,
}

type SpectralKey = (usize, u64, usize);

fn spectral_cache(grid: &Grid) -> Arc<Spectral> {
    static CACHE: OnceLock<Mutex<HashMap<SpectralKey, Arc<Spectral>>>> = OnceLock::new();
    let key = (grid.d, grid.l.to_bits(), grid.n);
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(key)
        .or_insert_with(|| Arc::new(Spectral::new(*grid)))
        .clone()
}

impl Spectral {
    fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.n);
        let inv = planner.plan_fft_inverse(grid.n);
        let freq: Vec<f64> = (0..grid.n).map(|m| grid.frequency(m)).collect();
        let xi_odd = (0..grid.n)
            .map(|m| if m == grid.n / 2 { 0.0 } else { freq[m] })
            .collect();
        let h = grid.spacing();
        let fd: Vec<f64> = (0..grid.n)
            .map(|m| {
                let theta = 2.0 * std::f64::consts::PI * m as f64 / grid.n as f64;
                (2.0 - 2.0 * theta.cos()) / (h * h)
            })
            .collect();
        let mut xi2 = vec![0.0; grid.len()];
        let mut fd_xi2 = vec![0.0; grid.len()];
        let mut idx = vec![0; grid.d];
        for i in 0..grid.len() {
            grid.multi_index(i, &mut idx);
            xi2[i] = idx.iter().map(|&m| freq[m] * freq[m]).sum();
            fd_xi2[i] = idx.iter().map(|&m| fd[m]).sum();
        }
        Self {
            grid,
            fwd,
            inv,
            xi2,
            xi_odd,
            fd_xi2,
        }
    }

    /// Odd-symbol frequency of flat index `i` along `axis`.
    pub fn xi_axis(&self, i: usize, axis: usize) -> f64 {
        let m = (i / self.grid.stride(axis)) % self.grid.n;
        self.xi_odd[m]
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.fwd);
    }

    /// Inverse transform including the `1/N^d` normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inv);
        let scale = 1.0 / self.grid.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n;
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        let mut line = vec![Complex64::default(); n];
        for axis in 0..self.grid.d {
            let s = self.grid.stride(axis);
            if s == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = s * n;
            for base in (0..data.len()).step_by(block) {
                for off in 0..s {
                    let start = base + off;
                    for (j, l) in line.iter_mut().enumerate() {
                        *l = data[start + j * s];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, l) in line.iter().enumerate() {
                        data[start + j * s] = *l;
                    }
                }
            }
        }
    }
}

/// Scalar (`comps = 1`) or vector function on a grid, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    comps: usize,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid, comps: usize) -> Self {
        Self {
            grid,
            comps,
            values: vec![Complex64::default(); comps * grid.len()],
        }
    }

    pub fn from_values(grid: Grid, comps: usize, values: Vec<Complex64>) -> Result<Self> {
        if comps == 0 || values.len() != comps * grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values do not fit {comps} components on {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            comps,
            values,
        })
    }

    pub fn from_real(grid: Grid, comps: usize, values: &[f64]) -> Result<Self> {
        Self::from_values(
            grid,
            comps,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn scalar_fn<F: Fn(&[f64]) -> f64>(grid: Grid, f: F) -> Self {
        let mut x = vec![0.0; grid.d];
        let values = (0..grid.len())
            .map(|i| {
                grid.point_into(i, &mut x);
                Complex64::new(f(&x), 0.0)
            })
            .collect();
        Self {
            grid,
            comps: 1,
            values,
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            comps: 1,
            values: vec![Complex64::new(value, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn comps(&self) -> usize {
        self.comps
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let n = self.grid.len();
        &mut self.values[c * n..(c + 1) * n]
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Pointwise Euclidean magnitude `|v(x)|`.
    pub fn magnitude(&self) -> Vec<f64> {
        let n = self.grid.len();
        (0..n)
            .map(|i| {
                (0..self.comps)
                    .map(|c| self.values[c * n + i].norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// `(sum |v|^p h^d)^{1/p}`; `p = inf` gives the max norm.
    pub fn norm_lp(&self, p: f64) -> f64 {
        let mag = self.magnitude();
        if p.is_infinite() {
            return mag.iter().fold(0.0, |m, &v| m.max(v));
        }
        let sum: f64 = mag.iter().map(|v| v.powf(p)).sum();
        (sum * self.grid.cell_volume()).powf(1.0 / p)
    }

    pub fn norm_l2(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.norm_lp(f64::INFINITY)
    }

    /// `sum conj(self) other h^d`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        s * self.grid.cell_volume()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            grid: self.grid,
            comps: self.comps,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// Pointwise product with a real scalar weight.
    pub fn weighted(&self, w: &[f64]) -> Self {
        let n = self.grid.len();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| v * w[k % n])
            .collect();
        Self {
            grid: self.grid,
            comps: self.comps,
            values,
        }
    }

    fn zip_with<F: Fn(Complex64, Complex64) -> Complex64>(&self, other: &Self, f: F) -> Self {
        assert_eq!(self.values.len(), other.values.len(), "grid function shape mismatch");
        Self {
            grid: self.grid,
            comps: self.comps,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Value at the grid point nearest to `x` (all components).
    pub fn value_near(&self, x: &[f64]) -> Option<Vec<Complex64>> {
        let i = self.grid.nearest_index(x)?;
        let n = self.grid.len();
        Some((0..self.comps).map(|c| self.values[c * n + i]).collect())
    }
}

/// Samples a raw drift. A grid point within half a cell of a singular point
/// is evaluated half a cell away along `e_1`, and magnitudes are capped at
/// `1/h`.
pub fn sample_drift(field: &DriftField, grid: &Grid) -> Result<GridFunction> {
    let d = field.dimension();
    if d != grid.d {
        return Err(Error::InvalidArgument(format!(
            "field in dimension {d} sampled on a {}-dimensional grid",
            grid.d
        )));
    }
    let h = grid.spacing();
    let cap = 1.0 / h;
    let n = grid.len();
    let mut out = GridFunction::zeros(*grid, d);
    let mut x = vec![0.0; d];
    let mut b = vec![0.0; d];
    for i in 0..n {
        grid.point_into(i, &mut x);
        if let Some(p) = field
            .singular_points()
            .iter()
            .find(|p| crate::drift::dist(p, &x) < 0.5 * h)
        {
            x.copy_from_slice(p);
            x[0] += 0.5 * h;
        }
        field.eval_unchecked(&x, &mut b);
        let mag = crate::drift::norm(&b);
        let s = if mag > cap { cap / mag } else { 1.0 };
        for c in 0..d {
            out.values[c * n + i] = Complex64::new(b[c] * s, 0.0);
        }
    }
    Ok(out)
}

/// Samples any bounded vector field point by point.
pub fn sample_field(field: &dyn VectorField, grid: &Grid) -> Result<GridFunction> {
    let d = field.dim();
    if d != grid.d {
        return Err(Error::InvalidArgument(format!(
            "field in dimension {d} sampled on a {}-dimensional grid",
            grid.d
        )));
    }
    let n = grid.len();
    let rows = map_points(grid, |x, b| field.eval_into(x, b))?;
    let mut out = GridFunction::zeros(*grid, d);
    for (i, row) in rows.chunks(d).enumerate() {
        for c in 0..d {
            out.values[c * n + i] = Complex64::new(row[c], 0.0);
        }
    }
    Ok(out)
}

/// Samples a mollified drift; never hits a singular point since `b_n` is
/// bounded and smooth.
pub fn sample_mollified(m: &MollifiedDrift, grid: &Grid) -> Result<GridFunction> {
    sample_field(m, grid)
}

/// Evaluates `f(x, out)` at every grid point, returning row-major `d`-vectors.
fn map_points<F>(grid: &Grid, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()> + Sync,
{
    let d = grid.d;
    let mut rows = vec![0.0; grid.len() * d];
    let work = |(i, row): (usize, &mut [f64])| -> Result<()> {
        let mut x = vec![0.0; d];
        grid.point_into(i, &mut x);
        f(&x, row)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        rows.par_chunks_mut(d).enumerate().try_for_each(work)?;
    }
    #[cfg(not(feature = "parallel"))]
    {
        rows.chunks_mut(d).enumerate().try_for_each(work)?;
    }
    Ok(rows)
}
