//! Euler–Maruyama ensembles for `X(t) = x - int_0^t b_n(X(s)) ds + sqrt(2) W(t)`.
//!
//! Every path owns a ChaCha8 stream selected by its index under the master
//! seed, and normals come from the Box–Muller transform, so a path depends on
//! `(master_seed, index)` alone and results do not depend on thread count.

mod experiments;
mod martingale;

use std::io::{self, Write};
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::drift::{MollifiedDrift, VectorField};
use crate::error::{Error, Result};
use crate::stats::{mean_ci, Estimate};

pub use experiments::{
    collapse_experiment, radial_slope_experiment, stop_radius, weak_order_ladder, CollapseReport,
    CollapseRow, LadderRow, SdeRow, SlopeConfig, SlopeReport,
};
pub use martingale::{martingale_test, MartingaleReport, Polynomial, TestFunction, WindowResidual};

/// `dt sup|b|` may not exceed this fraction of the field's length scale.
pub const DRIFT_STEP_FRACTION: f64 = 0.1;

/// Snapshots kept per path when no stride is given.
pub const DEFAULT_SNAPSHOTS: usize = 100;

/// Gaussian source for one path.
#[derive(Debug, Clone)]
pub struct PathRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl PathRng {
    pub fn new(master_seed: u64, path: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(path);
        Self { inner, spare: None }
    }

    /// Uniform on `(0, 1]` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal; Box–Muller, both outputs used.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let r = (-2.0 * self.uniform().ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * self.uniform();
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub x0: Vec<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub paths: usize,
    pub seed: u64,
    /// Steps between stored snapshots; `None` picks one giving at most
    /// [`DEFAULT_SNAPSHOTS`] intervals.
    pub snapshot_every: Option<usize>,
    /// Paths are frozen on first reaching `|X| <= stop_radius`.
    pub stop_radius: Option<f64>,
}

impl SimulationConfig {
    pub fn new(x0: Vec<f64>, dt: f64, t_end: f64, paths: usize, seed: u64) -> Self {
        Self {
            x0,
            dt,
            t_end,
            paths,
            seed,
            snapshot_every: None,
            stop_radius: None,
        }
    }

    pub fn with_snapshot_every(mut self, every: usize) -> Self {
        self.snapshot_every = Some(every);
        self
    }

    pub fn with_stop_radius(mut self, radius: f64) -> Self {
        self.stop_radius = Some(radius);
        self
    }

    fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        let steps = (self.t_end / self.dt).round();
        if (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(Error::InvalidArgument(format!(
                "t_end = {} is not a multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(steps as usize)
    }
}

fn default_stride(steps: usize) -> usize {
    (1..=steps.max(1))
        .find(|s| steps % s == 0 && steps / s <= DEFAULT_SNAPSHOTS)
        .unwrap_or(1)
}

/// Per-path quantities accumulated at every step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathSummary {
    /// Left-point sum of `|b_n(X)| dt` up to the end or the stopping time.
    pub drift_integral: f64,
    /// Largest single-step displacement.
    pub max_step: f64,
    /// `max_s |X_s|`.
    pub max_radius: f64,
    pub stop_time: Option<f64>,
}

/// A simulated ensemble. Immutable once built.
#[derive(Clone)]
pub struct PathEnsemble {
    field: Arc<dyn VectorField>,
    config: SimulationConfig,
    d: usize,
    steps: usize,
    stride: usize,
    times: Vec<f64>,
    /// `[path][snapshot][coordinate]`.
    states: Vec<f64>,
    /// Brownian motion `W` at the snapshot times, same layout.
    brownian: Vec<f64>,
    summaries: Vec<PathSummary>,
}

impl std::fmt::Debug for PathEnsemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PathEnsemble")
            .field("config", &self.config)
            .field("steps", &self.steps)
            .field("stride", &self.stride)
            .finish_non_exhaustive()
    }
}

/// Simulates a regularized drift; the step budget is `0.1 eps_n`.
pub fn simulate(field: &MollifiedDrift, cfg: &SimulationConfig) -> Result<PathEnsemble> {
    let scale = field.epsilon();
    simulate_field(Arc::new(field.clone()), scale, cfg)
}

/// Simulates any bounded field. `length_scale` sets the drift-step budget
/// `dt sup|b| <= 0.1 length_scale`.
pub fn simulate_field(
    field: Arc<dyn VectorField>,
    length_scale: f64,
    cfg: &SimulationConfig,
) -> Result<PathEnsemble> {
    let d = field.dim();
    if cfg.x0.len() != d {
        return Err(Error::InvalidArgument(format!(
            "x0 has {} coordinates, field has {d}",
            cfg.x0.len()
        )));
    }
    if cfg.paths == 0 {
        return Err(Error::InvalidArgument("need at least one path".into()));
    }
    let steps = cfg.steps()?;
    let sup = field.sup_bound().ok_or_else(|| {
        Error::InvalidArgument("simulation needs a field with a known sup bound".into())
    })?;
    let budget = DRIFT_STEP_FRACTION * length_scale;
    if cfg.dt * sup > budget {
        return Err(Error::StepTooLarge {
            drift_step: cfg.dt * sup,
            budget,
        });
    }
    let stride = match cfg.snapshot_every {
        Some(0) => return Err(Error::InvalidArgument("snapshot stride must be positive".into())),
        Some(s) if steps % s != 0 => {
            return Err(Error::InvalidArgument(format!(
                "snapshot stride {s} does not divide {steps} steps"
            )))
        }
        Some(s) => s,
        None => default_stride(steps),
    };
    if let Some(r) = cfg.stop_radius {
        if crate::drift::norm(&cfg.x0) <= r {
            return Err(Error::InvalidArgument(format!(
                "x0 already lies inside the stopping radius {r}"
            )));
        }
    }
    let snaps = steps / stride + 1;
    let per_path = snaps * d;
    let mut states = vec![0.0; cfg.paths * per_path];
    let mut brownian = vec![0.0; cfg.paths * per_path];
    let mut summaries = vec![PathSummary::default(); cfg.paths];

    let work = |(i, ((xs, ws), summary)): (usize, ((&mut [f64], &mut [f64]), &mut PathSummary))| {
        run_path(&*field, cfg, steps, stride, i as u64, xs, ws, summary)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        states
            .par_chunks_mut(per_path)
            .zip(brownian.par_chunks_mut(per_path))
            .zip(summaries.par_iter_mut())
            .enumerate()
            .try_for_each(work)?;
    }
    #[cfg(not(feature = "parallel"))]
    {
        states
            .chunks_mut(per_path)
            .zip(brownian.chunks_mut(per_path))
            .zip(summaries.iter_mut())
            .enumerate()
            .try_for_each(work)?;
    }

    let times = (0..snaps).map(|k| (k * stride) as f64 * cfg.dt).collect();
    Ok(PathEnsemble {
        field,
        config: cfg.clone(),
        d,
        steps,
        stride,
        times,
        states,
        brownian,
        summaries,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_path(
    field: &dyn VectorField,
    cfg: &SimulationConfig,
    steps: usize,
    stride: usize,
    index: u64,
    xs: &mut [f64],
    ws: &mut [f64],
    summary: &mut PathSummary,
) -> Result<()> {
    let d = cfg.x0.len();
    let mut rng = PathRng::new(cfg.seed, index);
    let mut x = cfg.x0.clone();
    let mut w = vec![0.0; d];
    let mut b = vec![0.0; d];
    let sqrt_dt = cfg.dt.sqrt();
    let noise = std::f64::consts::SQRT_2 * sqrt_dt;
    xs[..d].copy_from_slice(&x);
    summary.max_radius = crate::drift::norm(&x);
    let mut stopped = false;
    for k in 1..=steps {
        if !stopped {
            field.eval_into(&x, &mut b)?;
            summary.drift_integral += crate::drift::norm(&b) * cfg.dt;
            let mut step2 = 0.0;
            for j in 0..d {
                let z = rng.normal();
                w[j] += sqrt_dt * z;
                let dx = -b[j] * cfg.dt + noise * z;
                x[j] += dx;
                step2 += dx * dx;
            }
            summary.max_step = summary.max_step.max(step2.sqrt());
            let r = crate::drift::norm(&x);
            summary.max_radius = summary.max_radius.max(r);
            if cfg.stop_radius.is_some_and(|s| r <= s) {
                stopped = true;
                summary.stop_time = Some(k as f64 * cfg.dt);
            }
        }
        if k % stride == 0 {
            let at = (k / stride) * d;
            xs[at..at + d].copy_from_slice(&x);
            ws[at..at + d].copy_from_slice(&w);
        }
    }
    Ok(())
}

impl PathEnsemble {
    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn paths(&self) -> usize {
        self.config.paths
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn field(&self) -> &dyn VectorField {
        &*self.field
    }

    /// Snapshot times, starting at 0 and ending at `t_end`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Index of the snapshot at time `t`.
    pub fn snapshot_index(&self, t: f64) -> Result<usize> {
        let step = self.stride as f64 * self.config.dt;
        let k = (t / step).round();
        if t < 0.0 || k as usize >= self.times.len() || (k * step - t).abs() > 1e-9 * step.max(t) {
            return Err(Error::InvalidArgument(format!(
                "t = {t} is not a stored snapshot time (spacing {step}, horizon {})",
                self.config.t_end
            )));
        }
        Ok(k as usize)
    }

    pub fn state(&self, path: usize, snapshot: usize) -> &[f64] {
        let at = (path * self.times.len() + snapshot) * self.d;
        &self.states[at..at + self.d]
    }

    pub fn brownian(&self, path: usize, snapshot: usize) -> &[f64] {
        let at = (path * self.times.len() + snapshot) * self.d;
        &self.brownian[at..at + self.d]
    }

    pub fn summaries(&self) -> &[PathSummary] {
        &self.summaries
    }

    /// `t ^ tau` for a path at snapshot `k`.
    pub fn stopped_clock(&self, path: usize, snapshot: usize) -> f64 {
        let t = self.times[snapshot];
        self.summaries[path].stop_time.map_or(t, |s| s.min(t))
    }

    pub fn stopped_fraction(&self) -> f64 {
        let n = self.summaries.iter().filter(|s| s.stop_time.is_some()).count();
        n as f64 / self.paths() as f64
    }

    /// Values of `f(X_t)` in path order.
    pub fn values_at<F: Fn(&[f64]) -> f64>(&self, f: F, t: f64) -> Result<Vec<f64>> {
        let k = self.snapshot_index(t)?;
        Ok((0..self.paths()).map(|i| f(self.state(i, k))).collect())
    }

    /// Mean and 99% radius of `f(X_t)`.
    pub fn expectation<F: Fn(&[f64]) -> f64>(&self, f: F, t: f64) -> Result<Estimate> {
        Ok(mean_ci(&self.values_at(f, t)?))
    }

    /// Mean of `int_0^t |b_n(X_s)| ds` over paths (horizon `t_end`).
    pub fn drift_integral(&self) -> Estimate {
        let xs: Vec<f64> = self.summaries.iter().map(|s| s.drift_integral).collect();
        mean_ci(&xs)
    }

    /// Mean of `|b(X_t) - other(X_t)|`.
    pub fn drift_discrepancy(&self, other: &dyn VectorField, t: f64) -> Result<Estimate> {
        let k = self.snapshot_index(t)?;
        let mut a = vec![0.0; self.d];
        let mut b = vec![0.0; self.d];
        let mut out = Vec::with_capacity(self.paths());
        for i in 0..self.paths() {
            let x = self.state(i, k);
            self.field.eval_into(x, &mut a)?;
            other.eval_into(x, &mut b)?;
            let diff: f64 = a.iter().zip(&b).map(|(p, q)| (p - q) * (p - q)).sum();
            out.push(diff.sqrt());
        }
        Ok(mean_ci(&out))
    }

    /// Flat binary dump: little-endian `u64` header `(d, N, snapshots)`, then
    /// the states as `f64` in `[path][snapshot][coordinate]` order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        for v in [self.d, self.paths(), self.times.len()] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        for v in &self.states {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Reads a dump written by [`PathEnsemble::write_binary`]: `(d, N, snapshots, values)`.
pub fn read_binary(bytes: &[u8]) -> Result<(usize, usize, usize, Vec<f64>)> {
    let word = |i: usize| -> Result<[u8; 8]> {
        bytes
            .get(8 * i..8 * i + 8)
            .and_then(|s| s.try_into().ok())
            .ok_or_else(|| Error::Parse("truncated path dump".into()))
    };
    let d = u64::from_le_bytes(word(0)?) as usize;
    let n = u64::from_le_bytes(word(1)?) as usize;
    let s = u64::from_le_bytes(word(2)?) as usize;
    let count = d * n * s;
    if bytes.len() != 8 * (3 + count) {
        return Err(Error::Parse(format!(
            "path dump holds {} bytes, header announces {}",
            bytes.len(),
            8 * (3 + count)
        )));
    }
    let values = (0..count)
        .map(|i| word(3 + i).map(f64::from_le_bytes))
        .collect::<Result<_>>()?;
    Ok((d, n, s, values))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExceedanceRow {
    pub radius: f64,
    /// `P[max_{s <= t_end} |X_s| > R]`.
    pub probability: Estimate,
}

/// Empirical exceedance probabilities of the running maximum radius.
pub fn explosion_check(ens: &PathEnsemble, radii: &[f64]) -> Vec<ExceedanceRow> {
    radii
        .iter()
        .map(|&radius| {
            let hits: Vec<f64> = ens
                .summaries()
                .iter()
                .map(|s| if s.max_radius > radius { 1.0 } else { 0.0 })
                .collect();
            ExceedanceRow {
                radius,
                probability: mean_ci(&hits),
            }
        })
        .collect()
}

/// `P[max_{s <= t} |sqrt 2 W_s| > R] <= 4 d Phi^c(R / sqrt(2 d t))`, capped at one.
pub fn brownian_exceedance_bound(d: usize, t: f64, radius: f64) -> f64 {
    if t <= 0.0 {
        return if radius < 0.0 { 1.0 } else { 0.0 };
    }
    let z = radius / (2.0 * d as f64 * t).sqrt();
    (4.0 * d as f64 * Normal::standard().sf(z)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::DriftField;

    fn zero_field(d: usize) -> MollifiedDrift {
        MollifiedDrift::new(DriftField::zero(d).unwrap(), 1).unwrap()
    }

    fn model(c: f64, n: u32) -> MollifiedDrift {
        MollifiedDrift::new(DriftField::model_radial(c, 3).unwrap(), n).unwrap()
    }

    #[test]
    fn normals_have_unit_moments() {
        let mut rng = PathRng::new(7, 0);
        let zs: Vec<f64> = (0..200_000).map(|_| rng.normal()).collect();
        let m = mean_ci(&zs);
        assert!(m.mean.abs() < 3.0 * m.ci);
        let sq: Vec<f64> = zs.iter().map(|z| z * z).collect();
        let v = mean_ci(&sq);
        assert!((v.mean - 1.0).abs() < 3.0 * v.ci);
    }

    #[test]
    fn streams_differ_between_paths() {
        let a = PathRng::new(1, 0).normal();
        let b = PathRng::new(1, 1).normal();
        let c = PathRng::new(2, 0).normal();
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn brownian_second_moment() {
        let cfg = SimulationConfig::new(vec![0.3, 0.0, -0.2], 0.01, 0.5, 20_000, 11);
        let ens = simulate(&zero_field(3), &cfg).unwrap();
        let x0 = cfg.x0.clone();
        let est = ens
            .expectation(|x| x.iter().zip(&x0).map(|(a, b)| (a - b) * (a - b)).sum(), 0.5)
            .unwrap();
        assert!((est.mean - 3.0).abs() < 3.0 * est.ci, "{est:?}");
        // W increments: mean zero, variance t per coordinate.
        let k = ens.snapshot_index(0.5).unwrap();
        let w1: Vec<f64> = (0..ens.paths()).map(|i| ens.brownian(i, k)[0]).collect();
        let m = mean_ci(&w1);
        assert!(m.mean.abs() < 3.0 * m.ci);
        let w2: Vec<f64> = w1.iter().map(|w| w * w).collect();
        let v = mean_ci(&w2);
        assert!((v.mean - 0.5).abs() < 3.0 * v.ci);
    }

    #[test]
    fn reproducible_bit_for_bit() {
        let cfg = SimulationConfig::new(vec![1.0, 0.0, 0.0], 1e-3, 0.1, 300, 5);
        let a = simulate(&model(0.2, 4), &cfg).unwrap();
        let b = simulate(&model(0.2, 4), &cfg).unwrap();
        assert_eq!(a.states, b.states);
        assert_eq!(a.summaries, b.summaries);
        // A path is determined by its index alone.
        let small = simulate(&model(0.2, 4), &SimulationConfig { paths: 10, ..cfg }).unwrap();
        assert_eq!(small.state(7, 50), a.state(7, 50));
    }

    #[test]
    fn unit_function_has_zero_radius() {
        let cfg = SimulationConfig::new(vec![0.0; 3], 0.01, 0.1, 50, 1);
        let ens = simulate(&zero_field(3), &cfg).unwrap();
        let e = ens.expectation(|_| 1.0, 0.1).unwrap();
        assert_eq!((e.mean, e.ci), (1.0, 0.0));
    }

    #[test]
    fn drift_step_budget_enforced() {
        let m = model(0.2, 16);
        let cfg = SimulationConfig::new(vec![1.0, 0.0, 0.0], 0.01, 0.1, 10, 1);
        assert!(matches!(simulate(&m, &cfg), Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn snapshot_times_are_checked() {
        let cfg = SimulationConfig::new(vec![0.0; 3], 0.01, 0.1, 5, 1).with_snapshot_every(5);
        let ens = simulate(&zero_field(3), &cfg).unwrap();
        assert_eq!(ens.times().len(), 3);
        assert!(ens.snapshot_index(0.05).is_ok());
        assert!(ens.snapshot_index(0.03).is_err());
        assert!(simulate(&zero_field(3), &cfg.clone().with_snapshot_every(3)).is_err());
    }

    #[test]
    fn antisymmetric_observable_vanishes_for_symmetric_drift() {
        let cfg = SimulationConfig::new(vec![0.0; 3], 1e-3, 0.2, 20_000, 3);
        let ens = simulate(&model(0.2, 4), &cfg).unwrap();
        let e = ens.expectation(|x| x[0].powi(3), 0.2).unwrap();
        assert!(e.mean.abs() < 3.0 * e.ci, "{e:?}");
    }

    #[test]
    fn drift_integral_is_finite_and_stable_in_n() {
        let cfg = SimulationConfig::new(vec![1.0, 0.0, 0.0], 5e-4, 0.2, 4000, 9);
        let a = simulate(&model(0.2, 4), &cfg).unwrap().drift_integral();
        let b = simulate(&model(0.2, 8), &cfg).unwrap().drift_integral();
        assert!(a.mean.is_finite() && b.mean.is_finite());
        assert!((a.mean - b.mean).abs() < 3.0 * (a.ci + b.ci) + 0.02 * a.mean, "{a:?} {b:?}");
    }

    #[test]
    fn exceedance_matches_gaussian_bound() {
        let cfg = SimulationConfig::new(vec![0.0; 3], 1e-3, 0.25, 10_000, 4);
        let ens = simulate(&zero_field(3), &cfg).unwrap();
        let rows = explosion_check(&ens, &[0.0, 0.5, 1.0, 2.0, 3.0]);
        assert_eq!(rows[0].probability.mean, 1.0);
        assert!(rows.windows(2).all(|w| w[1].probability.mean <= w[0].probability.mean));
        for r in &rows[1..] {
            let bound = brownian_exceedance_bound(3, 0.25, r.radius);
            assert!(r.probability.mean <= bound + r.probability.ci, "{r:?} {bound}");
        }
    }

    #[test]
    fn binary_dump_round_trips() {
        let cfg = SimulationConfig::new(vec![0.1, 0.2, 0.3], 0.01, 0.05, 4, 2).with_snapshot_every(1);
        let ens = simulate(&zero_field(3), &cfg).unwrap();
        let mut buf = Vec::new();
        ens.write_binary(&mut buf).unwrap();
        let (d, n, s, v) = read_binary(&buf).unwrap();
        assert_eq!((d, n, s), (3, 4, 6));
        assert_eq!(v[..3], [0.1, 0.2, 0.3]);
        assert_eq!(&v[3 * 6 + 9..3 * 6 + 12], ens.state(1, 3));
        assert!(read_binary(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn stopped_paths_freeze() {
        let cfg = SimulationConfig::new(vec![0.3, 0.0, 0.0], 1e-3, 0.2, 500, 8).with_stop_radius(0.25);
        let ens = simulate(&zero_field(3), &cfg).unwrap();
        assert!(ens.stopped_fraction() > 0.1);
        let last = ens.times().len() - 1;
        for i in 0..ens.paths() {
            if let Some(tau) = ens.summaries()[i].stop_time {
                assert!(crate::drift::norm(ens.state(i, last)) <= 0.25);
                assert!(ens.stopped_clock(i, last) == tau);
            }
        }
    }

    #[test]
    fn step_modulus_scales_like_sqrt_dt_log() {
        let mut ratios = Vec::new();
        for dt in [4e-3, 1e-3, 2.5e-4] {
            let cfg = SimulationConfig::new(vec![0.0; 3], dt, 0.5, 400, 6);
            let ens = simulate(&zero_field(3), &cfg).unwrap();
            let m: f64 = ens.summaries().iter().map(|s| s.max_step).sum::<f64>() / 400.0;
            ratios.push(m / (dt * (ens.steps() as f64).ln()).sqrt());
        }
        let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1.3, "{ratios:?}");
    }
}
