//! Experiments on the model drift `c x / |x|^2`: the radial slope law, the
//! collapse trend for `c >= d`, and a coupled dt-ladder for weak order.

use std::sync::Arc;

use super::{simulate, PathRng, SimulationConfig, DRIFT_STEP_FRACTION};
use crate::drift::{default_epsilon, DriftField, MollifiedDrift, VectorField};
use crate::error::{Error, Result};
use crate::report::fmt_f64;
use crate::stats::{mean_ci, ratio_ci, Estimate};

/// One line of the experiment CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SdeRow {
    pub experiment: String,
    pub c: f64,
    pub d: usize,
    pub n: u32,
    pub dt: f64,
    pub paths: usize,
    pub statistic: String,
    pub value: f64,
    pub ci: f64,
}

impl SdeRow {
    pub const CSV_HEADER: &'static str = "experiment,c,d,n,dt,N,statistic,value,ci";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.experiment,
            fmt_f64(self.c),
            self.d,
            self.n,
            fmt_f64(self.dt),
            self.paths,
            self.statistic,
            fmt_f64(self.value),
            fmt_f64(self.ci)
        )
    }
}

/// Radius inside which the regularized model drift differs from `c x/|x|^2`:
/// the truncation radius `c/n` plus the mollifier radius.
pub fn stop_radius(c: f64, n: u32) -> f64 {
    c / n as f64 + default_epsilon(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeConfig {
    pub c: f64,
    pub d: usize,
    /// `|x0|`; the start is `|x0| e_1`.
    pub radius: f64,
    pub n: u32,
    pub dt: f64,
    pub paths: usize,
    pub t_max: f64,
    pub seed: u64,
    /// Number of fitting windows.
    pub windows: usize,
}

#[derive(Debug, Clone)]
pub struct SlopeReport {
    pub config: SlopeConfig,
    /// Least-squares slope of `E|X_{t^tau}|^2 - |x0|^2` against `E[t^tau]`.
    pub slope: Estimate,
    /// `2 (d - c)`.
    pub expected: f64,
    pub stop_radius: f64,
    pub stopped_fraction: f64,
    /// More than half the paths stopped before `t_max`.
    pub insufficient_survival: bool,
    /// `(t, E[t^tau], E|X_{t^tau}|^2)` per window end.
    pub windows: Vec<(f64, f64, Estimate)>,
}

impl SlopeReport {
    pub fn csv_rows(&self) -> Vec<SdeRow> {
        let cfg = &self.config;
        let row = |statistic: String, value: f64, ci: f64| SdeRow {
            experiment: "slope".into(),
            c: cfg.c,
            d: cfg.d,
            n: cfg.n,
            dt: cfg.dt,
            paths: cfg.paths,
            statistic,
            value,
            ci,
        };
        let mut rows = vec![
            row("slope".into(), self.slope.mean, self.slope.ci),
            row("expected_slope".into(), self.expected, 0.0),
            row("stop_radius".into(), self.stop_radius, 0.0),
            row("stopped_fraction".into(), self.stopped_fraction, 0.0),
        ];
        for (t, clock, m) in &self.windows {
            rows.push(row(format!("mean_sq@{}", fmt_f64(*t)), m.mean, m.ci));
            rows.push(row(format!("mean_clock@{}", fmt_f64(*t)), *clock, 0.0));
        }
        rows
    }
}

/// Fits the slope of `t -> E|X_{t ^ tau}|^2` for the regularized model drift,
/// with `tau` the first entry into the shell `|X| <= c/n + eps_n`.
pub fn radial_slope_experiment(cfg: &SlopeConfig) -> Result<SlopeReport> {
    if cfg.windows == 0 {
        return Err(Error::InvalidArgument("need at least one window".into()));
    }
    let field = MollifiedDrift::new(DriftField::model_radial(cfg.c, cfg.d)?, cfg.n)?;
    let shell = stop_radius(cfg.c, cfg.n);
    if cfg.radius <= shell {
        return Err(Error::InvalidArgument(format!(
            "|x0| = {} lies inside the shell {shell}",
            cfg.radius
        )));
    }
    let mut x0 = vec![0.0; cfg.d];
    x0[0] = cfg.radius;
    let steps = (cfg.t_max / cfg.dt).round() as usize;
    if steps % cfg.windows != 0 {
        return Err(Error::InvalidArgument(format!(
            "{} windows do not divide {steps} steps",
            cfg.windows
        )));
    }
    let sim = SimulationConfig::new(x0, cfg.dt, cfg.t_max, cfg.paths, cfg.seed)
        .with_snapshot_every(steps / cfg.windows)
        .with_stop_radius(shell);
    let ens = simulate(&field, &sim)?;
    let r0 = cfg.radius * cfg.radius;
    let snaps = ens.times().len();
    let sq = |i: usize, k: usize| ens.state(i, k).iter().map(|v| v * v).sum::<f64>() - r0;

    let mut windows = Vec::with_capacity(snaps - 1);
    let mut weights = Vec::with_capacity(snaps - 1);
    for k in 1..snaps {
        let clock: Vec<f64> = (0..cfg.paths).map(|i| ens.stopped_clock(i, k)).collect();
        let m: Vec<f64> = (0..cfg.paths).map(|i| sq(i, k) + r0).collect();
        let mc = mean_ci(&clock).mean;
        weights.push(mc);
        windows.push((ens.times()[k], mc, mean_ci(&m)));
    }
    // Regression through the origin on the window means, written per path so
    // that the ratio estimator supplies the radius.
    let mut ys = vec![0.0; cfg.paths];
    let mut xs = vec![0.0; cfg.paths];
    for i in 0..cfg.paths {
        for (k, w) in (1..snaps).zip(&weights) {
            ys[i] += w * sq(i, k);
            xs[i] += w * ens.stopped_clock(i, k);
        }
    }
    let stopped_fraction = ens.stopped_fraction();
    Ok(SlopeReport {
        config: cfg.clone(),
        slope: ratio_ci(&ys, &xs),
        expected: 2.0 * (cfg.d as f64 - cfg.c),
        stop_radius: shell,
        stopped_fraction,
        insufficient_survival: stopped_fraction > 0.5,
        windows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseRow {
    pub n: u32,
    /// `E|X_t|^2` from `x0 = 0`.
    pub second_moment: Estimate,
}

#[derive(Debug, Clone)]
pub struct CollapseReport {
    pub c: f64,
    pub d: usize,
    pub t: f64,
    pub dt: f64,
    pub paths: usize,
    pub rows: Vec<CollapseRow>,
}

impl CollapseReport {
    pub fn is_strictly_decreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].second_moment.mean < w[0].second_moment.mean)
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].second_moment.mean <= w[0].second_moment.mean)
    }

    /// Every pair of rows agrees within the sum of their radii.
    pub fn is_flat_within_ci(&self) -> bool {
        self.rows.iter().enumerate().all(|(i, a)| {
            self.rows[i + 1..].iter().all(|b| {
                (a.second_moment.mean - b.second_moment.mean).abs()
                    <= a.second_moment.ci + b.second_moment.ci
            })
        })
    }

    pub fn csv_rows(&self) -> Vec<SdeRow> {
        self.rows
            .iter()
            .map(|r| SdeRow {
                experiment: "collapse".into(),
                c: self.c,
                d: self.d,
                n: r.n,
                dt: self.dt,
                paths: self.paths,
                statistic: format!("mean_sq@{}", fmt_f64(self.t)),
                value: r.second_moment.mean,
                ci: r.second_moment.ci,
            })
            .collect()
    }
}

/// `E|X_t|^2` from the origin for each regularization level. The levels share
/// the seed, so their Brownian paths coincide.
pub fn collapse_experiment(
    c: f64,
    d: usize,
    n_list: &[u32],
    t: f64,
    dt: f64,
    paths: usize,
    seed: u64,
) -> Result<CollapseReport> {
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let field = MollifiedDrift::new(DriftField::model_radial(c, d)?, n)?;
        let sim = SimulationConfig::new(vec![0.0; d], dt, t, paths, seed)
            .with_snapshot_every((t / dt).round().max(1.0) as usize);
        let ens = simulate(&field, &sim)?;
        let second_moment = ens.expectation(|x| x.iter().map(|v| v * v).sum(), t)?;
        rows.push(CollapseRow { n, second_moment });
    }
    Ok(CollapseReport {
        c,
        d,
        t,
        dt,
        paths,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderRow {
    pub dt: f64,
    pub estimate: Estimate,
    /// `E f(X^dt) - E f(X^{2 dt})` on coupled paths; `None` on the first level.
    pub difference: Option<Estimate>,
}

/// Estimates `E f(X_t)` at `dt0, dt0/2, ...` with every level driven by the
/// same Brownian path, so successive differences isolate the time-step bias.
#[allow(clippy::too_many_arguments)]
pub fn weak_order_ladder<F>(
    field: Arc<dyn VectorField>,
    length_scale: f64,
    x0: &[f64],
    f: F,
    t: f64,
    dt0: f64,
    levels: usize,
    paths: usize,
    seed: u64,
) -> Result<Vec<LadderRow>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = field.dim();
    if levels == 0 || paths == 0 || x0.len() != d {
        return Err(Error::InvalidArgument("ladder needs levels, paths and a d-point".into()));
    }
    let coarse_steps = (t / dt0).round();
    if !(coarse_steps >= 1.0) || (coarse_steps * dt0 - t).abs() > 1e-9 * t {
        return Err(Error::InvalidArgument(format!("t = {t} is not a multiple of dt = {dt0}")));
    }
    let sup = field.sup_bound().unwrap_or(f64::INFINITY);
    let budget = DRIFT_STEP_FRACTION * length_scale;
    if dt0 * sup > budget {
        return Err(Error::StepTooLarge { drift_step: dt0 * sup, budget });
    }
    let fine = 1usize << (levels - 1);
    let fine_steps = coarse_steps as usize * fine;
    let dt_fine = dt0 / fine as f64;

    let one_path = |i: usize| -> Result<Vec<f64>> {
        let mut rng = PathRng::new(seed, i as u64);
        let mut xs: Vec<Vec<f64>> = vec![x0.to_vec(); levels];
        let mut dw: Vec<Vec<f64>> = vec![vec![0.0; d]; levels];
        let mut b = vec![0.0; d];
        let mut z = vec![0.0; d];
        for j in 1..=fine_steps {
            for v in z.iter_mut() {
                *v = dt_fine.sqrt() * rng.normal();
            }
            for l in 0..levels {
                let ratio = 1usize << (levels - 1 - l);
                for (w, zi) in dw[l].iter_mut().zip(&z) {
                    *w += zi;
                }
                if j % ratio == 0 {
                    let h = dt_fine * ratio as f64;
                    field.eval_into(&xs[l], &mut b)?;
                    for k in 0..d {
                        xs[l][k] += -b[k] * h + std::f64::consts::SQRT_2 * dw[l][k];
                        dw[l][k] = 0.0;
                    }
                }
            }
        }
        Ok(xs.iter().map(|x| f(x)).collect())
    };
    #[cfg(feature = "parallel")]
    let values: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..paths).into_par_iter().map(one_path).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let values: Vec<Vec<f64>> = (0..paths).map(one_path).collect::<Result<_>>()?;

    Ok((0..levels)
        .map(|l| {
            let col: Vec<f64> = values.iter().map(|v| v[l]).collect();
            let difference = (l > 0).then(|| {
                let diff: Vec<f64> = values.iter().map(|v| v[l] - v[l - 1]).collect();
                mean_ci(&diff)
            });
            LadderRow {
                dt: dt0 / (1usize << l) as f64,
                estimate: mean_ci(&col),
                difference,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_radius() {
        assert!((stop_radius(0.2, 16) - (0.0125 + 1.0 / 17.0)).abs() < 1e-15);
    }

    #[test]
    fn brownian_slope_is_two_d() {
        let cfg = SlopeConfig {
            c: 0.0,
            d: 3,
            radius: 1.0,
            n: 8,
            dt: 1e-3,
            paths: 8000,
            t_max: 0.2,
            seed: 3,
            windows: 4,
        };
        let rep = radial_slope_experiment(&cfg).unwrap();
        assert!((rep.slope.mean - 6.0).abs() < 3.0 * rep.slope.ci, "{:?}", rep.slope);
        assert_eq!(rep.windows.len(), 4);
        assert_eq!(rep.csv_rows()[0].statistic, "slope");
    }

    #[test]
    fn start_inside_shell_is_rejected() {
        let cfg = SlopeConfig {
            c: 3.0,
            d: 3,
            radius: 0.3,
            n: 4,
            dt: 1e-3,
            paths: 10,
            t_max: 0.1,
            seed: 1,
            windows: 1,
        };
        assert!(radial_slope_experiment(&cfg).is_err());
    }

    #[test]
    fn control_collapse_is_flat() {
        let rep = collapse_experiment(0.0, 3, &[2, 4], 0.1, 1e-3, 2000, 5).unwrap();
        assert!(rep.is_flat_within_ci());
        assert_eq!(rep.rows[0].second_moment, rep.rows[1].second_moment);
        assert!((rep.rows[0].second_moment.mean - 0.6).abs() < 3.0 * rep.rows[0].second_moment.ci);
    }

    #[test]
    fn ladder_differences_shrink_with_dt() {
        let m = MollifiedDrift::new(DriftField::model_radial(1.0, 3).unwrap(), 2).unwrap();
        let eps = m.epsilon();
        let rows = weak_order_ladder(
            Arc::new(m),
            eps,
            &[0.5, 0.0, 0.0],
            |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp(),
            0.2,
            0.01,
            4,
            4000,
            1,
        )
        .unwrap();
        let diffs: Vec<f64> = rows[1..].iter().map(|r| r.difference.unwrap().mean.abs()).collect();
        assert!(diffs.windows(2).all(|w| w[1] < w[0]), "{diffs:?}");
        let ratio = diffs[0] / diffs[2];
        assert!((2.0..8.0).contains(&ratio), "{diffs:?}");
    }
}
