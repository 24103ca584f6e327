//! Drift fields, analytic class certificates, regularized drifts and cutoffs.
//!
//! The model family is the radial field `b(x) = c x / |x|^2` in `d >= 3`
//! dimensions; it is the only family with closed-form certificates. Everything
//! else is handled numerically (see [`crate::operators`]).

mod certificate;
mod cutoff;
mod descriptor;
mod kato;
mod mollifier;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use certificate::{
    admissibility_threshold, kappa, m_d_constant, model_certificate,
    model_form_bounded_certificate, nonexistence_threshold, Certificate, ClassTag, Thresholds,
};
pub use cutoff::{derivative_bounds, Cutoff, Upsilon};
pub use descriptor::{DescribedKind, DriftDescriptor};
pub use kato::{kato_kernel, kato_norm_estimate, KatoEstimate};
pub use mollifier::{
    bump, default_epsilon, mollified_eval, mollifier_normalization, MollifiedDrift, RadialProfile,
    DEFAULT_QUADRATURE_ORDER,
};

/// Anything that can be evaluated pointwise as a vector field on `R^d`.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `b(x)` into `out`.
    fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    /// Upper bound on `sup |b|`, when one is known.
    fn sup_bound(&self) -> Option<f64> {
        None
    }
}

/// Bounded smooth drifts with closed-form evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothField {
    /// `b = v` everywhere.
    Constant(Vec<f64>),
    /// `b(x) = amplitude * exp(-|x|^2 / (2 width^2)) * direction`.
    GaussianBump {
        amplitude: f64,
        width: f64,
        direction: Vec<f64>,
    },
}

impl SmoothField {
    fn sup_norm(&self) -> f64 {
        match self {
            SmoothField::Constant(v) => norm(v),
            SmoothField::GaussianBump {
                amplitude,
                direction,
                ..
            } => amplitude.abs() * norm(direction),
        }
    }
}

type FieldFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A user-supplied field. Only numerical estimates apply to it.
#[derive(Clone)]
pub struct CustomField {
    pub name: String,
    pub sup_bound: Option<f64>,
    f: Arc<FieldFn>,
}

impl CustomField {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            sup_bound: None,
            f: Arc::new(f),
        }
    }

    pub fn with_sup_bound(mut self, bound: f64) -> Self {
        self.sup_bound = Some(bound);
        self
    }
}

impl fmt::Debug for CustomField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomField")
            .field("name", &self.name)
            .field("sup_bound", &self.sup_bound)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum DriftKind {
    ModelRadial { c: f64 },
    BoundedSmooth(SmoothField),
    Custom(CustomField),
}

/// A drift `b: R^d -> R^d` together with its (finite) singular set.
#[derive(Debug, Clone)]
pub struct DriftField {
    kind: DriftKind,
    d: usize,
    singular_points: Vec<Vec<f64>>,
}

impl DriftField {
    /// `b(x) = c x / |x|^2`, singular at the origin.
    pub fn model_radial(c: f64, d: usize) -> Result<Self> {
        check_dim(d)?;
        if !c.is_finite() || c < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "model strength c must be finite and nonnegative, got {c}"
            )));
        }
        Ok(Self {
            kind: DriftKind::ModelRadial { c },
            d,
            singular_points: vec![vec![0.0; d]],
        })
    }

    pub fn bounded_smooth(field: SmoothField, d: usize) -> Result<Self> {
        check_dim(d)?;
        let dir_len = match &field {
            SmoothField::Constant(v) => v.len(),
            SmoothField::GaussianBump {
                direction, width, ..
            } => {
                if *width <= 0.0 {
                    return Err(Error::InvalidArgument("bump width must be positive".into()));
                }
                direction.len()
            }
        };
        if dir_len != d {
            return Err(Error::InvalidArgument(format!(
                "vector of length {dir_len} does not match dimension {d}"
            )));
        }
        Ok(Self {
            kind: DriftKind::BoundedSmooth(field),
            d,
            singular_points: Vec::new(),
        })
    }

    pub fn custom(field: CustomField, d: usize, singular_points: Vec<Vec<f64>>) -> Result<Self> {
        check_dim(d)?;
        if singular_points.iter().any(|p| p.len() != d) {
            return Err(Error::InvalidArgument(
                "singular point dimension mismatch".into(),
            ));
        }
        Ok(Self {
            kind: DriftKind::Custom(field),
            d,
            singular_points,
        })
    }

    pub fn zero(d: usize) -> Result<Self> {
        Self::bounded_smooth(SmoothField::Constant(vec![0.0; d]), d)
    }

    pub fn kind(&self) -> &DriftKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn singular_points(&self) -> &[Vec<f64>] {
        &self.singular_points
    }

    /// Strength `c` of the model field, if this is one.
    pub fn model_strength(&self) -> Option<f64> {
        match self.kind {
            DriftKind::ModelRadial { c } => Some(c),
            _ => None,
        }
    }

    /// Same field with `c` (or the amplitude) multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let kind = match &self.kind {
            DriftKind::ModelRadial { c } => DriftKind::ModelRadial { c: c * factor },
            DriftKind::BoundedSmooth(SmoothField::Constant(v)) => {
                DriftKind::BoundedSmooth(SmoothField::Constant(
                    v.iter().map(|x| x * factor).collect(),
                ))
            }
            DriftKind::BoundedSmooth(SmoothField::GaussianBump {
                amplitude,
                width,
                direction,
            }) => DriftKind::BoundedSmooth(SmoothField::GaussianBump {
                amplitude: amplitude * factor,
                width: *width,
                direction: direction.clone(),
            }),
            DriftKind::Custom(cf) => {
                let inner = cf.f.clone();
                DriftKind::Custom(CustomField {
                    name: format!("{}*{factor}", cf.name),
                    sup_bound: cf.sup_bound.map(|s| s * factor.abs()),
                    f: Arc::new(move |x: &[f64], out: &mut [f64]| {
                        inner(x, out);
                        out.iter_mut().for_each(|o| *o *= factor);
                    }),
                })
            }
        };
        Ok(Self {
            kind,
            d: self.d,
            singular_points: self.singular_points.clone(),
        })
    }

    /// Whether `x` coincides with a point of the singular set.
    pub fn is_singular_at(&self, x: &[f64]) -> bool {
        self.singular_points
            .iter()
            .any(|p| p.iter().zip(x).all(|(a, b)| a == b))
    }

    /// Distance from `x` to the nearest singular point.
    pub fn distance_to_singular(&self, x: &[f64]) -> Option<f64> {
        self.singular_points
            .iter()
            .map(|p| dist(p, x))
            .min_by(f64::total_cmp)
    }

    /// Evaluates the drift at a non-singular point.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.d];
        self.eval_into(x, &mut out)?;
        Ok(out)
    }

    /// Evaluation that skips the singular-set check. Returns zero for the
    /// model field at the origin.
    pub(crate) fn eval_unchecked(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            DriftKind::ModelRadial { c } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if r2 == 0.0 {
                    out.iter_mut().for_each(|o| *o = 0.0);
                } else {
                    for (o, &xi) in out.iter_mut().zip(x) {
                        *o = c * xi / r2;
                    }
                }
            }
            DriftKind::BoundedSmooth(SmoothField::Constant(v)) => out.copy_from_slice(v),
            DriftKind::BoundedSmooth(SmoothField::GaussianBump {
                amplitude,
                width,
                direction,
            }) => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let g = amplitude * (-r2 / (2.0 * width * width)).exp();
                for (o, &e) in out.iter_mut().zip(direction) {
                    *o = g * e;
                }
            }
            DriftKind::Custom(cf) => (cf.f)(x, out),
        }
    }
}

impl VectorField for DriftField {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.d || out.len() != self.d {
            return Err(Error::InvalidArgument(format!(
                "point of length {} for a field in dimension {}",
                x.len(),
                self.d
            )));
        }
        if self.is_singular_at(x) {
            return Err(Error::SingularPoint(x.to_vec()));
        }
        self.eval_unchecked(x, out);
        Ok(())
    }

    fn sup_bound(&self) -> Option<f64> {
        match &self.kind {
            DriftKind::ModelRadial { c } if *c == 0.0 => Some(0.0),
            DriftKind::ModelRadial { .. } => None,
            DriftKind::BoundedSmooth(s) => Some(s.sup_norm()),
            DriftKind::Custom(cf) => cf.sup_bound,
        }
    }
}

/// `eval_drift` under its operational name.
pub fn eval_drift(field: &DriftField, x: &[f64]) -> Result<Vec<f64>> {
    field.eval(x)
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if d < 3 {
        Err(Error::DimensionTooSmall(d))
    } else {
        Ok(())
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_radial_on_unit_sphere_is_c_times_x() {
        let b = DriftField::model_radial(1.0, 3).unwrap();
        assert_eq!(b.eval(&[1.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn model_radial_scales_inversely_with_radius() {
        let b = DriftField::model_radial(2.0, 3).unwrap();
        assert_eq!(b.eval(&[0.0, 2.0, 0.0]).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn singular_point_is_rejected() {
        let b = DriftField::model_radial(1.0, 3).unwrap();
        assert_eq!(
            b.eval(&[0.0, 0.0, 0.0]),
            Err(Error::SingularPoint(vec![0.0, 0.0, 0.0]))
        );
    }

    #[test]
    fn low_dimension_is_rejected() {
        assert_eq!(
            DriftField::model_radial(1.0, 2).unwrap_err(),
            Error::DimensionTooSmall(2)
        );
    }

    #[test]
    fn custom_field_evaluates_and_scales() {
        let cf = CustomField::new("shear", |x: &[f64], out: &mut [f64]| {
            out.fill(0.0);
            out[0] = x[1];
        });
        let b = DriftField::custom(cf, 3, vec![]).unwrap();
        assert_eq!(b.eval(&[0.0, 2.0, 5.0]).unwrap(), vec![2.0, 0.0, 0.0]);
        let b3 = b.scaled(3.0).unwrap();
        assert_eq!(b3.eval(&[0.0, 2.0, 5.0]).unwrap(), vec![6.0, 0.0, 0.0]);
    }

    #[test]
    fn bump_field_sup_bound() {
        let b = DriftField::bounded_smooth(
            SmoothField::GaussianBump {
                amplitude: 2.0,
                width: 1.0,
                direction: vec![0.6, 0.8, 0.0],
            },
            3,
        )
        .unwrap();
        assert!((b.sup_bound().unwrap() - 2.0).abs() < 1e-15);
        assert!((norm(&b.eval(&[0.0; 3]).unwrap()) - 2.0).abs() < 1e-15);
    }
}
