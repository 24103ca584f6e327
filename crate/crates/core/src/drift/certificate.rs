use std::fmt;
use std::str::FromStr;

use super::check_dim;
use crate::error::{Error, Result};

/// `m_d = pi^{1/2} (2e)^{-1/2} d^{d/2} (d-1)^{(1-d)/2}`.
pub fn m_d_constant(d: usize) -> Result<f64> {
    check_dim(d)?;
    let d = d as f64;
    let ln = 0.5 * std::f64::consts::PI.ln() - 0.5 * (2.0 * std::f64::consts::E).ln()
        + 0.5 * d * d.ln()
        + 0.5 * (1.0 - d) * (d - 1.0).ln();
    Ok(ln.exp())
}

/// `kappa_d = d / (d - 1)`; resolvents are taken at `Re zeta >= kappa_d * lambda`.
pub fn kappa(d: usize) -> f64 {
    d as f64 / (d as f64 - 1.0)
}

/// Largest admissible `delta` and model strength `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub delta_max: f64,
    pub c_max: f64,
}

/// `delta_max = 4(d-2)/(m_d (d-1)^2)`, `c_max = 2(d-2)^2/(m_d (d-1)^2)`.
pub fn admissibility_threshold(d: usize) -> Result<Thresholds> {
    let m = m_d_constant(d)?;
    let df = d as f64;
    let denom = m * (df - 1.0) * (df - 1.0);
    Ok(Thresholds {
        delta_max: 4.0 * (df - 2.0) / denom,
        c_max: 2.0 * (df - 2.0) * (df - 2.0) / denom,
    })
}

/// Strength at and above which the model SDE started at the origin has no
/// weak solution.
pub fn nonexistence_threshold(d: usize) -> f64 {
    d as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassTag {
    WeakFormBounded,
    FormBounded,
    Kato,
}

impl ClassTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassTag::WeakFormBounded => "weak_form_bounded",
            ClassTag::FormBounded => "form_bounded",
            ClassTag::Kato => "kato",
        }
    }
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weak_form_bounded" => Ok(ClassTag::WeakFormBounded),
            "form_bounded" => Ok(ClassTag::FormBounded),
            "kato" => Ok(ClassTag::Kato),
            other => Err(Error::Parse(format!("unknown class tag `{other}`"))),
        }
    }
}

/// Class-membership record for a drift.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub class_tag: ClassTag,
    /// Strength of the model field this certificate was derived for.
    pub c: Option<f64>,
    pub d: usize,
    pub delta: f64,
    pub lambda: f64,
    pub admissible: bool,
    pub threshold_used: f64,
    pub notes: String,
}

impl Certificate {
    pub const CSV_HEADER: &'static str = "class_tag,c,d,delta,lambda,admissible,threshold_used";

    /// Generic weakly form-bounded certificate: admissible iff
    /// `m_d delta < 4(d-2)/(d-1)^2`.
    pub fn weak_form_bounded(delta: f64, lambda: f64, d: usize) -> Result<Self> {
        check_nonneg("delta", delta)?;
        check_positive("lambda", lambda)?;
        let t = admissibility_threshold(d)?;
        Ok(Self {
            class_tag: ClassTag::WeakFormBounded,
            c: None,
            d,
            delta,
            lambda,
            admissible: delta < t.delta_max,
            threshold_used: t.delta_max,
            notes: String::new(),
        })
    }

    /// Form-bounded certificate under the relaxed constraint
    /// `delta_1 < 1 /\ (2/(d-2))^2`.
    pub fn form_bounded(delta1: f64, lambda: f64, d: usize) -> Result<Self> {
        check_nonneg("delta", delta1)?;
        check_positive("lambda", lambda)?;
        check_dim(d)?;
        let bound = form_bounded_limit(d);
        Ok(Self {
            class_tag: ClassTag::FormBounded,
            c: None,
            d,
            delta: delta1,
            lambda,
            admissible: delta1 < bound,
            threshold_used: bound,
            notes: String::new(),
        })
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.class_tag,
            self.c.map(|c| c.to_string()).unwrap_or_default(),
            self.d,
            self.delta,
            self.lambda,
            self.admissible,
            self.threshold_used
        )
    }

    pub fn parse_csv_row(row: &str) -> Result<Self> {
        let cols: Vec<&str> = row.trim().split(',').collect();
        if cols.len() != 7 {
            return Err(Error::Parse(format!(
                "certificate row needs 7 columns, got {}",
                cols.len()
            )));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad number `{s}`: {e}")))
        };
        Ok(Self {
            class_tag: cols[0].parse()?,
            c: if cols[1].is_empty() {
                None
            } else {
                Some(num(cols[1])?)
            },
            d: cols[2]
                .parse()
                .map_err(|e| Error::Parse(format!("bad dimension `{}`: {e}", cols[2])))?,
            delta: num(cols[3])?,
            lambda: num(cols[4])?,
            admissible: cols[5]
                .parse()
                .map_err(|e| Error::Parse(format!("bad flag `{}`: {e}", cols[5])))?,
            threshold_used: num(cols[6])?,
            notes: String::new(),
        })
    }
}

fn form_bounded_limit(d: usize) -> f64 {
    let r = 2.0 / (d as f64 - 2.0);
    (r * r).min(1.0)
}

/// Certificate of the model field `c x/|x|^2` in dimension `d`.
///
/// `delta = 4c^2/(d-2)^2`; admissibility is judged against the explicit
/// strength bound `c < c_max(d)`. The notes carry the form-bounded
/// alternative and the strength bound that the quadratic `delta` would give
/// under the generic constraint, since the two disagree.
pub fn model_certificate(c: f64, d: usize) -> Result<Certificate> {
    check_nonneg("c", c)?;
    let t = admissibility_threshold(d)?;
    let m = m_d_constant(d)?;
    let df = d as f64;
    let delta = 4.0 * c * c / ((df - 2.0) * (df - 2.0));
    let c_max_quadratic = ((df - 2.0).powi(3) / (m * (df - 1.0) * (df - 1.0))).sqrt();
    let fb = Certificate::form_bounded(delta, 1.0, d)?;
    let notes = format!(
        "form_bounded delta1={delta} (admissible={}, limit {}); generic constraint with \
         delta=4c^2/(d-2)^2 gives c_max={c_max_quadratic}; stated strength bound c_max={}",
        fb.admissible, fb.threshold_used, t.c_max
    );
    Ok(Certificate {
        class_tag: ClassTag::WeakFormBounded,
        c: Some(c),
        d,
        delta,
        lambda: 1.0,
        admissible: c < t.c_max,
        threshold_used: t.c_max,
        notes,
    })
}

/// The relaxed form-bounded certificate of the model field.
pub fn model_form_bounded_certificate(c: f64, d: usize) -> Result<Certificate> {
    check_nonneg("c", c)?;
    check_dim(d)?;
    let df = d as f64;
    let mut cert = Certificate::form_bounded(4.0 * c * c / ((df - 2.0) * (df - 2.0)), 1.0, d)?;
    cert.c = Some(c);
    Ok(cert)
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be finite and nonnegative, got {v}"
        )))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be positive, got {v}"
        )))
    }
}
