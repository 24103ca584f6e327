//! `key=value` text form of a drift, e.g. `kind=model_radial c=0.2 d=3 n=16`.

use std::collections::BTreeMap;
use std::fmt;

use super::{default_epsilon, DriftField, DriftKind, MollifiedDrift, SmoothField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DescribedKind {
    ModelRadial { c: f64 },
    Constant(Vec<f64>),
    GaussianBump {
        amplitude: f64,
        width: f64,
        direction: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftDescriptor {
    pub kind: DescribedKind,
    pub d: usize,
    /// Truncation level; present when the descriptor names a regularized drift.
    pub n: Option<u32>,
    pub epsilon: Option<f64>,
}

const KEYS: &[&str] = &[
    "kind",
    "c",
    "d",
    "n",
    "epsilon",
    "v",
    "amplitude",
    "width",
    "direction",
];

impl DriftDescriptor {
    pub fn model(c: f64, d: usize) -> Self {
        Self {
            kind: DescribedKind::ModelRadial { c },
            d,
            n: None,
            epsilon: None,
        }
    }

    pub fn with_level(mut self, n: u32) -> Self {
        self.n = Some(n);
        self
    }

    /// Parses whitespace- or newline-separated `key=value` pairs.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for token in text.split_whitespace() {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{token}`")))?;
            if !KEYS.contains(&k) {
                return Err(Error::Parse(format!("unknown drift key `{k}`")));
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Parse(format!("duplicate key `{k}`")));
            }
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let num = |k: &str| -> Result<f64> {
            let s = get(k).ok_or_else(|| Error::Parse(format!("missing key `{k}`")))?;
            s.parse()
                .map_err(|e| Error::Parse(format!("bad value for `{k}`: {e}")))
        };
        let vector = |k: &str| -> Result<Vec<f64>> {
            let s = get(k).ok_or_else(|| Error::Parse(format!("missing key `{k}`")))?;
            s.split(',')
                .map(|x| {
                    x.parse()
                        .map_err(|e| Error::Parse(format!("bad component in `{k}`: {e}")))
                })
                .collect()
        };
        let d: usize = get("d")
            .ok_or_else(|| Error::Parse("missing key `d`".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad value for `d`: {e}")))?;
        let kind = match get("kind").ok_or_else(|| Error::Parse("missing key `kind`".into()))? {
            "model_radial" => DescribedKind::ModelRadial { c: num("c")? },
            "constant" => DescribedKind::Constant(vector("v")?),
            "gaussian_bump" => DescribedKind::GaussianBump {
                amplitude: num("amplitude")?,
                width: num("width")?,
                direction: vector("direction")?,
            },
            other => return Err(Error::Parse(format!("unknown drift kind `{other}`"))),
        };
        let n = match get("n") {
            Some(s) => Some(
                s.parse()
                    .map_err(|e| Error::Parse(format!("bad value for `n`: {e}")))?,
            ),
            None => None,
        };
        let epsilon = match get("epsilon") {
            Some(_) => Some(num("epsilon")?),
            None => None,
        };
        Ok(Self {
            kind,
            d,
            n,
            epsilon,
        })
    }

    pub fn from_field(field: &DriftField) -> Result<Self> {
        let kind = match field.kind() {
            DriftKind::ModelRadial { c } => DescribedKind::ModelRadial { c: *c },
            DriftKind::BoundedSmooth(SmoothField::Constant(v)) => DescribedKind::Constant(v.clone()),
            DriftKind::BoundedSmooth(SmoothField::GaussianBump {
                amplitude,
                width,
                direction,
            }) => DescribedKind::GaussianBump {
                amplitude: *amplitude,
                width: *width,
                direction: direction.clone(),
            },
            DriftKind::Custom(cf) => {
                return Err(Error::InvalidArgument(format!(
                    "custom field `{}` has no text form",
                    cf.name
                )))
            }
        };
        Ok(Self {
            kind,
            d: field.dimension(),
            n: None,
            epsilon: None,
        })
    }

    pub fn field(&self) -> Result<DriftField> {
        match &self.kind {
            DescribedKind::ModelRadial { c } => DriftField::model_radial(*c, self.d),
            DescribedKind::Constant(v) => {
                DriftField::bounded_smooth(SmoothField::Constant(v.clone()), self.d)
            }
            DescribedKind::GaussianBump {
                amplitude,
                width,
                direction,
            } => DriftField::bounded_smooth(
                SmoothField::GaussianBump {
                    amplitude: *amplitude,
                    width: *width,
                    direction: direction.clone(),
                },
                self.d,
            ),
        }
    }

    /// The regularized drift, when a level `n` is present.
    pub fn mollified(&self) -> Result<Option<MollifiedDrift>> {
        let Some(n) = self.n else { return Ok(None) };
        let base = self.field()?;
        let eps = self.epsilon.unwrap_or_else(|| default_epsilon(n));
        let order = match self.kind {
            DescribedKind::ModelRadial { .. } => super::DEFAULT_QUADRATURE_ORDER,
            _ => 12,
        };
        MollifiedDrift::with_params(base, n, eps, order).map(Some)
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for DriftDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DescribedKind::ModelRadial { c } => write!(f, "kind=model_radial c={c}")?,
            DescribedKind::Constant(v) => write!(f, "kind=constant v={}", join(v))?,
            DescribedKind::GaussianBump {
                amplitude,
                width,
                direction,
            } => write!(
                f,
                "kind=gaussian_bump amplitude={amplitude} width={width} direction={}",
                join(direction)
            )?,
        }
        write!(f, " d={}", self.d)?;
        if let Some(n) = self.n {
            write!(f, " n={n}")?;
        }
        if let Some(e) = self.epsilon {
            write!(f, " epsilon={e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_model_descriptor() {
        let desc = DriftDescriptor::parse("kind=model_radial c=0.2 d=3 n=16").unwrap();
        assert_eq!(desc.kind, DescribedKind::ModelRadial { c: 0.2 });
        assert_eq!(desc.n, Some(16));
        let m = desc.mollified().unwrap().unwrap();
        assert_eq!(m.epsilon(), 1.0 / 17.0);
    }

    #[test]
    fn rejects_unknown_keys_and_kinds() {
        assert!(DriftDescriptor::parse("kind=model_radial c=1 d=3 foo=1").is_err());
        assert!(DriftDescriptor::parse("kind=spiral d=3").is_err());
        assert!(DriftDescriptor::parse("kind=model_radial d=3").is_err());
    }

    proptest! {
        #[test]
        fn text_form_round_trips(
            c in 0.0f64..50.0,
            d in 3usize..8,
            n in proptest::option::of(1u32..100),
            eps in proptest::option::of(1e-4f64..1.0),
        ) {
            let desc = DriftDescriptor { kind: DescribedKind::ModelRadial { c }, d, n, epsilon: eps };
            prop_assert_eq!(DriftDescriptor::parse(&desc.to_string()).unwrap(), desc);
        }

        #[test]
        fn bump_round_trips(a in -5.0f64..5.0, w in 0.1f64..4.0, x in -1.0f64..1.0) {
            let desc = DriftDescriptor {
                kind: DescribedKind::GaussianBump { amplitude: a, width: w, direction: vec![x, 1.0, -x] },
                d: 3, n: Some(4), epsilon: None,
            };
            prop_assert_eq!(DriftDescriptor::parse(&desc.to_string()).unwrap(), desc);
        }
    }
}
