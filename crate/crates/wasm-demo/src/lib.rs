//! Browser bindings: certificates for the model drift, radial profiles of the
//! regularized drift and a small radial Monte Carlo run.
//!
//! Build with `wasm-pack build --target web crates/wasm-demo` and serve
//! `crates/wasm-demo/www` next to the generated `pkg/` directory.

use formbound::drift::{
    admissibility_threshold, model_certificate, nonexistence_threshold, DriftField,
    MollifiedDrift,
};
use formbound::sde::{radial_slope_experiment, SlopeConfig};
use wasm_bindgen::prelude::*;

/// Largest path count the page may request; keeps a click under a second or so.
pub const MAX_PATHS: usize = 20_000;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Certificate for `c x/|x|^2` in dimension `d`.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    delta: f64,
    delta_max: f64,
    c_max: f64,
    c_nonexistence: f64,
    admissible: bool,
    label: String,
}

#[wasm_bindgen]
impl Verdict {
    #[wasm_bindgen(getter)]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    #[wasm_bindgen(getter)]
    pub fn delta_max(&self) -> f64 {
        self.delta_max
    }

    #[wasm_bindgen(getter)]
    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    #[wasm_bindgen(getter)]
    pub fn c_nonexistence(&self) -> f64 {
        self.c_nonexistence
    }

    #[wasm_bindgen(getter)]
    pub fn admissible(&self) -> bool {
        self.admissible
    }

    /// `existence_certified`, `open_gap` or `nonexistence`.
    #[wasm_bindgen(getter)]
    pub fn label(&self) -> String {
        self.label.clone()
    }
}

pub fn verdict(c: f64, d: usize) -> formbound::Result<Verdict> {
    let cert = model_certificate(c, d)?;
    let th = admissibility_threshold(d)?;
    let c_non = nonexistence_threshold(d);
    let label = if cert.admissible {
        "existence_certified"
    } else if c >= c_non {
        "nonexistence"
    } else {
        "open_gap"
    };
    Ok(Verdict {
        delta: cert.delta,
        delta_max: th.delta_max,
        c_max: th.c_max,
        c_nonexistence: c_non,
        admissible: cert.admissible,
        label: label.into(),
    })
}

#[wasm_bindgen(js_name = certify)]
pub fn certify_js(c: f64, d: usize) -> Result<Verdict, JsValue> {
    verdict(c, d).map_err(js_err)
}

/// Radial component of `b_n` at `points` radii spread evenly over `(0, r_max]`,
/// followed by the unregularized `c / r` at the same radii.
pub fn drift_profile(c: f64, d: usize, n: u32, r_max: f64, points: usize) -> formbound::Result<Vec<f64>> {
    if !(r_max > 0.0) || points == 0 {
        return Err(formbound::Error::InvalidArgument(
            "profile needs r_max > 0 and at least one point".into(),
        ));
    }
    let m = MollifiedDrift::new(DriftField::model_radial(c, d)?, n)?;
    let radii: Vec<f64> = (1..=points).map(|i| r_max * i as f64 / points as f64).collect();
    let mut out: Vec<f64> = radii
        .iter()
        .map(|&r| m.radial_value(r).unwrap_or(f64::NAN))
        .collect();
    out.extend(radii.iter().map(|r| c / r));
    Ok(out)
}

#[wasm_bindgen(js_name = driftProfile)]
pub fn drift_profile_js(c: f64, d: usize, n: u32, r_max: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    drift_profile(c, d, n, r_max, points).map_err(js_err)
}

/// `[slope, ci, expected, stopped_fraction]` for `d/dt E|X|^2` started at `e_1`.
pub fn radial_slope(c: f64, d: usize, n: u32, paths: usize, seed: u64) -> formbound::Result<Vec<f64>> {
    if paths > MAX_PATHS {
        return Err(formbound::Error::InvalidArgument(format!(
            "at most {MAX_PATHS} paths in the browser"
        )));
    }
    let rep = radial_slope_experiment(&SlopeConfig {
        c,
        d,
        radius: 1.0,
        n,
        dt: 1e-3,
        paths,
        t_max: 0.25,
        seed,
        windows: 5,
    })?;
    Ok(vec![rep.slope.mean, rep.slope.ci, rep.expected, rep.stopped_fraction])
}

#[wasm_bindgen(js_name = radialSlope)]
pub fn radial_slope_js(c: f64, d: usize, n: u32, paths: usize, seed: u64) -> Result<Vec<f64>, JsValue> {
    radial_slope(c, d, n, paths, seed).map_err(js_err)
}
