//! Frozen reference values and cross-module invariants.

use formbound::drift::{
    admissibility_threshold, kato_norm_estimate, m_d_constant, model_certificate, DriftField,
    MollifiedDrift, SmoothField,
};
use formbound::operators::{sample_mollified, Grid, GridFunction};
use formbound::sde::{read_binary, simulate, SimulationConfig};
use formbound::semigroup::{evolve, Boundary, EvolutionConfig};
use proptest::prelude::*;

// Independent high-precision evaluation: (d, m_d, delta_max, c_max).
const THRESHOLDS: [(usize, f64, f64, f64); 4] = [
    (3, 1.9749885583325187, 0.50633204723185799, 0.25316602361592899),
    (4, 2.3407271802459481, 0.37974903542389349, 0.37974903542389349),
    (5, 2.6559367345041808, 0.28238624446753342, 0.42357936670130013),
    (6, 2.9372535534228636, 0.21789062073112147, 0.43578124146224294),
];

#[test]
fn threshold_constants() {
    for (d, m, dmax, cmax) in THRESHOLDS {
        assert!((m_d_constant(d).unwrap() - m).abs() <= 1e-14 * m, "m_{d}");
        let t = admissibility_threshold(d).unwrap();
        assert!((t.delta_max - dmax).abs() <= 1e-14 * dmax, "delta_max({d})");
        assert!((t.c_max - cmax).abs() <= 1e-14 * cmax, "c_max({d})");
    }
}

#[test]
fn kato_norm_baseline() {
    let field = DriftField::bounded_smooth(
        SmoothField::GaussianBump {
            amplitude: 1.0,
            width: 0.7,
            direction: vec![0.0, 0.0, 1.0],
        },
        3,
    )
    .unwrap();
    let est = kato_norm_estimate(&field, 1.0, 3.0, 16).unwrap();
    assert!((est.value - KATO_BASELINE).abs() <= 1e-8, "{}", est.value);
}

// Regression baseline from this implementation; the continuum value is below sup|b| lambda^{-1/2} = 1.
const KATO_BASELINE: f64 = 0.4279837246057002;

#[test]
fn dump_round_trips_through_reader() {
    let m = MollifiedDrift::new(DriftField::model_radial(0.3, 3).unwrap(), 4).unwrap();
    let cfg = SimulationConfig::new(vec![0.5, 0.0, 0.0], 1e-3, 0.05, 7, 3).with_snapshot_every(10);
    let ens = simulate(&m, &cfg).unwrap();
    let mut buf = Vec::new();
    ens.write_binary(&mut buf).unwrap();
    let (d, n, s, values) = read_binary(&buf).unwrap();
    assert_eq!((d, n, s), (3, 7, ens.times().len()));
    for p in 0..n {
        for k in 0..s {
            assert_eq!(&values[(p * s + k) * d..][..d], ens.state(p, k));
        }
    }
}

#[test]
fn semigroup_preserves_constants_periodic() {
    let g = Grid::new(3, 3.0, 16).unwrap();
    let m = MollifiedDrift::new(DriftField::model_radial(0.2, 3).unwrap(), 2).unwrap();
    let b = sample_mollified(&m, &g).unwrap();
    let one = GridFunction::constant(g, 1.0);
    let cfg = EvolutionConfig::implicit(g, 0.05, Boundary::Periodic);
    let u = evolve(&b, &one, 0.5, &cfg).unwrap();
    for v in u.real_parts() {
        assert!((v - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn certificate_delta_scales_quadratically(c in 0.01f64..5.0, d in 3usize..8) {
        let a = model_certificate(c, d).unwrap().delta;
        let b = model_certificate(2.0 * c, d).unwrap().delta;
        prop_assert!((b - 4.0 * a).abs() <= 1e-12 * b);
    }

    #[test]
    fn admissibility_matches_threshold(c in 0.0f64..1.0, d in 3usize..8) {
        let t = admissibility_threshold(d).unwrap();
        prop_assert_eq!(model_certificate(c, d).unwrap().admissible, c < t.c_max);
    }
}
