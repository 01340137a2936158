use nalgebra::Vector4;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use orbfuse::dynamics::{kepler_to_cartesian, propagate, ForceModel, IntegratorConfig, KeplerElements, PhysicalConstants};
use orbfuse::radar::{gaussian_possibility, rescale, rescale_sigmas, RadarStation};

const SIGMAS: [f64; 4] = [28.0, 0.1 * std::f64::consts::PI / 180.0, 0.1 * std::f64::consts::PI / 180.0, 11.0];

// multiples of this many metres are exact in kilometres too
const DYADIC: f64 = 125.0 / 128.0;

proptest! {
    #[test]
    fn possibility_is_in_unit_interval(
        base in (1e5..2e6f64, 0.0..6.2f64, -1.5..1.5f64, -7e3..7e3f64),
        steps in (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64),
    ) {
        let y = Vector4::new(base.0, base.1, base.2, base.3);
        let o = y + Vector4::new(steps.0 * SIGMAS[0], steps.1 * SIGMAS[1], steps.2 * SIGMAS[2], steps.3 * SIGMAS[3]);
        let h = gaussian_possibility(&y, &o, &SIGMAS);
        prop_assert!(h > 0.0 && h <= 1.0);
        let q: f64 = (0..4).map(|k| ((o[k] - y[k]) / SIGMAS[k]).powi(2)).sum();
        if q > 1e-12 {
            prop_assert!(h < 1.0);
        }
        prop_assert_eq!(gaussian_possibility(&y, &y, &SIGMAS), 1.0);
    }

    #[test]
    fn azimuth_residual_is_wrapped(az in 0.0..1e-3f64, d in 0.0..1e-3f64) {
        let y = Vector4::new(1e6, az, 0.3, 10.0);
        let o = Vector4::new(1e6, std::f64::consts::TAU - d, 0.3, 10.0);
        let across = gaussian_possibility(&y, &o, &SIGMAS);
        let direct = gaussian_possibility(&Vector4::new(1e6, az + d, 0.3, 10.0), &Vector4::new(1e6, 0.0, 0.3, 10.0), &SIGMAS);
        prop_assert!((across - direct).abs() < 1e-9);
    }

    #[test]
    fn weights_do_not_depend_on_units(
        y_steps in (500_000i64..2_000_000, -8000i64..8000),
        offsets in prop::collection::vec((-80i64..80, -3e-3..3e-3f64, -3e-3..3e-3f64, -30i64..30), 2..40),
    ) {
        let y = Vector4::new(y_steps.0 as f64 * DYADIC, 1.0, 0.5, y_steps.1 as f64 * DYADIC);
        let predicted: Vec<Vector4<f64>> = offsets
            .iter()
            .map(|(dr, da, de, dv)| Vector4::new(y[0] + *dr as f64 * DYADIC, y[1] + da, y[2] + de, y[3] + *dv as f64 * DYADIC))
            .collect();
        let weights = |scale: f64| {
            let ys = rescale(&y, scale, scale);
            let s = rescale_sigmas(&SIGMAS, scale, scale);
            let h: Vec<f64> = predicted.iter().map(|o| gaussian_possibility(&ys, &rescale(o, scale, scale), &s)).collect();
            let total: f64 = h.iter().sum();
            h.into_iter().map(|v| v / total).collect::<Vec<_>>()
        };
        for (m, km) in weights(1.0).iter().zip(weights(1e-3)) {
            prop_assert!((m - km).abs() <= 1e-12 * m.abs().max(f64::MIN_POSITIVE));
        }
    }
}

#[test]
fn noiseless_observe_is_the_prediction() {
    let c = PhysicalConstants::default();
    let mut station = RadarStation::fairbanks();
    station.sigmas = [0.0; 4];
    let el = KeplerElements {
        raan_deg: 311.18,
        inclination_deg: 97.45,
        arg_perigee_deg: 144.12,
        mean_motion: 11.07e-4,
        eccentricity: 0.0011950,
        mean_anomaly_deg: 216.09,
    };
    let mut x = kepler_to_cartesian(&el, &c, 557_928_707.0).unwrap();
    let mut seen = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    while seen < 5 {
        x = propagate(&x, x.epoch + 60.0, None, &c, &ForceModel::two_body(), &IntegratorConfig::default()).unwrap();
        if station.in_fov(&x, &c) {
            let y = station.observe(&x, &c, &mut rng).unwrap();
            assert_eq!(y.y, station.predicted(&x, &c).unwrap());
            let real = RadarStation::fairbanks();
            assert_eq!(real.h_rad(&y, &x, &c).unwrap(), 1.0);
            let norm: f64 = SIGMAS.iter().map(|s| (std::f64::consts::TAU * s * s).sqrt()).product();
            assert!((real.l_rad(&y, &x, &c).unwrap() * norm - 1.0).abs() < 1e-12);
            seen += 1;
        }
    }
}
