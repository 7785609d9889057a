use biphoton::analysis::{fwhm_profile, thin_lens_predict};
use biphoton::config::{parse_config, RunConfig, ScreenKey};
use biphoton::elements::{apply_to_axis, propagate_free_space, OpticalElement, PhotonAxis};
use biphoton::grid::{make_grid, BiphotonAmplitude, Field1D};
use biphoton::source::{schmidt_number, SourceSpec};
use biphoton::temporal::{eval_biphoton_wavepacket, factorability_check, TemporalSpec};
use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;

const LAMBDA: f64 = 702.2e-9;

fn max_diff(a: &ndarray::Array1<Complex64>, b: &ndarray::Array1<Complex64>) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Random smooth band-limited field: a few Gaussians with linear phases.
fn field_strategy() -> impl Strategy<Value = Field1D> {
    prop::collection::vec(
        (-2e-3..2e-3f64, 0.1e-3..0.6e-3f64, -2e3..2e3f64, 0.1..1.0f64),
        1..4,
    )
    .prop_map(|parts| {
        let grid = make_grid(256, 6e-3).unwrap();
        Field1D::from_fn(grid, LAMBDA, |y| {
            parts
                .iter()
                .map(|&(c, w, k, a)| {
                    Complex64::from_polar(a * (-((y - c) / w).powi(2)).exp(), k * y)
                })
                .sum()
        })
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn free_space_preserves_norm(field in field_strategy(), d in 0.0..0.5f64) {
        let out = propagate_free_space(&field, d).unwrap();
        prop_assert!((out.norm_sqr() - field.norm_sqr()).abs() <= 1e-10 * field.norm_sqr());
    }

    #[test]
    fn forward_then_back_is_identity(field in field_strategy(), d in 0.0..0.5f64) {
        let there = propagate_free_space(&field, d).unwrap();
        let back = propagate_free_space(&there, -d).unwrap();
        let scale = field.amplitudes().iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(max_diff(back.amplitudes(), field.amplitudes()) <= 1e-10 * scale);
    }

    #[test]
    fn propagation_is_linear(
        f in field_strategy(),
        g in field_strategy(),
        a in (-2.0..2.0f64, -2.0..2.0f64),
        d in 0.0..0.5f64,
    ) {
        let a = Complex64::new(a.0, a.1);
        let mix = Field1D::new(*f.grid(), f.amplitudes() * a + g.amplitudes(), LAMBDA).unwrap();
        let lhs = propagate_free_space(&mix, d).unwrap();
        let rhs = propagate_free_space(&f, d).unwrap().into_amplitudes() * a
            + propagate_free_space(&g, d).unwrap().into_amplitudes();
        let scale = mix.amplitudes().iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(max_diff(lhs.amplitudes(), &rhs) <= 1e-10 * scale);
    }

    #[test]
    fn axis_operations_commute(d in 0.0..0.3f64, f in 0.2..2.0f64, seed in 0.0..1.0f64) {
        let grid = make_grid(64, 2e-3).unwrap();
        let joint = BiphotonAmplitude::new(
            grid,
            grid,
            Array2::from_shape_fn((64, 64), |(s, i)| {
                let (ys, yi) = (grid.position(s), grid.position(i));
                Complex64::from_polar(
                    (-((ys + yi) / 1e-3).powi(2) - ((ys - yi) / 0.3e-3).powi(2)).exp(),
                    seed * 1e3 * (ys - 2.0 * yi),
                )
            }),
            LAMBDA,
            LAMBDA,
        )
        .unwrap();
        let free = OpticalElement::FreeSpace { distance_m: d };
        let lens = OpticalElement::ThinLens { focal_m: f, aperture_diameter_m: None };
        let a = apply_to_axis(&apply_to_axis(&joint, &free, PhotonAxis::Signal).unwrap(), &lens, PhotonAxis::Idler).unwrap();
        let b = apply_to_axis(&apply_to_axis(&joint, &lens, PhotonAxis::Idler).unwrap(), &free, PhotonAxis::Signal).unwrap();
        let err = a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn source_is_symmetric_normalized_and_entangled(sigma_um in 5.0..30.0f64, pump_mm in 1.0..4.0f64) {
        let grid = make_grid(256, 8e-3).unwrap();
        let spec = SourceSpec {
            pump_diameter_m: pump_mm * 1e-3,
            correlation_width_m: sigma_um * 1e-6,
            ..SourceSpec::default()
        };
        let joint = spec.build(&grid, &grid).unwrap();
        prop_assert!((joint.norm_sqr() - 1.0).abs() < 1e-12);
        let a = joint.amplitudes();
        for (s, i) in [(3, 200), (100, 130), (128, 127), (40, 41)] {
            prop_assert!((a[[s, i]] - a[[i, s]]).norm() <= 1e-14 * a[[128, 128]].norm());
        }
        prop_assert!(schmidt_number(&joint).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn temporal_schmidt_number_is_exchange_symmetric(a in 3e11..3e13f64, b in 3e11..3e13f64) {
        let spec = |p, m| TemporalSpec { n_points: 128, ..TemporalSpec::new(p, m) };
        let ka = factorability_check(eval_biphoton_wavepacket(&spec(a, b)).unwrap().view()).unwrap();
        let kb = factorability_check(eval_biphoton_wavepacket(&spec(b, a)).unwrap().view()).unwrap();
        prop_assert!((ka - kb).abs() < 1e-9 * ka.max(1.0));
        prop_assert!(ka >= 1.0 - 1e-12);
    }
}

proptest! {
    #[test]
    fn cell_coverage_integrates_to_the_width(width_um in 1.0..3000.0f64, center_mm in -5.0..5.0f64) {
        let grid = make_grid(1024, 15e-3).unwrap();
        let w = width_um * 1e-6;
        let covered = grid.cell_coverage(w, center_mm * 1e-3).sum() * grid.spacing_m();
        prop_assert!((covered - w).abs() < 1e-12);
    }

    #[test]
    fn fwhm_scales_and_translates(
        width in 0.1..3.0f64,
        scale in 0.2..5.0f64,
        shift in -2.0..2.0f64,
        gain in 0.01..100.0f64,
    ) {
        let x: Vec<f64> = (0..801).map(|k| -10.0 + 0.025 * k as f64).collect();
        let base: Vec<f64> = x.iter().map(|v| (-(v / width).powi(2)).exp()).collect();
        let reference = fwhm_profile(&x, &base).unwrap();
        let moved_x: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
        let louder: Vec<f64> = base.iter().map(|v| gain * v).collect();
        let moved = fwhm_profile(&moved_x, &louder).unwrap();
        prop_assert!((moved - scale * reference).abs() <= 1e-9 * scale * reference);
    }

    #[test]
    fn thin_lens_law_holds(a in 0.05..5.0f64, f in 0.05..2.0f64) {
        prop_assume!((a - f).abs() > 1e-3);
        let img = thin_lens_predict(a, f).unwrap();
        prop_assert!((1.0 / a + 1.0 / img.image_distance_m - 1.0 / f).abs() < 1e-9 / f);
        prop_assert!((img.magnification + img.image_distance_m / a).abs() < 1e-12 * img.magnification.abs().max(1.0));
    }

    #[test]
    fn config_round_trips(
        pump in 0.5..5.0f64,
        sigma in 1.0..100.0f64,
        focal in 100.0..900.0f64,
        slit in 0.01..1.0f64,
        screen in 100.0..1000.0f64,
        open in any::<bool>(),
        points in 3usize..500,
        n in prop::sample::select(vec![256usize, 512, 1024]),
    ) {
        let mut cfg = RunConfig::default();
        cfg.source.pump_diameter_mm = pump;
        cfg.source.correlation_width_um = sigma;
        cfg.signal_arm.lens_focal_mm = focal;
        cfg.signal_arm.slit_a_width_mm = slit;
        cfg.idler_arm.crystal_to_screen_b_mm = screen;
        cfg.idler_arm.slit_b = if open { ScreenKey::Open } else { ScreenKey::Slit };
        cfg.scan.steps = points;
        cfg.grid.n_points = n;
        let parsed = parse_config(&cfg.render()).unwrap();
        prop_assert_eq!(parsed, cfg);
    }
}
