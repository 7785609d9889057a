use std::f64::consts::PI;

use approx::assert_relative_eq;
use biphoton::analysis::{first_zero_profile, fit_sinc2_profile, fwhm_profile, FitGeometry};
use biphoton::elements::{apply_aperture, propagate_free_space};
use biphoton::grid::{make_grid, Field1D};
use num_complex::Complex64;

const GEOMETRY: FitGeometry = FitGeometry {
    wavelength_m: 702.2e-9,
    distance_m: 0.5,
};

fn sinc2_samples(width: f64, center: f64, peak: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let scale = GEOMETRY.scale();
    let x: Vec<f64> = (0..n)
        .map(|k| -4e-3 + 8e-3 * k as f64 / (n - 1) as f64)
        .collect();
    let y = x
        .iter()
        .map(|&v| {
            let u = PI * width * (v - center) / scale;
            let s = if u == 0.0 { 1.0 } else { u.sin() / u };
            peak * s * s
        })
        .collect();
    (x, y)
}

/// Half-maximum point of sinc^2: sin(u)/u = 1/sqrt(2) at u = 1.391557...
fn sinc2_fwhm(width: f64) -> f64 {
    let mut u: f64 = 1.4;
    for _ in 0..50 {
        let f = u.sin() / u - 0.5f64.sqrt();
        let df = (u * u.cos() - u.sin()) / (u * u);
        u -= f / df;
    }
    2.0 * u / PI * GEOMETRY.scale() / width
}

#[test]
fn fit_recovers_exact_sinc2() {
    for (w, c, p) in [
        (0.16e-3, 0.0, 1.0),
        (0.12e-3, 0.21e-3, 0.3),
        (0.25e-3, -0.4e-3, 7.0),
    ] {
        let (x, y) = sinc2_samples(w, c, p, 321);
        let fit = fit_sinc2_profile(&x, &y, &GEOMETRY).unwrap();
        assert_relative_eq!(fit.width_m, w, max_relative = 1e-6);
        assert!((fit.center_m - c).abs() < 1e-9, "{}", fit.center_m);
        assert_relative_eq!(fit.peak, p, max_relative = 1e-6);
        assert!(fit.residual < 1e-6 && fit.is_good());
        assert_relative_eq!(
            fit.first_zero_m(&GEOMETRY),
            GEOMETRY.scale() / w,
            max_relative = 1e-6
        );
    }
}

#[test]
fn analytic_first_zero_of_the_bench() {
    // lambda L / w for the 0.16 mm slit at 500 mm
    assert_relative_eq!(GEOMETRY.scale() / 0.16e-3, 2.194e-3, max_relative = 1e-3);
}

#[test]
fn width_and_zero_of_sampled_sinc2() {
    let w = 0.16e-3;
    let (x, y) = sinc2_samples(w, 0.0, 1.0, 1601);
    assert_relative_eq!(
        fwhm_profile(&x, &y).unwrap(),
        sinc2_fwhm(w),
        max_relative = 1e-3
    );
    let zero = first_zero_profile(&x, &y).unwrap().unwrap();
    assert_relative_eq!(zero, GEOMETRY.scale() / w, max_relative = 1e-3);
}

#[test]
fn gaussian_is_a_poor_sinc2() {
    let x: Vec<f64> = (0..321).map(|k| -4e-3 + 25e-6 * k as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| (-(v / 1e-3).powi(2)).exp()).collect();
    let fit = fit_sinc2_profile(&x, &y, &GEOMETRY).unwrap();
    assert!(!fit.is_good(), "{}", fit.residual);
}

#[test]
fn plane_wave_slit_fits_its_own_width() {
    let grid = make_grid(1024, 15e-3).unwrap();
    let flat = Field1D::from_fn(grid, GEOMETRY.wavelength_m, |_| Complex64::new(1.0, 0.0)).unwrap();
    let far = propagate_free_space(
        &apply_aperture(&flat, 0.16e-3, 0.0).unwrap(),
        GEOMETRY.distance_m,
    )
    .unwrap();
    let y = grid.positions().to_vec();
    let i = far.intensity().to_vec();
    let (x, v): (Vec<f64>, Vec<f64>) = y
        .iter()
        .zip(&i)
        .filter(|(y, _)| y.abs() <= 4e-3)
        .map(|(a, b)| (*a, *b))
        .unzip();
    let fit = fit_sinc2_profile(&x, &v, &GEOMETRY).unwrap();
    assert_relative_eq!(fit.width_m, 0.16e-3, max_relative = 0.02);
    let zero = first_zero_profile(&x, &v).unwrap().unwrap();
    assert_relative_eq!(zero, 2.194e-3, max_relative = 0.02);
}
