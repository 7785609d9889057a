//! Propagation checked against closed-form paraxial optics and a direct
//! Fresnel quadrature.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use biphoton::elements::{
    apply_aperture, apply_lens, apply_to_axis, propagate_free_space, OpticalElement, PhotonAxis,
};
use biphoton::grid::{make_grid, BiphotonAmplitude, Field1D, TransverseGrid};
use num_complex::Complex64;

const LAMBDA: f64 = 702.2e-9;

fn gaussian(grid: TransverseGrid, w0: f64) -> Field1D {
    Field1D::from_fn(grid, LAMBDA, |y| {
        Complex64::new((-(y / w0).powi(2)).exp(), 0.0)
    })
    .unwrap()
}

/// 1/e^2 intensity radius from the second moment, `w = 2 sqrt(<y^2>)`.
fn second_moment_radius(field: &Field1D) -> f64 {
    let y = field.grid().positions();
    let i = field.intensity();
    let total: f64 = i.sum();
    let mean: f64 = y.iter().zip(i.iter()).map(|(y, i)| y * i).sum::<f64>() / total;
    let var: f64 = y
        .iter()
        .zip(i.iter())
        .map(|(y, i)| (y - mean).powi(2) * i)
        .sum::<f64>()
        / total;
    2.0 * var.sqrt()
}

fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn fwhm_of(field: &Field1D) -> f64 {
    let y = field.grid().positions().to_vec();
    biphoton::analysis::fwhm_profile(&y, field.intensity().as_slice().unwrap()).unwrap()
}

#[test]
fn gaussian_beam_spreads_as_rayleigh_law() {
    let grid = make_grid(1024, 15e-3).unwrap();
    let w0 = 0.5e-3;
    let z_r = PI * w0 * w0 / LAMBDA;
    assert_relative_eq!(z_r, 1.1185, max_relative = 1e-4);
    let start = gaussian(grid, w0);
    for z in [0.3, 0.7, z_r] {
        let out = propagate_free_space(&start, z).unwrap();
        let expected = w0 * (1.0 + (z / z_r).powi(2)).sqrt();
        assert_relative_eq!(second_moment_radius(&out), expected, max_relative = 1e-3);
    }
    let at_zr = propagate_free_space(&start, z_r).unwrap();
    assert_relative_eq!(second_moment_radius(&at_zr), 0.7071e-3, max_relative = 1e-3);
}

#[test]
fn lens_focuses_collimated_gaussian_to_diffraction_spot() {
    let grid = make_grid(2048, 15e-3).unwrap();
    let (w, f) = (1.5e-3, 0.5);
    let focused =
        propagate_free_space(&apply_lens(&gaussian(grid, w), f, None).unwrap(), f).unwrap();
    let expected = LAMBDA * f / (PI * w);
    assert_relative_eq!(
        second_moment_radius(&focused),
        expected,
        max_relative = 1e-2
    );
}

#[test]
fn two_f_imaging_reproduces_slit_inverted() {
    let grid = make_grid(1024, 15e-3).unwrap();
    let flat = Field1D::from_fn(grid, LAMBDA, |_| Complex64::new(1.0, 0.0)).unwrap();
    for center in [0.0, 0.3e-3, -0.5e-3] {
        let object = apply_aperture(&flat, 0.16e-3, center).unwrap();
        let mut image = propagate_free_space(&object, 1.0).unwrap();
        image = apply_lens(&image, 0.5, Some(25e-3)).unwrap();
        image = propagate_free_space(&image, 1.0).unwrap();
        assert!(
            (fwhm_of(&image) - 0.16e-3).abs() <= 0.1 * 0.16e-3,
            "{}",
            fwhm_of(&image)
        );
        let i = image.intensity();
        let y = grid.positions();
        let centroid = y.iter().zip(i.iter()).map(|(y, i)| y * i).sum::<f64>() / i.sum();
        assert!(
            (centroid + center).abs() < 0.1 * 0.16e-3,
            "{center} -> {centroid}"
        );
    }
}

/// `|U(y)|^2` for a unit plane wave through a slit, by Simpson quadrature of
/// the Fresnel integral.
fn fresnel_slit_intensity(y: f64, width: f64, distance: f64) -> f64 {
    let n = 4000;
    let h = width / n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..=n {
        let x = -0.5 * width + k as f64 * h;
        let weight = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += weight * Complex64::from_polar(1.0, PI * (y - x).powi(2) / (LAMBDA * distance));
    }
    (acc * h / 3.0).norm_sqr() / (LAMBDA * distance)
}

#[test]
fn slit_far_field_matches_fresnel_and_sinc_squared() {
    let grid = make_grid(4096, 30e-3).unwrap();
    let (w, l) = (0.16e-3, 0.5);
    let flat = Field1D::from_fn(grid, LAMBDA, |_| Complex64::new(1.0, 0.0)).unwrap();
    let out = propagate_free_space(&apply_aperture(&flat, w, 0.0).unwrap(), l).unwrap();
    let y = grid.positions();
    let i = out.intensity();
    // three lobes each side
    let reach = 3.0 * LAMBDA * l / w;
    let (mut sim, mut fresnel, mut sinc2) = (vec![], vec![], vec![]);
    for (k, &yk) in y.iter().enumerate() {
        if yk.abs() <= reach {
            sim.push(i[k]);
            fresnel.push(fresnel_slit_intensity(yk, w, l));
            let u = PI * w * yk / (LAMBDA * l);
            let s = if u == 0.0 { 1.0 } else { u.sin() / u };
            sinc2.push(w * w / (LAMBDA * l) * s * s);
        }
    }
    assert!(
        relative_l2(&sim, &fresnel) < 1e-2,
        "{}",
        relative_l2(&sim, &fresnel)
    );
    assert!(
        relative_l2(&sim, &sinc2) < 1e-2,
        "{}",
        relative_l2(&sim, &sinc2)
    );
    // near-field correction to the far-field shape is small here
    let oracle_gap = relative_l2(&fresnel, &sinc2);
    assert!(oracle_gap < 1e-3, "{oracle_gap}");
}

#[test]
fn propagation_is_linear() {
    let grid = make_grid(256, 5e-3).unwrap();
    let f = gaussian(grid, 0.4e-3);
    let g = Field1D::from_fn(grid, LAMBDA, |y| {
        Complex64::from_polar((-(y - 1e-3).powi(2) / 0.1e-6).exp(), 3e3 * y)
    })
    .unwrap();
    let (a, b) = (Complex64::new(0.3, -1.2), Complex64::new(-2.0, 0.5));
    let mix = Field1D::new(grid, f.amplitudes() * a + g.amplitudes() * b, LAMBDA).unwrap();
    let d = 0.2;
    let lhs = propagate_free_space(&mix, d).unwrap();
    let rhs = propagate_free_space(&f, d).unwrap().into_amplitudes() * a
        + propagate_free_space(&g, d).unwrap().into_amplitudes() * b;
    let err = lhs
        .amplitudes()
        .iter()
        .zip(rhs.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");
}

#[test]
fn spectrum_satisfies_parseval_and_round_trips() {
    let grid = make_grid(512, 10e-3).unwrap();
    let field = Field1D::from_fn(grid, LAMBDA, |y| {
        Complex64::from_polar((-(y / 1e-3).powi(2)).exp(), 2e3 * y)
    })
    .unwrap();
    let spectrum = field.spectrum();
    let df = grid.frequency_spacing();
    let spectral_power: f64 = spectrum.iter().map(|z| z.norm_sqr()).sum::<f64>() * df;
    assert_relative_eq!(spectral_power, field.norm_sqr(), max_relative = 1e-12);
    let back = Field1D::from_spectrum(grid, &spectrum, LAMBDA).unwrap();
    let err = back
        .amplitudes()
        .iter()
        .zip(field.amplitudes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");
}

#[test]
fn operations_on_different_photons_commute() {
    let grid = make_grid(128, 4e-3).unwrap();
    let joint = BiphotonAmplitude::new(
        grid,
        grid,
        ndarray::Array2::from_shape_fn((128, 128), |(s, i)| {
            let (ys, yi) = (grid.position(s), grid.position(i));
            Complex64::from_polar((-(ys * ys + 2.0 * yi * yi) / 1e-6).exp(), 1e3 * (ys - yi))
        }),
        LAMBDA,
        LAMBDA,
    )
    .unwrap();
    let on_signal = OpticalElement::FreeSpace { distance_m: 0.3 };
    let on_idler = OpticalElement::ThinLens {
        focal_m: 0.4,
        aperture_diameter_m: Some(3e-3),
    };
    let a = apply_to_axis(
        &apply_to_axis(&joint, &on_signal, PhotonAxis::Signal).unwrap(),
        &on_idler,
        PhotonAxis::Idler,
    )
    .unwrap();
    let b = apply_to_axis(
        &apply_to_axis(&joint, &on_idler, PhotonAxis::Idler).unwrap(),
        &on_signal,
        PhotonAxis::Signal,
    )
    .unwrap();
    let err = a
        .amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");
}

#[test]
fn axis_application_matches_row_by_row_propagation() {
    let grid = make_grid(64, 2e-3).unwrap();
    let joint = BiphotonAmplitude::new(
        grid,
        grid,
        ndarray::Array2::from_shape_fn((64, 64), |(s, i)| {
            let (ys, yi) = (grid.position(s), grid.position(i));
            Complex64::new(
                (-((ys + yi) / 1e-3).powi(2) - ((ys - yi) / 0.2e-3).powi(2)).exp(),
                0.0,
            )
        }),
        LAMBDA,
        LAMBDA,
    )
    .unwrap();
    let d = 0.05;
    let out = apply_to_axis(
        &joint,
        &OpticalElement::FreeSpace { distance_m: d },
        PhotonAxis::Idler,
    )
    .unwrap();
    for s in [0, 17, 32, 63] {
        let row = propagate_free_space(&joint.row_field(s), d).unwrap();
        let err = row
            .amplitudes()
            .iter()
            .zip(out.amplitudes().row(s))
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }
}
