//! Pattern metrics: widths, first zeros, sinc^2 fits, the width-ratio
//! uncertainty estimator and thin-lens imaging predictions.

mod simplex;

use std::f64::consts::PI;

use crate::elements::{propagate_free_space, OpticalElement, PhotonAxis};
use crate::error::{Error, Result};
use crate::experiment::{BenchSpec, ScanResult};
use crate::grid::Field1D;

/// Planck constant, J s.
pub const PLANCK_H: f64 = 6.626_070_15e-34;

/// Patterns whose max/min ratio is below this are treated as flat.
pub const FLATNESS_RATIO: f64 = 1.05;

/// A local minimum counts as a zero when it is below this fraction of the peak.
pub const ZERO_THRESHOLD: f64 = 1e-3;

/// Normalized residual above which a sinc^2 fit is reported as poor.
pub const POOR_FIT_RESIDUAL: f64 = 1e-2;

/// Slit-A displacement used to measure ghost-image magnification.
pub const MAGNIFICATION_PROBE_M: f64 = 0.5e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Coincidence,
    Singles,
}

impl ScanResult {
    pub fn channel(&self, channel: Channel) -> &[f64] {
        match channel {
            Channel::Coincidence => &self.coincidence,
            Channel::Singles => &self.singles_d2,
        }
    }
}

fn check_profile(positions: &[f64], values: &[f64]) -> Result<()> {
    if positions.len() != values.len() {
        return Err(Error::invalid(
            "values",
            "positions and values differ in length",
        ));
    }
    if positions.len() < 3 {
        return Err(Error::invalid("positions", "need at least 3 samples"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("values", "non-finite sample"));
    }
    Ok(())
}

fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, &v)| {
            if v > best.1 {
                (k, v)
            } else {
                best
            }
        })
        .0
}

/// Full width at half maximum by linear interpolation between the samples
/// that straddle half of the global maximum.
pub fn fwhm_profile(positions: &[f64], values: &[f64]) -> Result<f64> {
    check_profile(positions, values)?;
    let peak_index = argmax(values);
    let peak = values[peak_index];
    let floor = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = if floor > 0.0 {
        peak / floor
    } else {
        f64::INFINITY
    };
    if !(peak > 0.0) || ratio < FLATNESS_RATIO {
        return Err(Error::NoPattern { ratio });
    }
    let half = 0.5 * peak;

    let left = (0..peak_index)
        .rev()
        .find(|&k| values[k] <= half)
        .ok_or(Error::WindowTooSmall)?;
    let right = (peak_index + 1..values.len())
        .find(|&k| values[k] <= half)
        .ok_or(Error::WindowTooSmall)?;

    let cross = |a: usize, b: usize| {
        let t = (half - values[a]) / (values[b] - values[a]);
        positions[a] + t * (positions[b] - positions[a])
    };
    Ok(cross(right - 1, right) - cross(left + 1, left))
}

pub fn fwhm(scan: &ScanResult, channel: Channel) -> Result<f64> {
    fwhm_profile(&scan.positions_m, scan.channel(channel))
}

/// Vertex of the parabola through three consecutive samples.
fn parabolic_vertex(positions: &[f64], values: &[f64], k: usize) -> f64 {
    let (x0, x1, x2) = (positions[k - 1], positions[k], positions[k + 1]);
    let (y0, y1, y2) = (values[k - 1], values[k], values[k + 1]);
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    if a == 0.0 {
        x1
    } else {
        (-b / (2.0 * a)).clamp(x0, x2)
    }
}

fn refined_peak(positions: &[f64], values: &[f64]) -> f64 {
    let k = argmax(values);
    if k == 0 || k + 1 == values.len() {
        positions[k]
    } else {
        parabolic_vertex(positions, values, k)
    }
}

/// Distance from the peak to the first minimum that dips below
/// [`ZERO_THRESHOLD`] of the peak, averaged over the sides where one exists.
pub fn first_zero_profile(positions: &[f64], values: &[f64]) -> Result<Option<f64>> {
    check_profile(positions, values)?;
    let k0 = argmax(values);
    let peak = values[k0];
    let y_peak = refined_peak(positions, values);
    let threshold = ZERO_THRESHOLD * peak;

    let is_min = |k: usize| values[k] <= values[k - 1] && values[k] <= values[k + 1];
    let right = (k0 + 1..values.len().saturating_sub(1)).find(|&k| is_min(k));
    let left = (1..k0).rev().find(|&k| is_min(k));

    let distances: Vec<f64> = [left, right]
        .into_iter()
        .flatten()
        .filter(|&k| values[k] < threshold)
        .map(|k| (parabolic_vertex(positions, values, k) - y_peak).abs())
        .collect();
    Ok(match distances.len() {
        0 => None,
        n => Some(distances.iter().sum::<f64>() / n as f64),
    })
}

/// Wavelength and slit-to-detector distance for Fraunhofer fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitGeometry {
    pub wavelength_m: f64,
    pub distance_m: f64,
}

impl FitGeometry {
    /// Far-field scale `lambda L`.
    pub fn scale(&self) -> f64 {
        self.wavelength_m * self.distance_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SincFit {
    /// Fitted slit-equivalent width.
    pub width_m: f64,
    pub center_m: f64,
    pub peak: f64,
    /// `||data - model|| / ||data||`
    pub residual: f64,
}

impl SincFit {
    pub fn is_good(&self) -> bool {
        self.residual < POOR_FIT_RESIDUAL
    }

    /// First zero of the fitted pattern, `lambda L / w`.
    pub fn first_zero_m(&self, geometry: &FitGeometry) -> f64 {
        geometry.scale() / self.width_m
    }
}

fn sinc_sq(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        1.0 - u * u / 3.0
    } else {
        let s = u.sin() / u;
        s * s
    }
}

/// Least-squares fit of `peak * sinc^2(pi w (y - y0) / (lambda L))`.
///
/// The peak enters linearly and is eliminated in closed form; `(y0, w)` are
/// searched with Nelder-Mead from several starting widths, since the
/// objective has local minima at lobe-aliased widths.
pub fn fit_sinc2_profile(
    positions: &[f64],
    values: &[f64],
    geometry: &FitGeometry,
) -> Result<SincFit> {
    check_profile(positions, values)?;
    if !(geometry.scale() > 0.0 && geometry.scale().is_finite()) {
        return Err(Error::invalid(
            "geometry",
            "wavelength and distance must be positive",
        ));
    }
    let data_norm: f64 = values.iter().map(|v| v * v).sum();
    if !(data_norm > 0.0) {
        return Err(Error::NoPattern { ratio: 1.0 });
    }
    let x_first = positions[0];
    let x_last = positions[positions.len() - 1];
    let span = x_last - x_first;
    let pitch = span / (positions.len() - 1) as f64;
    let scale = geometry.scale();
    let w_lo = scale / span;
    let w_hi = scale / (2.0 * pitch);
    let y_peak = refined_peak(positions, values);

    let model_at = |y0: f64, w: f64| -> (f64, f64) {
        let (mut sd, mut ss) = (0.0, 0.0);
        for (x, d) in positions.iter().zip(values) {
            let s = sinc_sq(PI * w * (x - y0) / scale);
            sd += s * d;
            ss += s * s;
        }
        let peak = if ss > 0.0 { (sd / ss).max(0.0) } else { 0.0 };
        (peak, ss)
    };
    let objective = |p: [f64; 2]| -> f64 {
        let y0 = y_peak + p[0] * pitch;
        let w = w_lo * p[1].exp();
        if !(x_first..=x_last).contains(&y0) || w > w_hi || w < w_lo {
            return f64::MAX;
        }
        let (peak, _) = model_at(y0, w);
        let r: f64 = positions
            .iter()
            .zip(values)
            .map(|(x, d)| {
                let e = d - peak * sinc_sq(PI * w * (x - y0) / scale);
                e * e
            })
            .sum();
        r / data_norm
    };

    let log_range = (w_hi / w_lo).ln();
    let mut starts: Vec<([f64; 2], f64)> = (0..24)
        .map(|k| {
            let p = [0.0, log_range * (k as f64 + 0.5) / 24.0];
            (p, objective(p))
        })
        .collect();
    starts.sort_by(|a, b| a.1.total_cmp(&b.1));

    let opts = simplex::Options::default();
    let mut best: Option<simplex::Minimum> = None;
    let mut iterations = 0;
    for (start, _) in starts.iter().take(3) {
        let m = simplex::minimize(objective, *start, [0.5, 0.05], &opts);
        iterations = iterations.max(m.iterations);
        if m.converged && best.map_or(true, |b| m.value < b.value) {
            best = Some(m);
        }
    }
    let best = best.ok_or(Error::FitFailed { iterations })?;
    let center_m = y_peak + best.point[0] * pitch;
    let width_m = w_lo * best.point[1].exp();
    let (peak, _) = model_at(center_m, width_m);
    Ok(SincFit {
        width_m,
        center_m,
        peak,
        residual: best.value.sqrt(),
    })
}

pub fn fit_sinc2(scan: &ScanResult, geometry: &FitGeometry) -> Result<SincFit> {
    fit_sinc2_profile(&scan.positions_m, &scan.coincidence, geometry)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternStats {
    pub peak_position_m: f64,
    pub fwhm_m: f64,
    pub first_zero_m: Option<f64>,
    pub sinc_fit: Option<SincFit>,
    pub uncertainty_product_over_h: f64,
}

impl PatternStats {
    /// Metrics of one profile. The uncertainty product is self-referenced
    /// (exactly 1) until [`PatternStats::referenced_to`] is applied.
    pub fn from_profile(
        positions: &[f64],
        values: &[f64],
        geometry: Option<&FitGeometry>,
    ) -> Result<Self> {
        let fwhm_m = fwhm_profile(positions, values)?;
        Ok(Self {
            peak_position_m: refined_peak(positions, values),
            fwhm_m,
            first_zero_m: first_zero_profile(positions, values)?,
            sinc_fit: geometry.and_then(|g| fit_sinc2_profile(positions, values, g).ok()),
            uncertainty_product_over_h: 1.0,
        })
    }

    pub fn from_scan(
        scan: &ScanResult,
        channel: Channel,
        geometry: Option<&FitGeometry>,
    ) -> Result<Self> {
        Self::from_profile(&scan.positions_m, scan.channel(channel), geometry)
    }

    pub fn referenced_to(self, reference: &PatternStats, slit_width_m: f64) -> Result<Self> {
        let u = uncertainty_product(&self, reference, slit_width_m)?;
        Ok(Self {
            uncertainty_product_over_h: u.product_over_h,
            ..self
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyProduct {
    /// Position uncertainty, taken as the slit width.
    pub delta_y_m: f64,
    /// Momentum uncertainty, kg m / s.
    pub delta_p: f64,
    pub product_over_h: f64,
}

/// `dy = slit width`, `dp = (h / dy) * fwhm_measured / fwhm_reference`, so a
/// pattern as wide as the real-slit reference gives exactly `h`.
pub fn uncertainty_product(
    measured: &PatternStats,
    reference: &PatternStats,
    slit_width_m: f64,
) -> Result<UncertaintyProduct> {
    if !(reference.fwhm_m > 0.0 && reference.fwhm_m.is_finite()) {
        return Err(Error::invalid(
            "reference",
            "reference FWHM must be positive",
        ));
    }
    if !(slit_width_m > 0.0 && slit_width_m.is_finite()) {
        return Err(Error::invalid("slit_width_m", "must be positive"));
    }
    let product_over_h = measured.fwhm_m / reference.fwhm_m;
    Ok(UncertaintyProduct {
        delta_y_m: slit_width_m,
        delta_p: PLANCK_H / slit_width_m * product_over_h,
        product_over_h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinLensImage {
    pub image_distance_m: f64,
    pub magnification: f64,
}

/// `1/a + 1/b = 1/f`, `m = -b/a`.
pub fn thin_lens_predict(object_distance_m: f64, focal_m: f64) -> Result<ThinLensImage> {
    if !(object_distance_m.is_finite() && object_distance_m != 0.0) {
        return Err(Error::invalid(
            "object_distance_m",
            "must be finite and non-zero",
        ));
    }
    if !(focal_m.is_finite() && focal_m != 0.0) {
        return Err(Error::invalid("focal_m", "must be finite and non-zero"));
    }
    if object_distance_m == focal_m {
        return Err(Error::ImageAtInfinity);
    }
    let image_distance_m = 1.0 / (1.0 / focal_m - 1.0 / object_distance_m);
    Ok(ThinLensImage {
        image_distance_m,
        magnification: -image_distance_m / object_distance_m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneSweep {
    pub min_m: f64,
    pub max_m: f64,
    pub steps: usize,
}

impl PlaneSweep {
    pub fn planes(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| self.min_m + (self.max_m - self.min_m) * k as f64 / last)
            .collect()
    }

    pub fn step_m(&self) -> f64 {
        (self.max_m - self.min_m) / (self.steps - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GhostImageReport {
    /// Idler-arm distances from the crystal.
    pub planes_m: Vec<f64>,
    /// Conditional FWHM per plane; `None` where no width could be measured.
    pub fwhm_m: Vec<Option<f64>>,
    /// Refined by a parabola through the narrowest sampled plane and its
    /// neighbours; `best_fwhm_m` is measured at the refined plane.
    pub best_plane_m: f64,
    pub best_fwhm_m: f64,
    pub magnification: Option<f64>,
    /// False when the narrowest plane sits on the edge of the sweep.
    pub focus_inside: bool,
}

/// Conditional idler intensity (per the bench's D1) at each plane, with the
/// idler photon propagated straight from the crystal.
fn conditional_profiles(bench: &BenchSpec, planes: &[f64]) -> Result<Vec<ndarray::Array1<f64>>> {
    let mut joint = bench.build_source()?;
    for e in &bench.signal_arm.elements {
        joint = crate::elements::apply_to_axis(&joint, e, PhotonAxis::Signal)?;
    }
    let rows: Vec<(f64, Field1D)> = bench
        .d1
        .weights(&bench.grid)?
        .into_iter()
        .map(|(s, w)| (w, joint.row_field(s)))
        .collect();
    planes
        .iter()
        .map(|&d| {
            let mut acc = ndarray::Array1::<f64>::zeros(bench.grid.n_points());
            for (w, row) in &rows {
                let at_plane = propagate_free_space(row, d)?;
                acc.zip_mut_with(&at_plane.intensity(), |a, i| *a += w * i);
            }
            Ok(acc)
        })
        .collect()
}

fn windowed_centroid(positions: &[f64], values: &[f64], half_window_m: f64) -> f64 {
    let center = positions[argmax(values)];
    let (mut m0, mut m1) = (0.0, 0.0);
    for (y, v) in positions.iter().zip(values) {
        if (y - center).abs() <= half_window_m {
            m0 += v;
            m1 += v * y;
        }
    }
    m1 / m0
}

/// Sweeps the idler observation plane and locates the sharpest conditional
/// image of slit A; magnification is measured by displacing slit A.
pub fn ghost_image_stats(bench: &BenchSpec, sweep: &PlaneSweep) -> Result<GhostImageReport> {
    bench.validate()?;
    if sweep.steps < 2 || !(sweep.min_m < sweep.max_m) || sweep.min_m < 0.0 {
        return Err(Error::invalid(
            "plane_sweep",
            "need min < max, min >= 0 and at least 2 steps",
        ));
    }
    if bench
        .idler_arm
        .elements
        .iter()
        .any(|e| matches!(e, OpticalElement::Slit { .. }))
    {
        return Err(Error::invalid(
            "idler_arm",
            "screen B must be open for a ghost-image sweep",
        ));
    }
    let positions = bench.grid.positions().to_vec();
    let planes_m = sweep.planes();
    let fwhm_m: Vec<Option<f64>> = conditional_profiles(bench, &planes_m)?
        .iter()
        .map(|p| fwhm_profile(&positions, p.as_slice().unwrap()).ok())
        .collect();

    let (best, best_fwhm_m) = fwhm_m
        .iter()
        .enumerate()
        .filter_map(|(k, w)| w.map(|w| (k, w)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::NoPattern { ratio: 1.0 })?;
    let focus_inside = best > 0 && best + 1 < planes_m.len();
    // sub-step refinement: vertex of the parabola through the neighbours
    let (best_plane_m, best_fwhm_m) = match (
        focus_inside,
        best.checked_sub(1).and_then(|k| fwhm_m[k]),
        fwhm_m.get(best + 1).copied().flatten(),
    ) {
        (true, Some(_), Some(_)) => {
            let widths: Vec<f64> = fwhm_m[best - 1..=best + 1]
                .iter()
                .map(|w| w.unwrap())
                .collect();
            let z = parabolic_vertex(&planes_m[best - 1..=best + 1], &widths, 1);
            let profile = &conditional_profiles(bench, &[z])?[0];
            match fwhm_profile(&positions, profile.as_slice().unwrap()) {
                Ok(w) if w <= best_fwhm_m => (z, w),
                _ => (planes_m[best], best_fwhm_m),
            }
        }
        _ => (planes_m[best], best_fwhm_m),
    };

    let magnification = match bench.slit_a() {
        Some((_, _, center)) => {
            let window = 5.0 * best_fwhm_m;
            let here = &conditional_profiles(bench, &[best_plane_m])?[0];
            let shifted_bench = bench.with_slit_a_center(center + MAGNIFICATION_PROBE_M)?;
            let there = &conditional_profiles(&shifted_bench, &[best_plane_m])?[0];
            let c0 = windowed_centroid(&positions, here.as_slice().unwrap(), window);
            let c1 = windowed_centroid(&positions, there.as_slice().unwrap(), window);
            Some((c1 - c0) / MAGNIFICATION_PROBE_M)
        }
        None => None,
    };

    Ok(GhostImageReport {
        planes_m,
        fwhm_m,
        best_plane_m,
        best_fwhm_m,
        magnification,
        focus_inside,
    })
}
