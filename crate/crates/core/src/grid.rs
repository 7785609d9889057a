//! Transverse sampling windows and the complex field containers shared by
//! the propagation, source and detection code.
//!
//! Positions are `y_k = -extent + k * spacing` for `k = 0..n`, so the window
//! is periodic with period `2 * extent` and the sample at index `n / 2` sits
//! exactly on the optical axis. Spatial frequencies are in cycles per meter
//! and follow the usual discrete-transform ordering.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 16;
pub const DEFAULT_POINTS: usize = 1024;
pub const DEFAULT_EXTENT_M: f64 = 15e-3;

/// Uniform 1-D sampling of a transverse coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseGrid {
    n_points: usize,
    extent_m: f64,
    spacing_m: f64,
}

impl TransverseGrid {
    pub fn new(n_points: usize, extent_m: f64) -> Result<Self> {
        if n_points < MIN_POINTS {
            return Err(Error::invalid(
                "n_points",
                format!("{n_points} < {MIN_POINTS}"),
            ));
        }
        if !(extent_m.is_finite() && extent_m > 0.0) {
            return Err(Error::invalid(
                "extent_m",
                format!("{extent_m} is not positive"),
            ));
        }
        Ok(Self {
            n_points,
            extent_m,
            spacing_m: 2.0 * extent_m / n_points as f64,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Half-width of the window.
    pub fn extent_m(&self) -> f64 {
        self.extent_m
    }

    pub fn spacing_m(&self) -> f64 {
        self.spacing_m
    }

    /// Frequency-sample pitch `1 / (2 * extent)`.
    pub fn frequency_spacing(&self) -> f64 {
        1.0 / (self.n_points as f64 * self.spacing_m)
    }

    pub fn nyquist(&self) -> f64 {
        1.0 / (2.0 * self.spacing_m)
    }

    pub fn position(&self, index: usize) -> f64 {
        -self.extent_m + index as f64 * self.spacing_m
    }

    pub fn positions(&self) -> Array1<f64> {
        Array1::from_shape_fn(self.n_points, |k| self.position(k))
    }

    /// Conjugate frequencies; indices `0..=n/2` are non-negative so the
    /// Nyquist bin of an even grid is reported as `+nyquist`.
    pub fn frequencies(&self) -> Array1<f64> {
        let n = self.n_points as i64;
        let df = self.frequency_spacing();
        Array1::from_shape_fn(self.n_points, |k| {
            let k = k as i64;
            let signed = if k <= n / 2 { k } else { k - n };
            signed as f64 * df
        })
    }

    /// Largest |frequency| present on the grid.
    pub fn max_frequency(&self) -> f64 {
        (self.n_points / 2) as f64 * self.frequency_spacing()
    }

    pub fn first_position(&self) -> f64 {
        self.position(0)
    }

    pub fn last_position(&self) -> f64 {
        self.position(self.n_points - 1)
    }

    pub fn contains(&self, y_m: f64) -> bool {
        y_m >= self.first_position() && y_m <= self.last_position()
    }

    pub(crate) fn check_contains(&self, y_m: f64) -> Result<()> {
        if self.contains(y_m) {
            Ok(())
        } else {
            Err(Error::OutOfWindow {
                position_m: y_m,
                min_m: self.first_position(),
                max_m: self.last_position(),
            })
        }
    }

    /// Index of the sample closest to `y_m`.
    pub fn nearest_index(&self, y_m: f64) -> Result<usize> {
        self.check_contains(y_m)?;
        let k = ((y_m + self.extent_m) / self.spacing_m).round() as usize;
        Ok(k.min(self.n_points - 1))
    }

    /// Fraction of each sample cell `[y_k - dx/2, y_k + dx/2]` covered by the
    /// interval `[center - width/2, center + width/2]`. This is the cell
    /// average of an ideal hard-edged window.
    pub fn cell_coverage(&self, width_m: f64, center_m: f64) -> Array1<f64> {
        if width_m >= 2.0 * self.extent_m && center_m == 0.0 {
            return Array1::ones(self.n_points);
        }
        let lo = center_m - 0.5 * width_m;
        let hi = center_m + 0.5 * width_m;
        let dx = self.spacing_m;
        Array1::from_shape_fn(self.n_points, |k| {
            let y = self.position(k);
            let overlap = (y + 0.5 * dx).min(hi) - (y - 0.5 * dx).max(lo);
            (overlap / dx).clamp(0.0, 1.0)
        })
    }
}

pub fn make_grid(n_points: usize, extent_m: f64) -> Result<TransverseGrid> {
    TransverseGrid::new(n_points, extent_m)
}

/// Result of [`sampling_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingReport {
    pub adequate: bool,
    /// Largest phase step of the paraxial transfer function between
    /// neighbouring frequency samples, in radians.
    pub max_phase_step_rad: f64,
    /// Largest |distance| for which the transfer function stays sampled.
    pub max_distance_m: f64,
}

/// Checks that the quadratic phase `exp(-i pi lambda d f^2)` advances by less
/// than pi between adjacent frequency samples across the whole band.
pub fn sampling_check(grid: &TransverseGrid, wavelength_m: f64, distance_m: f64) -> SamplingReport {
    let df = grid.frequency_spacing();
    let f_max = grid.max_frequency();
    // phase(f_max) - phase(f_max - df), per meter of propagation
    let step_per_m = PI * wavelength_m * df * (2.0 * f_max - df);
    let max_phase_step_rad = step_per_m * distance_m.abs();
    SamplingReport {
        adequate: max_phase_step_rad < PI,
        max_phase_step_rad,
        max_distance_m: PI / step_per_m,
    }
}

/// Complex amplitude of one transverse mode over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field1D {
    grid: TransverseGrid,
    amplitudes: Array1<Complex64>,
    wavelength_m: f64,
}

impl Field1D {
    pub fn new(
        grid: TransverseGrid,
        amplitudes: Array1<Complex64>,
        wavelength_m: f64,
    ) -> Result<Self> {
        if amplitudes.len() != grid.n_points() {
            return Err(Error::GridMismatch(format!(
                "{} amplitudes for a {}-point grid",
                amplitudes.len(),
                grid.n_points()
            )));
        }
        if !(wavelength_m.is_finite() && wavelength_m > 0.0) {
            return Err(Error::invalid(
                "wavelength_m",
                format!("{wavelength_m} is not positive"),
            ));
        }
        Ok(Self {
            grid,
            amplitudes,
            wavelength_m,
        })
    }

    pub fn from_fn(
        grid: TransverseGrid,
        wavelength_m: f64,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        let amplitudes = grid.positions().mapv(f);
        Self::new(grid, amplitudes, wavelength_m)
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Array1<Complex64> {
        self.amplitudes
    }

    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_m
    }

    pub fn intensity(&self) -> Array1<f64> {
        self.amplitudes.mapv(|a| a.norm_sqr())
    }

    /// `sum |a_k|^2 * dx`
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.spacing_m()
    }

    pub(crate) fn with_amplitudes(&self, amplitudes: Array1<Complex64>) -> Self {
        Self {
            grid: self.grid,
            amplitudes,
            wavelength_m: self.wavelength_m,
        }
    }

    /// Continuous-transform approximation `dx * DFT(a)`, in FFT order.
    pub fn spectrum(&self) -> Array1<Complex64> {
        let mut buf = self.amplitudes.to_vec();
        fft_in_place(&mut buf, false);
        let dx = self.grid.spacing_m();
        Array1::from_iter(buf.into_iter().map(|z| z * dx))
    }

    /// Inverse of [`Field1D::spectrum`].
    pub fn from_spectrum(
        grid: TransverseGrid,
        spectrum: &Array1<Complex64>,
        wavelength_m: f64,
    ) -> Result<Self> {
        let mut buf = spectrum.to_vec();
        fft_in_place(&mut buf, true);
        let scale = 1.0 / (grid.n_points() as f64 * grid.spacing_m());
        Self::new(
            grid,
            Array1::from_iter(buf.into_iter().map(|z| z * scale)),
            wavelength_m,
        )
    }
}

/// Joint transverse amplitude `A(y_s, y_i)`; rows index the signal photon,
/// columns the idler photon.
#[derive(Debug, Clone, PartialEq)]
pub struct BiphotonAmplitude {
    grid_s: TransverseGrid,
    grid_i: TransverseGrid,
    amplitudes: Array2<Complex64>,
    wavelength_s_m: f64,
    wavelength_i_m: f64,
}

impl BiphotonAmplitude {
    pub fn new(
        grid_s: TransverseGrid,
        grid_i: TransverseGrid,
        amplitudes: Array2<Complex64>,
        wavelength_s_m: f64,
        wavelength_i_m: f64,
    ) -> Result<Self> {
        if amplitudes.dim() != (grid_s.n_points(), grid_i.n_points()) {
            return Err(Error::GridMismatch(format!(
                "matrix {:?} does not match grids {} x {}",
                amplitudes.dim(),
                grid_s.n_points(),
                grid_i.n_points()
            )));
        }
        for (name, w) in [
            ("wavelength_s_m", wavelength_s_m),
            ("wavelength_i_m", wavelength_i_m),
        ] {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::invalid(name, format!("{w} is not positive")));
            }
        }
        Ok(Self {
            grid_s,
            grid_i,
            amplitudes: amplitudes.as_standard_layout().into_owned(),
            wavelength_s_m,
            wavelength_i_m,
        })
    }

    /// Product state `f(y_s) g(y_i)`.
    pub fn from_product(signal: &Field1D, idler: &Field1D) -> Result<Self> {
        let f = signal.amplitudes();
        let g = idler.amplitudes();
        let amplitudes = Array2::from_shape_fn((f.len(), g.len()), |(s, i)| f[s] * g[i]);
        Self::new(
            *signal.grid(),
            *idler.grid(),
            amplitudes,
            signal.wavelength_m(),
            idler.wavelength_m(),
        )
    }

    pub fn grid_s(&self) -> &TransverseGrid {
        &self.grid_s
    }

    pub fn grid_i(&self) -> &TransverseGrid {
        &self.grid_i
    }

    pub fn amplitudes(&self) -> &Array2<Complex64> {
        &self.amplitudes
    }

    pub fn view(&self) -> ArrayView2<'_, Complex64> {
        self.amplitudes.view()
    }

    pub fn wavelength_s_m(&self) -> f64 {
        self.wavelength_s_m
    }

    pub fn wavelength_i_m(&self) -> f64 {
        self.wavelength_i_m
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.amplitudes
    }

    /// `sum |A|^2 * dy_s * dy_i`
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>()
            * self.grid_s.spacing_m()
            * self.grid_i.spacing_m()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm_sqr();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::ZeroNorm);
        }
        let scale = 1.0 / norm.sqrt();
        self.amplitudes.mapv_inplace(|a| a * scale);
        Ok(self)
    }

    /// `|A|^2` summed over the signal axis and scaled by `dy_s`: the idler
    /// photon's detection density with the signal photon unobserved.
    pub fn idler_marginal(&self) -> Array1<f64> {
        self.amplitudes.mapv(|a| a.norm_sqr()).sum_axis(Axis(0)) * self.grid_s.spacing_m()
    }

    pub fn signal_marginal(&self) -> Array1<f64> {
        self.amplitudes.mapv(|a| a.norm_sqr()).sum_axis(Axis(1)) * self.grid_i.spacing_m()
    }

    /// The idler-axis slice at signal index `row`.
    pub fn row_field(&self, row: usize) -> Field1D {
        Field1D {
            grid: self.grid_i,
            amplitudes: self.amplitudes.row(row).to_owned(),
            wavelength_m: self.wavelength_i_m,
        }
    }
}

pub(crate) fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    fft.process(buf);
}

/// Multiplies every line of `data` along `axis` by `transfer` in the
/// frequency domain (forward DFT, product, normalized inverse DFT).
pub(crate) fn filter_along_axis(data: &mut Array2<Complex64>, axis: Axis, transfer: &[Complex64]) {
    let n = data.len_of(axis);
    debug_assert_eq!(n, transfer.len());
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let scale = 1.0 / n as f64;
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for mut lane in data.lanes_mut(axis) {
        for (dst, src) in line.iter_mut().zip(lane.iter()) {
            *dst = *src;
        }
        forward.process(&mut line);
        for (z, h) in line.iter_mut().zip(transfer) {
            *z *= h * scale;
        }
        inverse.process(&mut line);
        for (dst, src) in lane.iter_mut().zip(&line) {
            *dst = *src;
        }
    }
}

/// Pointwise multiplication of every line along `axis` by `mask`.
pub(crate) fn scale_along_axis(data: &mut Array2<Complex64>, axis: Axis, mask: &[Complex64]) {
    for mut lane in data.lanes_mut(axis) {
        for (z, m) in lane.iter_mut().zip(mask) {
            *z *= m;
        }
    }
}
