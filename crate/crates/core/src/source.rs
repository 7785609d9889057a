//! SPDC joint transverse amplitude at the crystal plane.
//!
//! The entangled source is the double-Gaussian
//! `A(y_s, y_i) = E_p((y_s + y_i) / 2) * C(y_s - y_i)` with
//! `E_p(x) = exp(-x^2 / w_p^2)` (`w_p` = pump 1/e^2 intensity radius) and
//! `C(d) = exp(-d^2 / sigma_c^2)` (1/e^2 intensity full width `2 sigma_c`).
//! The pump envelope fixes the spread of `q_s + q_i`; the correlation
//! factor fixes how tightly the pair is born at the same point.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{BiphotonAmplitude, Field1D, TransverseGrid};

pub const DEFAULT_PUMP_DIAMETER_M: f64 = 3e-3;
pub const DEFAULT_CORRELATION_WIDTH_M: f64 = 13e-6;
pub const DEFAULT_LAMBDA_PUMP_M: f64 = 351.1e-9;
pub const DEFAULT_LAMBDA_SIGNAL_M: f64 = 702.2e-9;
pub const DEFAULT_LAMBDA_IDLER_M: f64 = 702.2e-9;
pub const DEFAULT_CRYSTAL_LENGTH_M: f64 = 3e-3;

const ENERGY_CONSERVATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Entangled,
    /// Product of the entangled source's position marginals.
    Separable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    /// 1/e^2 intensity diameter of the Gaussian pump at the crystal.
    pub pump_diameter_m: f64,
    /// Transverse birth-position correlation scale.
    pub correlation_width_m: f64,
    pub lambda_pump_m: f64,
    pub lambda_signal_m: f64,
    pub lambda_idler_m: f64,
    pub kind: SourceKind,
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self {
            pump_diameter_m: DEFAULT_PUMP_DIAMETER_M,
            correlation_width_m: DEFAULT_CORRELATION_WIDTH_M,
            lambda_pump_m: DEFAULT_LAMBDA_PUMP_M,
            lambda_signal_m: DEFAULT_LAMBDA_SIGNAL_M,
            lambda_idler_m: DEFAULT_LAMBDA_IDLER_M,
            kind: SourceKind::Entangled,
        }
    }
}

/// Thin-crystal estimate `sqrt(lambda_p L / 2 pi)` of the correlation scale.
pub fn correlation_width_from_crystal(lambda_pump_m: f64, crystal_length_m: f64) -> f64 {
    (lambda_pump_m * crystal_length_m / (2.0 * std::f64::consts::PI)).sqrt()
}

impl SourceSpec {
    pub fn with_kind(self, kind: SourceKind) -> Self {
        Self { kind, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pump_diameter_m", self.pump_diameter_m),
            ("correlation_width_m", self.correlation_width_m),
            ("lambda_pump_m", self.lambda_pump_m),
            ("lambda_signal_m", self.lambda_signal_m),
            ("lambda_idler_m", self.lambda_idler_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("{v} is not positive")));
            }
        }
        let mismatch =
            (1.0 / self.lambda_signal_m + 1.0 / self.lambda_idler_m) * self.lambda_pump_m - 1.0;
        if mismatch.abs() > ENERGY_CONSERVATION_TOL {
            return Err(Error::invalid(
                "lambda_pump_m",
                format!(
                    "1/lambda_s + 1/lambda_i differs from 1/lambda_p by {mismatch:e} (relative)"
                ),
            ));
        }
        // equality is the balanced double-Gaussian, which factorizes
        if self.kind == SourceKind::Entangled && self.pump_diameter_m < self.correlation_width_m {
            return Err(Error::invalid(
                "correlation_width_m",
                "must not exceed the pump diameter for an entangled source",
            ));
        }
        Ok(())
    }

    pub fn pump_radius_m(&self) -> f64 {
        0.5 * self.pump_diameter_m
    }

    /// Pump amplitude envelope `E_p(x)`.
    pub fn pump_envelope(&self, x_m: f64) -> f64 {
        (-(x_m / self.pump_radius_m()).powi(2)).exp()
    }

    /// Pair-correlation amplitude `C(d)`.
    pub fn correlation(&self, d_m: f64) -> f64 {
        (-(d_m / self.correlation_width_m).powi(2)).exp()
    }

    /// Builds the amplitude selected by `kind`.
    pub fn build(
        &self,
        grid_s: &TransverseGrid,
        grid_i: &TransverseGrid,
    ) -> Result<BiphotonAmplitude> {
        match self.kind {
            SourceKind::Entangled => build_biphoton(self, grid_s, grid_i),
            SourceKind::Separable => build_separable(self, grid_s, grid_i),
        }
    }
}

fn check_grids(grid_s: &TransverseGrid, grid_i: &TransverseGrid) -> Result<()> {
    if grid_s != grid_i {
        return Err(Error::GridMismatch(
            "signal and idler grids must be identical".into(),
        ));
    }
    Ok(())
}

fn double_gaussian(spec: &SourceSpec, grid: &TransverseGrid) -> Result<BiphotonAmplitude> {
    let y = grid.positions();
    let n = grid.n_points();
    let amplitudes = Array2::from_shape_fn((n, n), |(s, i)| {
        let (ys, yi) = (y[s], y[i]);
        Complex64::new(
            spec.pump_envelope((ys + yi) / 2.0) * spec.correlation(ys - yi),
            0.0,
        )
    });
    BiphotonAmplitude::new(
        *grid,
        *grid,
        amplitudes,
        spec.lambda_signal_m,
        spec.lambda_idler_m,
    )?
    .normalized()
}

pub fn build_biphoton(
    spec: &SourceSpec,
    grid_s: &TransverseGrid,
    grid_i: &TransverseGrid,
) -> Result<BiphotonAmplitude> {
    if spec.kind != SourceKind::Entangled {
        return Err(Error::invalid(
            "kind",
            "build_biphoton needs an entangled source",
        ));
    }
    spec.validate()?;
    check_grids(grid_s, grid_i)?;
    double_gaussian(spec, grid_s)
}

/// `f(y_s) g(y_i)` with `|f|^2`, `|g|^2` equal to the entangled source's
/// position marginals and flat phase.
pub fn build_separable(
    spec: &SourceSpec,
    grid_s: &TransverseGrid,
    grid_i: &TransverseGrid,
) -> Result<BiphotonAmplitude> {
    if spec.kind != SourceKind::Separable {
        return Err(Error::invalid(
            "kind",
            "build_separable needs a separable source",
        ));
    }
    spec.validate()?;
    check_grids(grid_s, grid_i)?;
    let entangled = double_gaussian(spec, grid_s)?;
    let to_field = |marginal: ndarray::Array1<f64>, grid: &TransverseGrid, lambda: f64| {
        Field1D::new(
            *grid,
            marginal.mapv(|p| Complex64::new(p.sqrt(), 0.0)),
            lambda,
        )
    };
    let f = to_field(entangled.signal_marginal(), grid_s, spec.lambda_signal_m)?;
    let g = to_field(entangled.idler_marginal(), grid_i, spec.lambda_idler_m)?;
    BiphotonAmplitude::from_product(&f, &g)?.normalized()
}

pub fn schmidt_number(joint: &BiphotonAmplitude) -> Result<f64> {
    schmidt_number_of(joint.view())
}

/// `K = (sum l_k)^2 / sum l_k^2` over the squared singular values `l_k`.
///
/// Evaluated without a decomposition: `sum l_k = ||M||_F^2` and
/// `sum l_k^2 = ||M^H M||_F^2`.
pub fn schmidt_number_of(matrix: ArrayView2<'_, Complex64>) -> Result<f64> {
    let trace: f64 = matrix.iter().map(|z| z.norm_sqr()).sum();
    if !(trace.is_finite() && trace > 0.0) {
        return Err(Error::ZeroNorm);
    }
    // Gram matrix on the shorter side
    let (rows, cols) = matrix.dim();
    let gram = if cols <= rows {
        matrix.t().mapv(|z| z.conj()).dot(&matrix)
    } else {
        matrix.dot(&matrix.t().mapv(|z| z.conj()))
    };
    let purity: f64 = gram.iter().map(|z| z.norm_sqr()).sum();
    Ok(trace * trace / purity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use approx::assert_relative_eq;

    #[test]
    fn defaults_conserve_energy_and_validate() {
        let spec = SourceSpec::default();
        spec.validate().unwrap();
        let rel =
            (1.0 / spec.lambda_signal_m + 1.0 / spec.lambda_idler_m) * spec.lambda_pump_m - 1.0;
        assert!(rel.abs() < 1e-12);
    }

    #[test]
    fn default_correlation_width_matches_crystal_estimate() {
        let est = correlation_width_from_crystal(DEFAULT_LAMBDA_PUMP_M, DEFAULT_CRYSTAL_LENGTH_M);
        assert!((est - DEFAULT_CORRELATION_WIDTH_M).abs() < 0.5e-6, "{est}");
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = SourceSpec {
            lambda_idler_m: 800e-9,
            ..SourceSpec::default()
        };
        assert!(bad.validate().is_err());
        let bad = SourceSpec {
            correlation_width_m: 4e-3,
            ..SourceSpec::default()
        };
        assert!(bad.validate().is_err());
        assert!(bad.with_kind(SourceKind::Separable).validate().is_ok());
        let bad = SourceSpec {
            pump_diameter_m: -1.0,
            ..SourceSpec::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn kind_and_grid_preconditions() {
        let g = make_grid(64, 5e-3).unwrap();
        let h = make_grid(64, 6e-3).unwrap();
        let spec = SourceSpec::default();
        assert!(matches!(
            build_biphoton(&spec, &g, &h),
            Err(Error::GridMismatch(_))
        ));
        assert!(build_biphoton(&spec.with_kind(SourceKind::Separable), &g, &g).is_err());
        assert!(build_separable(&spec, &g, &g).is_err());
    }

    #[test]
    fn construction_is_normalized_and_exchange_symmetric() {
        let g = make_grid(256, 5e-3).unwrap();
        let spec = SourceSpec {
            correlation_width_m: 60e-6,
            ..SourceSpec::default()
        };
        let a = build_biphoton(&spec, &g, &g).unwrap();
        assert_relative_eq!(a.norm_sqr(), 1.0, epsilon = 1e-12);
        let m = a.amplitudes();
        assert_eq!(m, &m.t().to_owned());
    }

    #[test]
    fn two_equal_orthogonal_terms_give_two() {
        let mut m = Array2::zeros((8, 8));
        m[[0, 0]] = Complex64::new(1.0, 0.0);
        m[[3, 5]] = Complex64::new(0.0, 1.0);
        assert_relative_eq!(schmidt_number_of(m.view()).unwrap(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_amplitude_is_rejected() {
        let m = Array2::<Complex64>::zeros((4, 4));
        assert_eq!(schmidt_number_of(m.view()), Err(Error::ZeroNorm));
    }
}
