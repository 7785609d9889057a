//! Two-time biphoton wavepacket
//! `Psi(t1, t2) = A0 exp(-s+^2 (t1 + t2)^2) exp(-s-^2 (t1 - t2)^2) exp(-i Ws t1) exp(-i Wi t2)`.
//!
//! Times are `t = T - L/c` in seconds, `s+-` and `W` in rad/s.

use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_TIME_POINTS: usize = 512;
/// Half-span of the time grid in coherence times of the wider envelope.
pub const DEFAULT_SPAN_COHERENCE_TIMES: f64 = 4.0;
pub const DEFAULT_SIGMA_PLUS: f64 = 1e12;
pub const DEFAULT_SIGMA_MINUS: f64 = 1e13;

/// Angular frequency of 702.2 nm light.
pub fn default_center_frequency() -> f64 {
    2.0 * std::f64::consts::PI * 299_792_458.0 / 702.2e-9
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalSpec {
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub omega_s: f64,
    pub omega_i: f64,
    pub amplitude_a0: f64,
    pub n_points: usize,
    /// The grid covers `[-half_span_s, half_span_s]` on both axes.
    pub half_span_s: f64,
}

impl Default for TemporalSpec {
    fn default() -> Self {
        Self::new(DEFAULT_SIGMA_PLUS, DEFAULT_SIGMA_MINUS)
    }
}

impl TemporalSpec {
    /// Default frequencies and grid: 512 points over +-4 coherence times
    /// of the wider envelope.
    pub fn new(sigma_plus: f64, sigma_minus: f64) -> Self {
        Self {
            sigma_plus,
            sigma_minus,
            omega_s: default_center_frequency(),
            omega_i: default_center_frequency(),
            amplitude_a0: 1.0,
            n_points: DEFAULT_TIME_POINTS,
            half_span_s: DEFAULT_SPAN_COHERENCE_TIMES / sigma_plus.min(sigma_minus),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_plus", self.sigma_plus),
            ("sigma_minus", self.sigma_minus),
            ("half_span_s", self.half_span_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("{v} is not positive")));
            }
        }
        for (name, v) in [
            ("omega_s", self.omega_s),
            ("omega_i", self.omega_i),
            ("amplitude_a0", self.amplitude_a0),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if self.n_points < 2 {
            return Err(Error::invalid("n_points", "need at least 2 samples"));
        }
        Ok(())
    }

    /// Symmetric sample times, both ends included.
    pub fn times(&self) -> Array1<f64> {
        let last = (self.n_points - 1) as f64;
        Array1::from_shape_fn(self.n_points, |k| {
            self.half_span_s * (2.0 * k as f64 - last) / last
        })
    }

    pub fn psi_at(&self, t1: f64, t2: f64) -> Complex64 {
        let envelope = self.amplitude_a0
            * (-(self.sigma_plus * (t1 + t2)).powi(2) - (self.sigma_minus * (t1 - t2)).powi(2))
                .exp();
        envelope * Complex64::from_polar(1.0, -(self.omega_s * t1 + self.omega_i * t2))
    }
}

/// `Psi[j, k] = Psi(t_j, t_k)` with rows indexing `t1`.
pub fn eval_biphoton_wavepacket(spec: &TemporalSpec) -> Result<Array2<Complex64>> {
    spec.validate()?;
    let t = spec.times();
    Ok(Array2::from_shape_fn(
        (spec.n_points, spec.n_points),
        |(j, k)| spec.psi_at(t[j], t[k]),
    ))
}

/// Schmidt number of a sampled two-time amplitude.
pub fn factorability_check(psi: ArrayView2<'_, Complex64>) -> Result<f64> {
    if psi.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::invalid("psi", "non-finite entry"));
    }
    crate::source::schmidt_number_of(psi)
}

/// Continuous-limit Schmidt number `(r + 1/r) / 2`, `r = s- / s+`.
pub fn analytic_schmidt_number(sigma_plus: f64, sigma_minus: f64) -> f64 {
    let r = sigma_minus / sigma_plus;
    0.5 * (r + 1.0 / r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small(sp: f64, sm: f64) -> TemporalSpec {
        TemporalSpec {
            n_points: 128,
            ..TemporalSpec::new(sp, sm)
        }
    }

    #[test]
    fn grid_is_symmetric() {
        let t = TemporalSpec::default().times();
        let n = t.len();
        for k in 0..n {
            assert_eq!(t[k], -t[n - 1 - k]);
        }
        assert_relative_eq!(t[n - 1], 4.0 / DEFAULT_SIGMA_PLUS, max_relative = 1e-15);
    }

    #[test]
    fn origin_value_is_a0() {
        let spec = TemporalSpec {
            amplitude_a0: 2.5,
            ..TemporalSpec::default()
        };
        assert_eq!(spec.psi_at(0.0, 0.0), Complex64::new(2.5, 0.0));
    }

    #[test]
    fn equal_widths_factorize() {
        let psi = eval_biphoton_wavepacket(&small(3e12, 3e12)).unwrap();
        assert!((factorability_check(psi.view()).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unequal_widths_entangle() {
        let psi = eval_biphoton_wavepacket(&small(1e12, 1e13)).unwrap();
        assert!(factorability_check(psi.view()).unwrap() > 1.0);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(TemporalSpec::new(0.0, 1e12).validate().is_err());
        assert!(TemporalSpec::new(1e12, -1.0).validate().is_err());
        let spec = TemporalSpec {
            n_points: 1,
            ..TemporalSpec::default()
        };
        assert!(eval_biphoton_wavepacket(&spec).is_err());
    }

    #[test]
    fn zero_matrix_is_rejected() {
        let z = Array2::<Complex64>::zeros((4, 4));
        assert_eq!(factorability_check(z.view()), Err(Error::ZeroNorm));
    }

    #[test]
    fn analytic_limit() {
        assert_eq!(analytic_schmidt_number(1.0, 1.0), 1.0);
        assert_relative_eq!(analytic_schmidt_number(1.0, 10.0), 5.05, epsilon = 1e-12);
    }
}
