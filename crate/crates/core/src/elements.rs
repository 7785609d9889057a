//! Linear optical elements acting on a single transverse field, and their
//! lift to one axis of a joint amplitude.
//!
//! Free space uses the paraxial angular-spectrum transfer function
//! `H(f) = exp(-i pi lambda d f^2)` applied to the full grid band. Distances
//! for which `H` is under-sampled are rejected rather than silently aliased,
//! so every accepted propagation is unitary and `d` then `-d` is the
//! identity.

use std::f64::consts::PI;

use ndarray::{Array1, Axis};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{
    filter_along_axis, sampling_check, scale_along_axis, BiphotonAmplitude, Field1D, TransverseGrid,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpticalElement {
    /// Paraxial free-space propagation; negative distances propagate backward.
    FreeSpace {
        distance_m: f64,
    },
    ThinLens {
        focal_m: f64,
        aperture_diameter_m: Option<f64>,
    },
    /// Hard-edged transmitting band `|y - center| <= width / 2`.
    Slit {
        width_m: f64,
        center_m: f64,
    },
    Open,
}

/// Which photon of a joint amplitude an element acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhotonAxis {
    Signal,
    Idler,
}

impl PhotonAxis {
    fn ndarray_axis(self) -> Axis {
        match self {
            PhotonAxis::Signal => Axis(0),
            PhotonAxis::Idler => Axis(1),
        }
    }
}

/// Per-line action of an element on a given grid.
enum Action {
    Identity,
    Transfer(Vec<Complex64>),
    Mask(Vec<Complex64>),
}

impl OpticalElement {
    pub fn validate(&self) -> Result<()> {
        match *self {
            OpticalElement::FreeSpace { distance_m } => {
                if !distance_m.is_finite() {
                    return Err(Error::invalid("distance_m", "not finite"));
                }
            }
            OpticalElement::ThinLens {
                focal_m,
                aperture_diameter_m,
            } => {
                if !focal_m.is_finite() || focal_m == 0.0 {
                    return Err(Error::invalid(
                        "focal_m",
                        format!("{focal_m} is not a usable focal length"),
                    ));
                }
                if let Some(d) = aperture_diameter_m {
                    if !(d.is_finite() && d > 0.0) {
                        return Err(Error::invalid(
                            "aperture_diameter_m",
                            format!("{d} is not positive"),
                        ));
                    }
                }
            }
            OpticalElement::Slit { width_m, center_m } => {
                if !(width_m.is_finite() && width_m > 0.0) {
                    return Err(Error::invalid(
                        "width_m",
                        format!("{width_m} is not positive"),
                    ));
                }
                if !center_m.is_finite() {
                    return Err(Error::invalid("center_m", "not finite"));
                }
            }
            OpticalElement::Open => {}
        }
        Ok(())
    }

    /// The Hermitian adjoint: free space runs backward, the lens phase is
    /// conjugated, stops are unchanged.
    pub fn adjoint(&self) -> OpticalElement {
        match *self {
            OpticalElement::FreeSpace { distance_m } => OpticalElement::FreeSpace {
                distance_m: -distance_m,
            },
            OpticalElement::ThinLens {
                focal_m,
                aperture_diameter_m,
            } => OpticalElement::ThinLens {
                focal_m: -focal_m,
                aperture_diameter_m,
            },
            other => other,
        }
    }

    fn action(&self, grid: &TransverseGrid, wavelength_m: f64) -> Result<Action> {
        self.validate()?;
        Ok(match *self {
            OpticalElement::Open => Action::Identity,
            OpticalElement::FreeSpace { distance_m } if distance_m == 0.0 => Action::Identity,
            OpticalElement::FreeSpace { distance_m } => {
                Action::Transfer(free_space_transfer(grid, wavelength_m, distance_m)?)
            }
            OpticalElement::ThinLens {
                focal_m,
                aperture_diameter_m,
            } => Action::Mask(lens_transmission(
                grid,
                wavelength_m,
                focal_m,
                aperture_diameter_m,
            )),
            OpticalElement::Slit { width_m, center_m } => Action::Mask(
                grid.cell_coverage(width_m, center_m)
                    .iter()
                    .map(|&t| Complex64::new(t, 0.0))
                    .collect(),
            ),
        })
    }

    pub fn apply(&self, field: &Field1D) -> Result<Field1D> {
        let action = self.action(field.grid(), field.wavelength_m())?;
        Ok(match action {
            Action::Identity => field.clone(),
            Action::Mask(mask) => field.with_amplitudes(field.amplitudes() * &Array1::from(mask)),
            Action::Transfer(transfer) => {
                let mut spectrum = field.amplitudes().to_vec();
                crate::grid::fft_in_place(&mut spectrum, false);
                let scale = 1.0 / spectrum.len() as f64;
                for (z, h) in spectrum.iter_mut().zip(&transfer) {
                    *z *= h * scale;
                }
                crate::grid::fft_in_place(&mut spectrum, true);
                field.with_amplitudes(Array1::from(spectrum))
            }
        })
    }
}

fn free_space_transfer(
    grid: &TransverseGrid,
    wavelength_m: f64,
    distance_m: f64,
) -> Result<Vec<Complex64>> {
    let report = sampling_check(grid, wavelength_m, distance_m);
    if !report.adequate {
        return Err(Error::Aliasing {
            distance_m,
            max_distance_m: report.max_distance_m,
        });
    }
    let cutoff = 1.0 / wavelength_m;
    Ok(grid
        .frequencies()
        .iter()
        .map(|&f| {
            if f.abs() >= cutoff {
                // evanescent
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(1.0, -PI * wavelength_m * distance_m * f * f)
            }
        })
        .collect())
}

fn lens_transmission(
    grid: &TransverseGrid,
    wavelength_m: f64,
    focal_m: f64,
    aperture_diameter_m: Option<f64>,
) -> Vec<Complex64> {
    let stop = aperture_diameter_m.map(|d| grid.cell_coverage(d, 0.0));
    (0..grid.n_points())
        .map(|k| {
            let y = grid.position(k);
            let t = stop.as_ref().map_or(1.0, |s| s[k]);
            Complex64::from_polar(t, -PI * y * y / (wavelength_m * focal_m))
        })
        .collect()
}

pub fn propagate_free_space(field: &Field1D, distance_m: f64) -> Result<Field1D> {
    OpticalElement::FreeSpace { distance_m }.apply(field)
}

pub fn apply_lens(
    field: &Field1D,
    focal_m: f64,
    aperture_diameter_m: Option<f64>,
) -> Result<Field1D> {
    OpticalElement::ThinLens {
        focal_m,
        aperture_diameter_m,
    }
    .apply(field)
}

pub fn apply_aperture(field: &Field1D, width_m: f64, center_m: f64) -> Result<Field1D> {
    OpticalElement::Slit { width_m, center_m }.apply(field)
}

/// Applies `element` to every line of `joint` along `axis`.
pub fn apply_to_axis(
    joint: &BiphotonAmplitude,
    element: &OpticalElement,
    axis: PhotonAxis,
) -> Result<BiphotonAmplitude> {
    let mut out = joint.clone();
    apply_to_axis_in_place(&mut out, element, axis)?;
    Ok(out)
}

pub(crate) fn apply_to_axis_in_place(
    joint: &mut BiphotonAmplitude,
    element: &OpticalElement,
    axis: PhotonAxis,
) -> Result<()> {
    let (grid, wavelength) = match axis {
        PhotonAxis::Signal => (*joint.grid_s(), joint.wavelength_s_m()),
        PhotonAxis::Idler => (*joint.grid_i(), joint.wavelength_i_m()),
    };
    let nd_axis = axis.ndarray_axis();
    match element.action(&grid, wavelength)? {
        Action::Identity => {}
        Action::Mask(mask) => scale_along_axis(joint.amplitudes_mut(), nd_axis, &mask),
        Action::Transfer(transfer) => filter_along_axis(joint.amplitudes_mut(), nd_axis, &transfer),
    }
    Ok(())
}

/// Ordered optical path of one photon from the crystal to its detector plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSpec {
    pub elements: Vec<OpticalElement>,
    pub wavelength_m: f64,
}

impl ArmSpec {
    pub fn new(elements: Vec<OpticalElement>, wavelength_m: f64) -> Result<Self> {
        let arm = Self {
            elements,
            wavelength_m,
        };
        arm.validate()?;
        Ok(arm)
    }

    pub fn empty(wavelength_m: f64) -> Self {
        Self {
            elements: Vec::new(),
            wavelength_m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength_m.is_finite() && self.wavelength_m > 0.0) {
            return Err(Error::invalid(
                "wavelength_m",
                format!("{} is not positive", self.wavelength_m),
            ));
        }
        self.elements.iter().try_for_each(OpticalElement::validate)
    }

    /// Total free-space length.
    pub fn length_m(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| match e {
                OpticalElement::FreeSpace { distance_m } => *distance_m,
                _ => 0.0,
            })
            .sum()
    }

    pub fn propagate(&self, field: &Field1D) -> Result<Field1D> {
        self.elements
            .iter()
            .try_fold(field.clone(), |f, e| e.apply(&f))
    }

    /// Runs the arm in reverse with every element replaced by its adjoint.
    pub fn propagate_adjoint(&self, field: &Field1D) -> Result<Field1D> {
        self.elements
            .iter()
            .rev()
            .try_fold(field.clone(), |f, e| e.adjoint().apply(&f))
    }
}
