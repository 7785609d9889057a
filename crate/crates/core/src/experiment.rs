//! The two-arm bench: source, signal and idler optical paths, detectors and
//! detector scans. Also hosts the advanced-wave computation used as an
//! independent check of the joint-amplitude propagation.

use ndarray::Array1;
use num_complex::Complex64;

use crate::elements::{apply_to_axis_in_place, ArmSpec, OpticalElement, PhotonAxis};
use crate::error::{Error, Result};
use crate::grid::{
    make_grid, BiphotonAmplitude, Field1D, TransverseGrid, DEFAULT_EXTENT_M, DEFAULT_POINTS,
};
use crate::source::SourceSpec;

pub const CRYSTAL_TO_LENS_M: f64 = 0.255;
pub const LENS_FOCAL_M: f64 = 0.5;
pub const LENS_APERTURE_M: f64 = 25e-3;
pub const LENS_TO_SLIT_A_M: f64 = 1.0;
pub const SLIT_WIDTH_M: f64 = 0.16e-3;
pub const CRYSTAL_TO_SCREEN_B_M: f64 = 0.745;
pub const SCREEN_B_TO_D2_M: f64 = 0.5;
pub const DETECTOR_APERTURE_M: f64 = 180e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorMode {
    /// Intensity at the detector center.
    Point,
    /// Intensity integrated over the aperture.
    Bucket,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec {
    pub mode: DetectorMode,
    pub aperture_diameter_m: f64,
    pub position_m: f64,
}

impl DetectorSpec {
    pub fn point(position_m: f64) -> Self {
        Self {
            mode: DetectorMode::Point,
            aperture_diameter_m: DETECTOR_APERTURE_M,
            position_m,
        }
    }

    pub fn bucket(aperture_diameter_m: f64, position_m: f64) -> Self {
        Self {
            mode: DetectorMode::Bucket,
            aperture_diameter_m,
            position_m,
        }
    }

    pub fn at(self, position_m: f64) -> Self {
        Self { position_m, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.aperture_diameter_m.is_finite() && self.aperture_diameter_m > 0.0) {
            return Err(Error::invalid(
                "aperture_diameter_m",
                format!("{} is not positive", self.aperture_diameter_m),
            ));
        }
        if !self.position_m.is_finite() {
            return Err(Error::invalid("position_m", "not finite"));
        }
        Ok(())
    }

    /// Quadrature weights `(index, weight)` such that the detected rate of
    /// an intensity profile `I` is `sum weight * I[index]`.
    ///
    /// Point detectors interpolate linearly between the two neighbouring
    /// samples; bucket detectors integrate the cell-averaged aperture.
    pub fn weights(&self, grid: &TransverseGrid) -> Result<Vec<(usize, f64)>> {
        self.validate()?;
        grid.check_contains(self.position_m)?;
        match self.mode {
            DetectorMode::Point => {
                let t = (self.position_m - grid.first_position()) / grid.spacing_m();
                let k = (t.floor() as usize).min(grid.n_points() - 2);
                let frac = (t - k as f64).clamp(0.0, 1.0);
                Ok(if frac == 0.0 {
                    vec![(k, 1.0)]
                } else {
                    vec![(k, 1.0 - frac), (k + 1, frac)]
                })
            }
            DetectorMode::Bucket => {
                let dx = grid.spacing_m();
                Ok(grid
                    .cell_coverage(self.aperture_diameter_m, self.position_m)
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0.0)
                    .map(|(k, &c)| (k, c * dx))
                    .collect())
            }
        }
    }
}

/// Element placed at screen B in the idler arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdlerScreen {
    /// A real slit matching slit A.
    Slit,
    Open,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub grid: TransverseGrid,
    pub source: SourceSpec,
    pub signal_arm: ArmSpec,
    pub idler_arm: ArmSpec,
    pub d1: DetectorSpec,
    pub d2: DetectorSpec,
}

impl BenchSpec {
    /// The standard ghost-imaging bench: slit A sits 2f behind the lens and
    /// screen B is 2f from the lens when unfolded through the crystal
    /// (255 mm + 745 mm), so slit A is imaged one-to-one onto screen B.
    pub fn standard(screen: IdlerScreen) -> Self {
        let source = SourceSpec::default();
        let signal_arm = ArmSpec {
            elements: vec![
                OpticalElement::FreeSpace {
                    distance_m: CRYSTAL_TO_LENS_M,
                },
                OpticalElement::ThinLens {
                    focal_m: LENS_FOCAL_M,
                    aperture_diameter_m: Some(LENS_APERTURE_M),
                },
                OpticalElement::FreeSpace {
                    distance_m: LENS_TO_SLIT_A_M,
                },
                OpticalElement::Slit {
                    width_m: SLIT_WIDTH_M,
                    center_m: 0.0,
                },
            ],
            wavelength_m: source.lambda_signal_m,
        };
        let screen_b = match screen {
            IdlerScreen::Slit => OpticalElement::Slit {
                width_m: SLIT_WIDTH_M,
                center_m: 0.0,
            },
            IdlerScreen::Open => OpticalElement::Open,
        };
        let idler_arm = ArmSpec {
            elements: vec![
                OpticalElement::FreeSpace {
                    distance_m: CRYSTAL_TO_SCREEN_B_M,
                },
                screen_b,
                OpticalElement::FreeSpace {
                    distance_m: SCREEN_B_TO_D2_M,
                },
            ],
            wavelength_m: source.lambda_idler_m,
        };
        Self {
            grid: make_grid(DEFAULT_POINTS, DEFAULT_EXTENT_M).expect("default grid is valid"),
            source,
            signal_arm,
            idler_arm,
            d1: DetectorSpec::bucket(DETECTOR_APERTURE_M, 0.0),
            d2: DetectorSpec::point(0.0),
        }
    }

    pub fn with_source(self, source: SourceSpec) -> Self {
        Self { source, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        for arm in [&self.signal_arm, &self.idler_arm] {
            arm.validate()?;
            for e in &arm.elements {
                if let OpticalElement::FreeSpace { distance_m } = e {
                    if *distance_m < 0.0 {
                        return Err(Error::invalid(
                            "distance_m",
                            "bench arms propagate forward only",
                        ));
                    }
                }
            }
        }
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        if !same(self.signal_arm.wavelength_m, self.source.lambda_signal_m)
            || !same(self.idler_arm.wavelength_m, self.source.lambda_idler_m)
        {
            return Err(Error::invalid(
                "wavelength_m",
                "arm wavelengths must match the source",
            ));
        }
        self.d1.validate()?;
        self.d2.validate()
    }

    pub fn build_source(&self) -> Result<BiphotonAmplitude> {
        self.source.build(&self.grid, &self.grid)
    }

    /// Last slit in the signal arm (slit A), if any.
    pub fn slit_a(&self) -> Option<(usize, f64, f64)> {
        self.signal_arm
            .elements
            .iter()
            .enumerate()
            .rev()
            .find_map(|(k, e)| match *e {
                OpticalElement::Slit { width_m, center_m } => Some((k, width_m, center_m)),
                _ => None,
            })
    }

    /// Copy of the bench with slit A (and D1 behind it) moved to `center_m`.
    pub fn with_slit_a_center(&self, center_m: f64) -> Result<Self> {
        let (k, width_m, _) = self
            .slit_a()
            .ok_or_else(|| Error::invalid("signal_arm", "no slit in the signal arm"))?;
        let mut bench = self.clone();
        bench.signal_arm.elements[k] = OpticalElement::Slit { width_m, center_m };
        bench.d1.position_m = center_m;
        Ok(bench)
    }

    /// Grid positions at which slit A transmits.
    pub fn slit_a_sample_positions(&self) -> Result<Vec<f64>> {
        let (_, width_m, center_m) = self
            .slit_a()
            .ok_or_else(|| Error::invalid("signal_arm", "no slit in the signal arm"))?;
        Ok(self
            .grid
            .cell_coverage(width_m, center_m)
            .iter()
            .enumerate()
            .filter(|(_, &t)| t > 0.0)
            .map(|(k, _)| self.grid.position(k))
            .collect())
    }
}

/// Applies each arm's elements, in order, to its own axis.
pub fn propagate_bench(joint: &BiphotonAmplitude, bench: &BenchSpec) -> Result<BiphotonAmplitude> {
    let mut out = joint.clone();
    for e in &bench.signal_arm.elements {
        apply_to_axis_in_place(&mut out, e, PhotonAxis::Signal)?;
    }
    for e in &bench.idler_arm.elements {
        apply_to_axis_in_place(&mut out, e, PhotonAxis::Idler)?;
    }
    Ok(out)
}

/// Propagates only the idler photon; the signal photon is left untouched.
pub fn propagate_idler_only(joint: &BiphotonAmplitude, arm: &ArmSpec) -> Result<BiphotonAmplitude> {
    let mut out = joint.clone();
    for e in &arm.elements {
        apply_to_axis_in_place(&mut out, e, PhotonAxis::Idler)?;
    }
    Ok(out)
}

/// Joint detection rate `sum_a sum_b w1_a w2_b |A_ab|^2`.
pub fn coincidence_rate(
    joint: &BiphotonAmplitude,
    d1: &DetectorSpec,
    d2: &DetectorSpec,
) -> Result<f64> {
    let w1 = d1.weights(joint.grid_s())?;
    let w2 = d2.weights(joint.grid_i())?;
    let a = joint.amplitudes();
    Ok(w1
        .iter()
        .map(|&(s, ws)| {
            ws * w2
                .iter()
                .map(|&(i, wi)| wi * a[[s, i]].norm_sqr())
                .sum::<f64>()
        })
        .sum())
}

/// Idler detection rate with the signal photon traced out.
pub fn singles_rate(joint: &BiphotonAmplitude, d2: &DetectorSpec) -> Result<f64> {
    let marginal = joint.idler_marginal();
    Ok(d2
        .weights(joint.grid_i())?
        .iter()
        .map(|&(i, w)| w * marginal[i])
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanWindow {
    pub y_min_m: f64,
    pub y_max_m: f64,
    pub steps: usize,
}

impl ScanWindow {
    pub fn new(y_min_m: f64, y_max_m: f64, steps: usize) -> Result<Self> {
        let w = Self {
            y_min_m,
            y_max_m,
            steps,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::invalid("steps", "a scan needs at least 2 positions"));
        }
        if !(self.y_min_m.is_finite() && self.y_max_m.is_finite() && self.y_min_m < self.y_max_m) {
            return Err(Error::invalid(
                "y_min_m",
                "scan window must satisfy y_min < y_max",
            ));
        }
        Ok(())
    }

    /// Evenly spaced positions including both ends.
    pub fn positions(&self) -> Vec<f64> {
        let span = self.y_max_m - self.y_min_m;
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| self.y_min_m + span * k as f64 / last)
            .collect()
    }
}

/// D2 sweep with D1 held fixed. Rates are normalized to a peak of 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub positions_m: Vec<f64>,
    pub coincidence: Vec<f64>,
    pub singles_d2: Vec<f64>,
    pub bench: BenchSpec,
}

fn normalize_peak(values: &mut [f64]) {
    let peak = values.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        values.iter_mut().for_each(|v| *v /= peak);
    }
}

/// Sweeps D2 across `scan` and records coincidence and D2 singles rates.
///
/// Singles are evaluated on the amplitude propagated through the idler arm
/// only, so no element of the signal arm conditions them.
pub fn run_coincidence_scan(bench: &BenchSpec, scan: &ScanWindow) -> Result<ScanResult> {
    bench.validate()?;
    scan.validate()?;
    let grid = &bench.grid;
    grid.check_contains(scan.y_min_m)?;
    grid.check_contains(scan.y_max_m)?;

    let source = bench.build_source()?;
    let at_detectors = propagate_bench(&source, bench)?;
    let idler_only = propagate_idler_only(&source, &bench.idler_arm)?;

    let positions_m = scan.positions();
    let mut coincidence = Vec::with_capacity(positions_m.len());
    let mut singles_d2 = Vec::with_capacity(positions_m.len());
    for &y in &positions_m {
        let d2 = bench.d2.at(y);
        coincidence.push(coincidence_rate(&at_detectors, &bench.d1, &d2)?);
        singles_d2.push(singles_rate(&idler_only, &d2)?);
    }
    normalize_peak(&mut coincidence);
    normalize_peak(&mut singles_d2);
    Ok(ScanResult {
        positions_m,
        coincidence,
        singles_d2,
        bench: bench.clone(),
    })
}

/// Idler-axis slice `A(y1, .)` at the signal sample nearest `y1_m`.
pub fn conditional_field(joint_at_detectors: &BiphotonAmplitude, y1_m: f64) -> Result<Field1D> {
    let row = joint_at_detectors.grid_s().nearest_index(y1_m)?;
    Ok(joint_at_detectors.row_field(row))
}

/// Conditional idler intensity given a D1 detection, for either D1 mode.
pub fn conditional_intensity(
    joint_at_detectors: &BiphotonAmplitude,
    d1: &DetectorSpec,
) -> Result<Array1<f64>> {
    let a = joint_at_detectors.amplitudes();
    let mut out = Array1::zeros(joint_at_detectors.grid_i().n_points());
    for (s, w) in d1.weights(joint_at_detectors.grid_s())? {
        out.zip_mut_with(&a.row(s), |o, z| *o += w * z.norm_sqr());
    }
    Ok(out)
}

/// Advanced-wave computation of the conditional idler field at the D2 plane
/// for a point D1 at `d1_position_m`.
pub fn klyshko_advanced_wave(bench: &BenchSpec, d1_position_m: f64) -> Result<Field1D> {
    klyshko_with_backward_arm(bench, &bench.signal_arm, d1_position_m)
}

/// As [`klyshko_advanced_wave`], with an explicit arm used for the backward
/// leg. Passing something other than `bench.signal_arm` breaks the
/// equivalence with the forward computation.
pub fn klyshko_with_backward_arm(
    bench: &BenchSpec,
    backward_arm: &ArmSpec,
    d1_position_m: f64,
) -> Result<Field1D> {
    let grid = bench.grid;
    let j = grid.nearest_index(d1_position_m)?;
    let mut point = Array1::zeros(grid.n_points());
    point[j] = Complex64::new(1.0 / grid.spacing_m(), 0.0);
    let emitted = Field1D::new(grid, point, bench.signal_arm.wavelength_m)?;

    // time-reversed through the signal optics, back to the crystal
    let at_crystal = backward_arm.propagate_adjoint(&emitted)?;

    // The crystal acts on the advanced wave as a phase-conjugating mirror
    // weighted by the source kernel.
    let kernel = bench.build_source()?;
    let k = kernel.amplitudes();
    let back = at_crystal.amplitudes().mapv(|z| z.conj());
    let dx = grid.spacing_m();
    let reflected = Array1::from_shape_fn(kernel.grid_i().n_points(), |i| {
        back.iter()
            .zip(k.column(i))
            .map(|(b, a)| a * b)
            .sum::<Complex64>()
            * dx
    });
    let idler = Field1D::new(*kernel.grid_i(), reflected, bench.idler_arm.wavelength_m)?;
    bench.idler_arm.propagate(&idler)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KlyshkoReport {
    pub d1_positions_m: Vec<f64>,
    /// Max pointwise difference of peak-normalized patterns, per position.
    pub deviations: Vec<f64>,
}

impl KlyshkoReport {
    pub fn max_deviation(&self) -> f64 {
        self.deviations.iter().cloned().fold(0.0, f64::max)
    }
}

fn peak_normalized(intensity: Array1<f64>) -> Array1<f64> {
    let peak = intensity.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        intensity / peak
    } else {
        intensity
    }
}

/// Compares the 2-D conditional pattern with the advanced-wave pattern at
/// each point-D1 position.
pub fn klyshko_equivalence(
    bench: &BenchSpec,
    backward_arm: &ArmSpec,
    d1_positions_m: &[f64],
) -> Result<KlyshkoReport> {
    bench.validate()?;
    let at_detectors = propagate_bench(&bench.build_source()?, bench)?;
    let deviations = d1_positions_m
        .iter()
        .map(|&y1| {
            let forward = peak_normalized(conditional_field(&at_detectors, y1)?.intensity());
            let advanced =
                peak_normalized(klyshko_with_backward_arm(bench, backward_arm, y1)?.intensity());
            Ok(forward
                .iter()
                .zip(advanced.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KlyshkoReport {
        d1_positions_m: d1_positions_m.to_vec(),
        deviations,
    })
}
