//! Run configuration: `[section]` headers with `key = value` lines.
//!
//! Lengths carry their unit in the key name (`_mm`, `_um`, `_nm`). Every
//! key is optional and defaults to the standard bench; unknown keys are
//! rejected.

use serde::{Deserialize, Serialize};

use crate::analysis::PlaneSweep;
use crate::elements::{ArmSpec, OpticalElement};
use crate::experiment::{BenchSpec, DetectorMode, DetectorSpec, IdlerScreen, ScanWindow};
use crate::grid::make_grid;
use crate::source::{SourceKind, SourceSpec};
use crate::temporal::{self, TemporalSpec};

const MM: f64 = 1e-3;
const UM: f64 = 1e-6;
const NM: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("`{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

impl ConfigError {
    fn invalid(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKindKey {
    Entangled,
    Separable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScreenKey {
    Slit,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorModeKey {
    Point,
    Bucket,
}

impl From<DetectorModeKey> for DetectorMode {
    fn from(k: DetectorModeKey) -> Self {
        match k {
            DetectorModeKey::Point => DetectorMode::Point,
            DetectorModeKey::Bucket => DetectorMode::Bucket,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSection {
    pub source_kind: SourceKindKey,
    pub pump_diameter_mm: f64,
    pub correlation_width_um: f64,
    pub lambda_pump_nm: f64,
    pub lambda_signal_nm: f64,
    pub lambda_idler_nm: f64,
}

impl Default for SourceSection {
    fn default() -> Self {
        let s = SourceSpec::default();
        Self {
            source_kind: SourceKindKey::Entangled,
            pump_diameter_mm: s.pump_diameter_m / MM,
            correlation_width_um: 13.0,
            lambda_pump_nm: 351.1,
            lambda_signal_nm: 702.2,
            lambda_idler_nm: 702.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalArmSection {
    pub crystal_to_lens_mm: f64,
    pub lens_focal_mm: f64,
    pub lens_aperture_mm: f64,
    pub lens_to_slit_a_mm: f64,
    pub slit_a_width_mm: f64,
    pub slit_a_center_mm: f64,
}

impl Default for SignalArmSection {
    fn default() -> Self {
        Self {
            crystal_to_lens_mm: 255.0,
            lens_focal_mm: 500.0,
            lens_aperture_mm: 25.0,
            lens_to_slit_a_mm: 1000.0,
            slit_a_width_mm: 0.16,
            slit_a_center_mm: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdlerArmSection {
    pub crystal_to_screen_b_mm: f64,
    pub slit_b: ScreenKey,
    pub slit_b_width_mm: f64,
    pub slit_b_center_mm: f64,
    pub screen_b_to_d2_mm: f64,
}

impl Default for IdlerArmSection {
    fn default() -> Self {
        Self {
            crystal_to_screen_b_mm: 745.0,
            slit_b: ScreenKey::Slit,
            slit_b_width_mm: 0.16,
            slit_b_center_mm: 0.0,
            screen_b_to_d2_mm: 500.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorsSection {
    pub d1_mode: DetectorModeKey,
    pub d1_aperture_um: f64,
    pub d1_position_mm: f64,
    pub d2_mode: DetectorModeKey,
    pub d2_aperture_um: f64,
}

impl Default for DetectorsSection {
    fn default() -> Self {
        Self {
            d1_mode: DetectorModeKey::Bucket,
            d1_aperture_um: 180.0,
            d1_position_mm: 0.0,
            d2_mode: DetectorModeKey::Point,
            d2_aperture_um: 180.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub y_min_mm: f64,
    pub y_max_mm: f64,
    pub steps: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            y_min_mm: -4.0,
            y_max_mm: 4.0,
            steps: 321,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n_points: usize,
    pub extent_mm: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n_points: crate::grid::DEFAULT_POINTS,
            extent_mm: 15.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GhostSection {
    pub plane_min_mm: f64,
    pub plane_max_mm: f64,
    pub plane_steps: usize,
}

impl Default for GhostSection {
    fn default() -> Self {
        Self {
            plane_min_mm: 600.0,
            plane_max_mm: 900.0,
            plane_steps: 61,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemporalSection {
    pub sigma_plus_per_s: f64,
    pub sigma_minus_per_s: f64,
    pub omega_s_rad_per_s: f64,
    pub omega_i_rad_per_s: f64,
    pub amplitude_a0: f64,
    pub n_points: usize,
    /// Half-span of the time grid in coherence times of the wider envelope.
    pub half_span_coherence_times: f64,
}

impl Default for TemporalSection {
    fn default() -> Self {
        Self {
            sigma_plus_per_s: temporal::DEFAULT_SIGMA_PLUS,
            sigma_minus_per_s: temporal::DEFAULT_SIGMA_MINUS,
            omega_s_rad_per_s: temporal::default_center_frequency(),
            omega_i_rad_per_s: temporal::default_center_frequency(),
            amplitude_a0: 1.0,
            n_points: temporal::DEFAULT_TIME_POINTS,
            half_span_coherence_times: temporal::DEFAULT_SPAN_COHERENCE_TIMES,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub source: SourceSection,
    pub signal_arm: SignalArmSection,
    pub idler_arm: IdlerArmSection,
    pub detectors: DetectorsSection,
    pub scan: ScanSection,
    pub grid: GridSection,
    pub output: OutputSection,
    pub ghost: GhostSection,
    pub temporal: TemporalSection,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(1, |s| line_of(text, s.start));
        let message = e.message().to_string();
        match message.strip_prefix("unknown field `") {
            Some(rest) => ConfigError::UnknownKey {
                line,
                key: rest.split('`').next().unwrap_or_default().to_string(),
            },
            None => ConfigError::Syntax { line, message },
        }
    })?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    /// Canonical text form; `parse_config(render())` reproduces `self`.
    pub fn render(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("source.pump_diameter_mm", self.source.pump_diameter_mm),
            (
                "source.correlation_width_um",
                self.source.correlation_width_um,
            ),
            ("source.lambda_pump_nm", self.source.lambda_pump_nm),
            ("source.lambda_signal_nm", self.source.lambda_signal_nm),
            ("source.lambda_idler_nm", self.source.lambda_idler_nm),
            (
                "signal_arm.lens_aperture_mm",
                self.signal_arm.lens_aperture_mm,
            ),
            (
                "signal_arm.slit_a_width_mm",
                self.signal_arm.slit_a_width_mm,
            ),
            ("idler_arm.slit_b_width_mm", self.idler_arm.slit_b_width_mm),
            ("detectors.d1_aperture_um", self.detectors.d1_aperture_um),
            ("detectors.d2_aperture_um", self.detectors.d2_aperture_um),
            ("grid.extent_mm", self.grid.extent_mm),
            ("temporal.sigma_plus_per_s", self.temporal.sigma_plus_per_s),
            (
                "temporal.sigma_minus_per_s",
                self.temporal.sigma_minus_per_s,
            ),
            (
                "temporal.half_span_coherence_times",
                self.temporal.half_span_coherence_times,
            ),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::invalid(key, format!("{v} must be positive")));
            }
        }
        let non_negative = [
            (
                "signal_arm.crystal_to_lens_mm",
                self.signal_arm.crystal_to_lens_mm,
            ),
            (
                "signal_arm.lens_to_slit_a_mm",
                self.signal_arm.lens_to_slit_a_mm,
            ),
            (
                "idler_arm.crystal_to_screen_b_mm",
                self.idler_arm.crystal_to_screen_b_mm,
            ),
            (
                "idler_arm.screen_b_to_d2_mm",
                self.idler_arm.screen_b_to_d2_mm,
            ),
            ("ghost.plane_min_mm", self.ghost.plane_min_mm),
        ];
        for (key, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::invalid(
                    key,
                    format!("{v} must be non-negative"),
                ));
            }
        }
        let finite = [
            ("signal_arm.lens_focal_mm", self.signal_arm.lens_focal_mm),
            (
                "signal_arm.slit_a_center_mm",
                self.signal_arm.slit_a_center_mm,
            ),
            (
                "idler_arm.slit_b_center_mm",
                self.idler_arm.slit_b_center_mm,
            ),
            ("detectors.d1_position_mm", self.detectors.d1_position_mm),
            ("scan.y_min_mm", self.scan.y_min_mm),
            ("scan.y_max_mm", self.scan.y_max_mm),
            ("ghost.plane_max_mm", self.ghost.plane_max_mm),
            (
                "temporal.omega_s_rad_per_s",
                self.temporal.omega_s_rad_per_s,
            ),
            (
                "temporal.omega_i_rad_per_s",
                self.temporal.omega_i_rad_per_s,
            ),
            ("temporal.amplitude_a0", self.temporal.amplitude_a0),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(ConfigError::invalid(key, format!("{v} must be finite")));
            }
        }
        if self.signal_arm.lens_focal_mm == 0.0 {
            return Err(ConfigError::invalid(
                "signal_arm.lens_focal_mm",
                "must be non-zero",
            ));
        }

        let source = self.source_spec();
        source.validate().map_err(|e| {
            let key = match &e {
                crate::Error::InvalidParameter { name, .. } if *name == "correlation_width_m" => {
                    "source.correlation_width_um"
                }
                _ => "source.lambda_pump_nm",
            };
            ConfigError::invalid(key, e.to_string())
        })?;

        let grid = make_grid(self.grid.n_points, self.grid.extent_mm * MM)
            .map_err(|e| ConfigError::invalid("grid.n_points", e.to_string()))?;
        if !grid.contains(self.detectors.d1_position_mm * MM) {
            return Err(ConfigError::invalid(
                "detectors.d1_position_mm",
                "outside the grid window",
            ));
        }

        let window = self.scan_window();
        if !(self.scan.y_min_mm < self.scan.y_max_mm) {
            return Err(ConfigError::invalid(
                "scan.y_max_mm",
                "must exceed scan.y_min_mm",
            ));
        }
        if self.scan.steps < 2 {
            return Err(ConfigError::invalid("scan.steps", "need at least 2 steps"));
        }
        for (key, y) in [
            ("scan.y_min_mm", window.y_min_m),
            ("scan.y_max_mm", window.y_max_m),
        ] {
            if !grid.contains(y) {
                return Err(ConfigError::invalid(key, "outside the grid window"));
            }
        }

        if !(self.ghost.plane_min_mm < self.ghost.plane_max_mm) {
            return Err(ConfigError::invalid(
                "ghost.plane_max_mm",
                "must exceed ghost.plane_min_mm",
            ));
        }
        if self.ghost.plane_steps < 2 {
            return Err(ConfigError::invalid(
                "ghost.plane_steps",
                "need at least 2 planes",
            ));
        }
        if self.temporal.n_points < 2 {
            return Err(ConfigError::invalid(
                "temporal.n_points",
                "need at least 2 samples",
            ));
        }
        Ok(())
    }

    pub fn source_spec(&self) -> SourceSpec {
        let s = &self.source;
        SourceSpec {
            pump_diameter_m: s.pump_diameter_mm * MM,
            correlation_width_m: s.correlation_width_um * UM,
            lambda_pump_m: s.lambda_pump_nm * NM,
            lambda_signal_m: s.lambda_signal_nm * NM,
            lambda_idler_m: s.lambda_idler_nm * NM,
            kind: match s.source_kind {
                SourceKindKey::Entangled => SourceKind::Entangled,
                SourceKindKey::Separable => SourceKind::Separable,
            },
        }
    }

    pub fn idler_screen(&self) -> IdlerScreen {
        match self.idler_arm.slit_b {
            ScreenKey::Slit => IdlerScreen::Slit,
            ScreenKey::Open => IdlerScreen::Open,
        }
    }

    /// Bench in SI units, with screen B taken from the configuration.
    pub fn to_bench(&self) -> Result<BenchSpec, ConfigError> {
        self.to_bench_with_screen(self.idler_screen())
    }

    pub fn to_bench_with_screen(&self, screen: IdlerScreen) -> Result<BenchSpec, ConfigError> {
        self.validate()?;
        let source = self.source_spec();
        let sa = &self.signal_arm;
        let ia = &self.idler_arm;
        let d = &self.detectors;
        let signal_arm = ArmSpec {
            elements: vec![
                OpticalElement::FreeSpace {
                    distance_m: sa.crystal_to_lens_mm * MM,
                },
                OpticalElement::ThinLens {
                    focal_m: sa.lens_focal_mm * MM,
                    aperture_diameter_m: Some(sa.lens_aperture_mm * MM),
                },
                OpticalElement::FreeSpace {
                    distance_m: sa.lens_to_slit_a_mm * MM,
                },
                OpticalElement::Slit {
                    width_m: sa.slit_a_width_mm * MM,
                    center_m: sa.slit_a_center_mm * MM,
                },
            ],
            wavelength_m: source.lambda_signal_m,
        };
        let screen_b = match screen {
            IdlerScreen::Slit => OpticalElement::Slit {
                width_m: ia.slit_b_width_mm * MM,
                center_m: ia.slit_b_center_mm * MM,
            },
            IdlerScreen::Open => OpticalElement::Open,
        };
        let idler_arm = ArmSpec {
            elements: vec![
                OpticalElement::FreeSpace {
                    distance_m: ia.crystal_to_screen_b_mm * MM,
                },
                screen_b,
                OpticalElement::FreeSpace {
                    distance_m: ia.screen_b_to_d2_mm * MM,
                },
            ],
            wavelength_m: source.lambda_idler_m,
        };
        let detector = |mode: DetectorModeKey, aperture_um: f64, position_mm: f64| DetectorSpec {
            mode: mode.into(),
            aperture_diameter_m: aperture_um * UM,
            position_m: position_mm * MM,
        };
        Ok(BenchSpec {
            grid: make_grid(self.grid.n_points, self.grid.extent_mm * MM)
                .map_err(|e| ConfigError::invalid("grid.n_points", e.to_string()))?,
            source,
            signal_arm,
            idler_arm,
            d1: detector(d.d1_mode, d.d1_aperture_um, d.d1_position_mm),
            d2: detector(d.d2_mode, d.d2_aperture_um, 0.0),
        })
    }

    pub fn scan_window(&self) -> ScanWindow {
        ScanWindow {
            y_min_m: self.scan.y_min_mm * MM,
            y_max_m: self.scan.y_max_mm * MM,
            steps: self.scan.steps,
        }
    }

    pub fn plane_sweep(&self) -> PlaneSweep {
        PlaneSweep {
            min_m: self.ghost.plane_min_mm * MM,
            max_m: self.ghost.plane_max_mm * MM,
            steps: self.ghost.plane_steps,
        }
    }

    pub fn temporal_spec(&self) -> TemporalSpec {
        let t = &self.temporal;
        TemporalSpec {
            sigma_plus: t.sigma_plus_per_s,
            sigma_minus: t.sigma_minus_per_s,
            omega_s: t.omega_s_rad_per_s,
            omega_i: t.omega_i_rad_per_s,
            amplitude_a0: t.amplitude_a0,
            n_points: t.n_points,
            half_span_s: t.half_span_coherence_times / t.sigma_plus_per_s.min(t.sigma_minus_per_s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::BenchSpec;

    #[test]
    fn empty_document_is_the_standard_bench() {
        let config = parse_config("").unwrap();
        assert_eq!(config, RunConfig::default());
        let bench = config.to_bench().unwrap();
        let standard = BenchSpec::standard(IdlerScreen::Slit);
        assert_eq!(
            bench.signal_arm.elements.len(),
            standard.signal_arm.elements.len()
        );
        for (a, b) in bench
            .signal_arm
            .elements
            .iter()
            .zip(&standard.signal_arm.elements)
        {
            assert_elements_close(a, b);
        }
        for (a, b) in bench
            .idler_arm
            .elements
            .iter()
            .zip(&standard.idler_arm.elements)
        {
            assert_elements_close(a, b);
        }
        assert_eq!(bench.grid, standard.grid);
    }

    fn assert_elements_close(a: &OpticalElement, b: &OpticalElement) {
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1e-3);
        let ok = match (a, b) {
            (
                OpticalElement::FreeSpace { distance_m: x },
                OpticalElement::FreeSpace { distance_m: y },
            ) => close(*x, *y),
            (
                OpticalElement::ThinLens {
                    focal_m: f1,
                    aperture_diameter_m: a1,
                },
                OpticalElement::ThinLens {
                    focal_m: f2,
                    aperture_diameter_m: a2,
                },
            ) => close(*f1, *f2) && close(a1.unwrap(), a2.unwrap()),
            (
                OpticalElement::Slit {
                    width_m: w1,
                    center_m: c1,
                },
                OpticalElement::Slit {
                    width_m: w2,
                    center_m: c2,
                },
            ) => close(*w1, *w2) && close(*c1, *c2),
            (OpticalElement::Open, OpticalElement::Open) => true,
            _ => false,
        };
        assert!(ok, "{a:?} != {b:?}");
    }

    #[test]
    fn open_screen_b() {
        let config = parse_config("[idler_arm]\nslit_b = \"open\"\n").unwrap();
        let bench = config.to_bench().unwrap();
        assert_eq!(bench.idler_arm.elements[1], OpticalElement::Open);
    }

    #[test]
    fn negative_width_names_the_key() {
        let err = parse_config("[signal_arm]\nslit_a_width_mm = -1\n").unwrap_err();
        match err {
            ConfigError::Invalid { key, .. } => assert_eq!(key, "signal_arm.slit_a_width_mm"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_config("# comment\n[scan]\nsteps = 11\nstesp = 3\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                line: 4,
                key: "stesp".into()
            }
        );
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_config("[grid]\nn_points = 256\nextent_mm 15\n").unwrap_err();
        assert!(
            matches!(err, ConfigError::Syntax { line: 3, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn defaults_round_trip() {
        let config = RunConfig::default();
        assert_eq!(parse_config(&config.render()).unwrap(), config);
    }
}
