//! `biphoton` command line: subcommands, CSV rendering and exit codes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{self, Channel, FitGeometry, PatternStats};
use crate::config::{parse_config, ConfigError, RunConfig};
use crate::elements::OpticalElement;
use crate::experiment::{self, DetectorSpec, IdlerScreen, ScanResult};
use crate::source::SourceKind;
use crate::temporal;

/// Pass threshold for the advanced-wave comparison.
pub const KLYSHKO_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(
    name = "biphoton",
    version,
    about = "Biphoton ghost-imaging bench simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Configuration file; defaults to the standard bench when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV path; overrides `[output] path`. CSV goes to stdout when
    /// neither is set.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coincidence scan with a real slit at screen B.
    MeasureM1(CommonArgs),
    /// Coincidence scan with screen B open, referenced to the slit scan.
    MeasureM2(CommonArgs),
    /// Sweep the idler observation plane for the ghost image of slit A.
    Ghost(CommonArgs),
    /// Compare the two-photon conditional pattern with the advanced-wave one.
    KlyshkoCheck {
        #[command(flatten)]
        common: CommonArgs,
        /// Lengthen the first free-space leg of the backward arm (mm).
        #[arg(long, allow_hyphen_values = true)]
        perturb_backward_mm: Option<f64>,
    },
    /// Evaluate the two-time wavepacket and its Schmidt number.
    Temporal(CommonArgs),
    /// Parse and validate a configuration, then echo it in canonical form.
    ValidateConfig(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::MeasureM1(c)
            | Command::MeasureM2(c)
            | Command::Ghost(c)
            | Command::Temporal(c)
            | Command::ValidateConfig(c) => c,
            Command::KlyshkoCheck { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::MeasureM1(_) => "measure-m1",
            Command::MeasureM2(_) => "measure-m2",
            Command::Ghost(_) => "ghost",
            Command::KlyshkoCheck { .. } => "klyshko-check",
            Command::Temporal(_) => "temporal",
            Command::ValidateConfig(_) => "validate-config",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("error[config]: {0}")]
    Config(String),
    #[error("error[numerical]: {0}")]
    Numerical(String),
    #[error("error[check]: {0}")]
    Check(String),
    #[error("error[io]: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Check(_) => 4,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Numerical(e.to_string())
    }
}

/// Result of one command: optional CSV body, `key: value` summary lines and
/// an optional check failure raised after the summary was produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub csv: Option<String>,
    pub summary: Vec<(String, String)>,
    pub check_failure: Option<String>,
}

impl Report {
    fn push(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    pub fn summary_text(&self) -> String {
        self.summary
            .iter()
            .map(|(k, v)| format!("{k}: {v}\n"))
            .collect()
    }
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            Ok(parse_config(&text)?)
        }
    }
}

fn metadata_header(command: &str, config: &RunConfig) -> String {
    let mut out = format!("# biphoton {command}\n");
    for line in config.render().lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

fn scan_csv(command: &str, config: &RunConfig, scan: &ScanResult) -> String {
    let mut out = metadata_header(command, config);
    out.push_str("y2_mm,coincidence_norm,singles_d2_norm\n");
    for ((y, c), s) in scan
        .positions_m
        .iter()
        .zip(&scan.coincidence)
        .zip(&scan.singles_d2)
    {
        let _ = writeln!(out, "{:.6},{:.9e},{:.9e}", y * 1e3, c, s);
    }
    out
}

fn fmt_mm(v: f64) -> String {
    let mm = v * 1e3;
    // no "-0.000000"
    format!("{:.6}", if mm.abs() < 5e-7 { 0.0 } else { mm })
}

fn fmt_opt_mm(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), fmt_mm)
}

fn fit_geometry(config: &RunConfig) -> FitGeometry {
    FitGeometry {
        wavelength_m: config.source.lambda_idler_nm * 1e-9,
        distance_m: config.idler_arm.screen_b_to_d2_mm * 1e-3,
    }
}

fn push_stats(report: &mut Report, stats: &PatternStats, geometry: &FitGeometry) {
    report.push("peak_position_mm", fmt_mm(stats.peak_position_m));
    report.push("fwhm_mm", fmt_mm(stats.fwhm_m));
    report.push("first_zero_mm", fmt_opt_mm(stats.first_zero_m));
    match &stats.sinc_fit {
        Some(fit) => {
            report.push("sinc2_fit_width_mm", fmt_mm(fit.width_m));
            report.push(
                "sinc2_fit_first_zero_mm",
                fmt_mm(fit.first_zero_m(geometry)),
            );
            report.push("sinc2_fit_residual", format!("{:.3e}", fit.residual));
            report.push(
                "sinc2_fit_quality",
                if fit.is_good() { "good" } else { "poor" },
            );
        }
        None => report.push("sinc2_fit_width_mm", "none"),
    }
    report.push(
        "uncertainty_product_over_h",
        format!("{:.4}", stats.uncertainty_product_over_h),
    );
}

fn measure(
    config: &RunConfig,
    screen: IdlerScreen,
) -> Result<(ScanResult, PatternStats), CliError> {
    let bench = config.to_bench_with_screen(screen)?;
    let scan = experiment::run_coincidence_scan(&bench, &config.scan_window())?;
    let geometry = fit_geometry(config);
    let stats = PatternStats::from_scan(&scan, Channel::Coincidence, Some(&geometry))?;
    Ok((scan, stats))
}

fn command_measure_m1(config: &RunConfig) -> Result<Report, CliError> {
    let (scan, stats) = measure(config, IdlerScreen::Slit)?;
    let stats = stats.referenced_to(&stats, config.idler_arm.slit_b_width_mm * 1e-3)?;
    let mut report = Report {
        csv: Some(scan_csv("measure-m1", config, &scan)),
        ..Report::default()
    };
    push_stats(&mut report, &stats, &fit_geometry(config));
    Ok(report)
}

fn command_measure_m2(config: &RunConfig) -> Result<Report, CliError> {
    let (_, reference) = measure(config, IdlerScreen::Slit)?;
    let (scan, stats) = measure(config, IdlerScreen::Open)?;
    let stats = stats.referenced_to(&reference, config.signal_arm.slit_a_width_mm * 1e-3)?;
    let mut report = Report {
        csv: Some(scan_csv("measure-m2", config, &scan)),
        ..Report::default()
    };
    push_stats(&mut report, &stats, &fit_geometry(config));
    report.push("reference_fwhm_mm", fmt_mm(reference.fwhm_m));
    report.push(
        "fwhm_ratio_to_reference",
        format!("{:.4}", stats.fwhm_m / reference.fwhm_m),
    );
    if config.source_spec().kind == SourceKind::Separable && stats.uncertainty_product_over_h > 1.0
    {
        report.push(
            "note",
            "no localization: separable source, product exceeds h",
        );
    }
    Ok(report)
}

fn command_ghost(config: &RunConfig) -> Result<Report, CliError> {
    let bench = config.to_bench_with_screen(IdlerScreen::Open)?;
    let ghost = analysis::ghost_image_stats(&bench, &config.plane_sweep())?;
    let mut csv = metadata_header("ghost", config);
    csv.push_str("plane_mm,conditional_fwhm_mm\n");
    for (z, w) in ghost.planes_m.iter().zip(&ghost.fwhm_m) {
        let _ = writeln!(csv, "{:.6},{}", z * 1e3, w.map_or_else(String::new, fmt_mm));
    }
    let mut report = Report {
        csv: Some(csv),
        ..Report::default()
    };
    let sa = &config.signal_arm;
    if let Ok(image) =
        analysis::thin_lens_predict(sa.lens_to_slit_a_mm * 1e-3, sa.lens_focal_mm * 1e-3)
    {
        let plane = image.image_distance_m - sa.crystal_to_lens_mm * 1e-3;
        report.push("predicted_plane_mm", fmt_mm(plane));
        report.push(
            "predicted_magnification",
            format!("{:.4}", image.magnification),
        );
    }
    report.push("best_plane_mm", fmt_mm(ghost.best_plane_m));
    report.push("best_fwhm_mm", fmt_mm(ghost.best_fwhm_m));
    report.push(
        "magnification",
        ghost
            .magnification
            .map_or_else(|| "none".into(), |m| format!("{m:.4}")),
    );
    report.push("focus_inside_sweep", ghost.focus_inside);
    Ok(report)
}

fn command_klyshko(config: &RunConfig, perturb_mm: Option<f64>) -> Result<Report, CliError> {
    let mut bench = config.to_bench()?;
    bench.d1 = DetectorSpec::point(bench.d1.position_m);
    let positions = bench.slit_a_sample_positions()?;
    let mut backward = bench.signal_arm.clone();
    if let Some(extra) = perturb_mm {
        match backward
            .elements
            .iter_mut()
            .find(|e| matches!(e, OpticalElement::FreeSpace { .. }))
        {
            Some(OpticalElement::FreeSpace { distance_m }) => *distance_m += extra * 1e-3,
            _ => backward.elements.insert(
                0,
                OpticalElement::FreeSpace {
                    distance_m: extra * 1e-3,
                },
            ),
        }
    }
    let result = experiment::klyshko_equivalence(&bench, &backward, &positions)?;
    let max = result.max_deviation();
    let pass = max < KLYSHKO_TOLERANCE;
    let mut report = Report::default();
    report.push("d1_positions", positions.len());
    report.push("max_deviation", format!("{max:.3e}"));
    report.push("tolerance", format!("{KLYSHKO_TOLERANCE:.0e}"));
    report.push("result", if pass { "PASS" } else { "FAIL" });
    if !pass {
        report.check_failure = Some(format!(
            "advanced-wave deviation {max:.3e} exceeds {KLYSHKO_TOLERANCE:.0e}"
        ));
    }
    Ok(report)
}

fn command_temporal(config: &RunConfig) -> Result<Report, CliError> {
    let spec = config.temporal_spec();
    let psi = temporal::eval_biphoton_wavepacket(&spec)?;
    let k = temporal::factorability_check(psi.view())?;
    let t = spec.times();

    let mut csv = metadata_header("temporal", config);
    csv.push_str("# |psi(t1, t2)|: rows t1, columns t2\nt1_s\\t2_s");
    for tk in t.iter() {
        let _ = write!(csv, ",{tk:.9e}");
    }
    csv.push('\n');
    for (tj, row) in t.iter().zip(psi.rows()) {
        let _ = write!(csv, "{tj:.9e}");
        for z in row {
            let _ = write!(csv, ",{:.9e}", z.norm());
        }
        csv.push('\n');
    }

    let mut report = Report {
        csv: Some(csv),
        ..Report::default()
    };
    report.push("grid_points", spec.n_points);
    report.push("half_span_s", format!("{:.6e}", spec.half_span_s));
    report.push("schmidt_number", format!("{k:.9}"));
    report.push(
        "analytic_schmidt_number",
        format!(
            "{:.9}",
            temporal::analytic_schmidt_number(spec.sigma_plus, spec.sigma_minus)
        ),
    );
    report.push("factorizable", (k - 1.0).abs() < 1e-9);
    Ok(report)
}

/// Runs a command on an already-loaded configuration.
pub fn run_command(command: &Command, config: &RunConfig) -> Result<Report, CliError> {
    match command {
        Command::MeasureM1(_) => command_measure_m1(config),
        Command::MeasureM2(_) => command_measure_m2(config),
        Command::Ghost(_) => command_ghost(config),
        Command::KlyshkoCheck {
            perturb_backward_mm,
            ..
        } => command_klyshko(config, *perturb_backward_mm),
        Command::Temporal(_) => command_temporal(config),
        Command::ValidateConfig(_) => {
            let mut report = Report::default();
            config.to_bench()?;
            report.push("config", "ok");
            report.csv = None;
            report.summary.extend(
                config
                    .render()
                    .lines()
                    .map(|l| ("canonical".to_string(), l.to_string())),
            );
            Ok(report)
        }
    }
}

/// Full CLI run: load config, execute, write outputs. Returns the exit code.
pub fn main_with(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            eprintln!("{line}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let common = cli.command.common();
    let config = load_config(common.config.as_deref())?;
    let report = run_command(&cli.command, &config)?;
    let out_path = common
        .out
        .clone()
        .or_else(|| config.output.path.as_ref().map(PathBuf::from));

    let summary = report.summary_text();
    match (&report.csv, out_path) {
        (Some(csv), Some(path)) => {
            std::fs::write(&path, csv)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            print!("{summary}");
        }
        (Some(csv), None) => {
            print!("{csv}");
            eprint!("{summary}");
        }
        (None, _) => print!("{summary}"),
    }
    match report.check_failure {
        Some(reason) => Err(CliError::Check(format!("{}: {reason}", cli.command.name()))),
        None => Ok(()),
    }
}
