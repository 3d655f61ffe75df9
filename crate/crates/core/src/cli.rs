//! Command-line front end: argument parsing, dispatch and output files.
//!
//! Exit status: 0 success, 1 a `validate` check failed, 2 usage, 3
//! configuration, 4 numerical, 5 I/O.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use crate::design::DesignReport;
use crate::error::{Error, Result};
use crate::farfield::{ntff, samples_for_step, RadiationPattern};
use crate::fdtd::dump::{read_field, write_field};
use crate::metrics::analyze;
use crate::plot::polar_svg;
use crate::scene::{default_paper_scene, AntennaScene, ModeModel};
use crate::sweep::{feed_distance_optimize, scan_campaign, simulate_port, unsettled_warning, EngineSettings, Objective};
use crate::validate::{absorber_check, analytic_self_checks, cross_engine, media};

/// Exit status when `validate` ran but a check failed.
pub const EXIT_CHECK_FAILED: i32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Svg,
    FieldDump,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    MaxGain,
    MaxGainMinSll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Tem,
    Te1,
}

/// Engine overrides shared by the simulating commands.
#[derive(Debug, Clone, Copy, Default, PartialEq, Args)]
pub struct Overrides {
    /// Grid density in cells per free-space wavelength
    #[arg(long)]
    pub resolution: Option<f64>,
    /// Upper bound on simulated periods
    #[arg(long)]
    pub max_periods: Option<usize>,
    /// Near-to-far-field contour radius in meters
    #[arg(long)]
    pub contour_radius: Option<f64>,
    /// Far-field angular step in degrees (must divide 360)
    #[arg(long)]
    pub angular_resolution: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct Output {
    /// Output directory for data files
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output formats, comma separated
    #[arg(long, value_enum, value_delimiter = ',')]
    pub format: Vec<Format>,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Size the lens for a target E-plane beamwidth
    Design {
        /// Operating frequency in hertz
        #[arg(long)]
        freq: f64,
        /// Target half-power beamwidth in degrees
        #[arg(long)]
        hpbw: f64,
        /// Plate spacing in wavelengths
        #[arg(long, default_value_t = 0.54)]
        h_lambda: f64,
        /// Lens relative permittivity
        #[arg(long, default_value_t = 2.1)]
        eps_r: f64,
        /// Vertical field model of the plate region
        #[arg(long, value_enum, default_value_t = ModeArg::Tem)]
        mode: ModeArg,
        #[command(flatten)]
        output: Output,
    },
    /// Run one port to steady state and report its beam
    Simulate {
        /// Scene file (TOML)
        #[arg(long)]
        scene: PathBuf,
        /// Port to excite (default: the one nearest boresight)
        #[arg(long)]
        port: Option<usize>,
        #[command(flatten)]
        overrides: Overrides,
        #[command(flatten)]
        output: Output,
    },
    /// Far-field pattern of a saved field dump
    Farfield {
        /// Field dump written by `simulate --format field-dump`
        #[arg(long)]
        field: PathBuf,
        /// Scene the dump came from (sets enclosed radius, medium and default contour)
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Background permittivity when no scene is given
        #[arg(long, default_value_t = 1.0)]
        background_eps: f64,
        #[command(flatten)]
        overrides: Overrides,
        #[command(flatten)]
        output: Output,
    },
    /// Beam metrics of a pattern CSV
    Metrics {
        /// Pattern CSV written by simulate, sweep or farfield
        #[arg(long)]
        pattern: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Excite every port in turn (scan campaign) or study the feed distance
    Sweep {
        /// Scene file (TOML)
        #[arg(long)]
        scene: PathBuf,
        /// Run the feed-distance study on the central port instead
        #[arg(long)]
        feed_study: bool,
        /// Smallest feed distance from the rim, in lens radii
        #[arg(long, default_value_t = 0.2)]
        d_min: f64,
        /// Largest feed distance from the rim, in lens radii
        #[arg(long, default_value_t = 0.6)]
        d_max: f64,
        /// Step between sampled feed distances, in lens radii
        #[arg(long, default_value_t = 0.04)]
        d_step: f64,
        /// Score used to rank feed distances
        #[arg(long, value_enum, default_value_t = ObjectiveArg::MaxGain)]
        objective: ObjectiveArg,
        #[command(flatten)]
        overrides: Overrides,
        #[command(flatten)]
        output: Output,
    },
    /// Analytic self-checks and the FDTD-against-analytic comparison
    Validate {
        /// Scene file (default: the built-in 28 GHz scene)
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Skip the full-wave run
        #[arg(long)]
        analytic_only: bool,
        #[command(flatten)]
        overrides: Overrides,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(name = "lensbeam", version, about = "Cylindrical lens beam-steering antenna toolkit")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

impl RunConfig {
    pub fn output(&self) -> &Output {
        match &self.command {
            Command::Design { output, .. }
            | Command::Simulate { output, .. }
            | Command::Farfield { output, .. }
            | Command::Metrics { output, .. }
            | Command::Sweep { output, .. }
            | Command::Validate { output, .. } => output,
        }
    }

    pub fn scene_path(&self) -> Option<&Path> {
        match &self.command {
            Command::Simulate { scene, .. } | Command::Sweep { scene, .. } => Some(scene),
            Command::Farfield { scene, .. } | Command::Validate { scene, .. } => scene.as_deref(),
            _ => None,
        }
    }
}

/// Parses `argv` (program name first). Help and version requests come back as
/// `Err(Usage)` carrying the rendered text; [`main_with_args`] prints them.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = RunConfig::try_parse_from(argv).map_err(|e| Error::Usage(e.to_string()))?;
    check_config(&cfg)?;
    Ok(cfg)
}

fn check_config(cfg: &RunConfig) -> Result<()> {
    let overrides = match &cfg.command {
        Command::Simulate { overrides, .. }
        | Command::Farfield { overrides, .. }
        | Command::Sweep { overrides, .. }
        | Command::Validate { overrides, .. } => Some(overrides),
        _ => None,
    };
    if let Some(o) = overrides {
        if let Some(r) = o.resolution {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Usage(format!("--resolution must be positive, got {r}")));
            }
        }
        if o.max_periods == Some(0) {
            return Err(Error::Usage("--max-periods must be at least 1".into()));
        }
        if let Some(c) = o.contour_radius {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Usage(format!("--contour-radius must be positive, got {c}")));
            }
        }
        if let Some(a) = o.angular_resolution {
            samples_for_step(a).map_err(|e| Error::Usage(format!("--angular-resolution: {e}")))?;
        }
    }
    let out = cfg.output();
    let files = out.format.iter().any(|f| *f != Format::Text);
    if files && out.out.is_none() {
        return Err(Error::Usage("--format with file outputs needs --out <dir>".into()));
    }
    if out.format.contains(&Format::FieldDump) && !matches!(cfg.command, Command::Simulate { .. }) {
        return Err(Error::Usage("--format field-dump is only produced by simulate".into()));
    }
    Ok(())
}

/// Full entry point used by the binary: parse, run, map errors to exit codes.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match RunConfig::try_parse_from(argv) {
        Ok(cfg) => {
            if let Err(e) = check_config(&cfg) {
                eprintln!("{e}");
                return e.class().exit_code();
            }
            run(&cfg)
        }
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => Error::Usage(String::new()).class().exit_code(),
            }
        }
    }
}

/// Executes a parsed configuration and returns the process exit status.
pub fn run(cfg: &RunConfig) -> i32 {
    match dispatch(cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::PortFailed { partial, .. } = &e {
                if !partial.is_empty() {
                    let done: Vec<String> = partial.iter().map(|r| format!("F{}", r.port)).collect();
                    eprintln!("completed before the failure: {}", done.join(", "));
                }
            }
            e.class().exit_code()
        }
    }
}

fn settings_from(o: &Overrides, default_resolution: f64) -> EngineSettings {
    let d = EngineSettings::default();
    EngineSettings {
        resolution: o.resolution.unwrap_or(default_resolution),
        max_periods: o.max_periods.unwrap_or(d.max_periods),
        contour_radius: o.contour_radius,
        angular_resolution: o.angular_resolution.unwrap_or(d.angular_resolution),
    }
}

/// Fingerprint of everything that determines a run's numbers.
pub fn config_hash(scene: Option<&AntennaScene>, settings: Option<&EngineSettings>, extra: &str) -> String {
    let mut h = Sha256::new();
    if let Some(s) = scene {
        h.update(s.to_toml().unwrap_or_default().as_bytes());
    }
    if let Some(s) = settings {
        h.update(serde_json::to_string(s).unwrap_or_default().as_bytes());
    }
    h.update(extra.as_bytes());
    hex::encode(&h.finalize()[..8])
}

fn wants(out: &Output, f: Format) -> bool {
    out.format.contains(&f)
}

fn out_dir(out: &Output) -> Result<Option<&Path>> {
    match &out.out {
        Some(d) => {
            fs::create_dir_all(d)?;
            Ok(Some(d.as_path()))
        }
        None => Ok(None),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Input(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn dispatch(cfg: &RunConfig) -> Result<i32> {
    let output = cfg.output();
    match &cfg.command {
        Command::Design { freq, hpbw, h_lambda, eps_r, mode, .. } => {
            let mode = match mode {
                ModeArg::Tem => ModeModel::Tem,
                ModeArg::Te1 => ModeModel::Te1,
            };
            let h = h_lambda * crate::units::wavelength(*freq);
            let report = DesignReport::new(*freq, *hpbw, h, *eps_r, mode)?;
            println!("{report}");
            if let Some(dir) = out_dir(output)? {
                if wants(output, Format::Json) {
                    write_json(&dir.join("design.json"), &report)?;
                }
                if wants(output, Format::Text) {
                    fs::write(dir.join("design.txt"), format!("{report}\n"))?;
                }
            }
            Ok(0)
        }
        Command::Simulate { scene, port, overrides, .. } => {
            let scene = AntennaScene::load(scene)?;
            let settings = settings_from(overrides, EngineSettings::default().resolution);
            let port = match port {
                Some(p) => *p,
                None => scene.central_port().ok_or_else(|| Error::Input("scene has no ports".into()))?.index,
            };
            let field = simulate_port(&scene, port, &settings)?;
            if !field.converged {
                eprintln!("{}", unsettled_warning(port, field.convergence, field.periods));
            }
            let mut pattern = ntff(&field, settings.contour_for(&scene), settings.angular_resolution)?;
            pattern.scene_hash = Some(scene.hash());
            let metrics = analyze(&pattern)?;
            let hash = config_hash(Some(&scene), Some(&settings), &format!("simulate F{port}"));
            println!("port = F{port}");
            println!("periods = {}", field.periods);
            println!("convergence = {:.3e}", field.convergence);
            print!("{}", metrics.to_kv());
            if let Some(dir) = out_dir(output)? {
                let stem = format!("F{port}");
                let prov = provenance(&scene, &settings, &hash);
                if wants(output, Format::Csv) {
                    pattern.write_csv(&dir.join(format!("pattern_{stem}.csv")), &prov)?;
                }
                if wants(output, Format::Svg) {
                    fs::write(dir.join(format!("pattern_{stem}.svg")), polar_svg(&[(stem.clone(), &pattern)], &stem))?;
                }
                if wants(output, Format::FieldDump) {
                    let f = fs::File::create(dir.join(format!("field_{stem}.bin")))?;
                    write_field(&field, std::io::BufWriter::new(f))?;
                }
                if wants(output, Format::Json) {
                    write_json(&dir.join(format!("metrics_{stem}.json")), &metrics)?;
                }
                if wants(output, Format::Text) {
                    fs::write(dir.join(format!("metrics_{stem}.txt")), metrics.to_kv())?;
                }
            }
            Ok(0)
        }
        Command::Farfield { field, scene, background_eps, overrides, .. } => {
            let scene = scene.as_ref().map(|p| AntennaScene::load(p)).transpose()?;
            let (enclosed, eps) = match &scene {
                Some(s) => (s.geometry_radius(), media(s)?.1),
                None => (0.0, *background_eps),
            };
            let f = fs::File::open(field)?;
            let mut phasor = read_field(std::io::BufReader::new(f), enclosed)?;
            phasor.background_eps = eps;
            let settings = settings_from(overrides, EngineSettings::default().resolution);
            let contour = match (&scene, settings.contour_radius) {
                (_, Some(c)) => c,
                (Some(s), None) => settings.contour_for(s),
                (None, None) => {
                    return Err(Error::Usage("farfield without --scene needs --contour-radius".into()))
                }
            };
            let mut pattern = ntff(&phasor, contour, settings.angular_resolution)?;
            pattern.scene_hash = scene.as_ref().map(|s| s.hash());
            let metrics = analyze(&pattern);
            match &metrics {
                Ok(m) => print!("{}", m.to_kv()),
                Err(e) => println!("metrics unavailable: {e}"),
            }
            if let Some(dir) = out_dir(output)? {
                let hash = config_hash(scene.as_ref(), Some(&settings), "farfield");
                let prov = vec![("config_hash", hash), ("contour_radius_m", crate::farfield::fmt_sig(contour))];
                if wants(output, Format::Csv) {
                    pattern.write_csv(&dir.join("pattern.csv"), &prov)?;
                }
                if wants(output, Format::Svg) {
                    fs::write(dir.join("pattern.svg"), polar_svg(&[("pattern".into(), &pattern)], "far field"))?;
                }
            }
            Ok(0)
        }
        Command::Metrics { pattern, .. } => {
            let text = fs::read_to_string(pattern)?;
            let p = RadiationPattern::from_csv(&text)?;
            let m = analyze(&p)?;
            print!("{}", m.to_kv());
            if let Some(dir) = out_dir(output)? {
                if wants(output, Format::Csv) {
                    let body = format!(
                        "# columns: peak_direction_deg [deg], peak_level_db [dB 2D directivity], hpbw_deg [deg], sll_db [dB below peak], crossover_db [dB below peak]\n{}\n{}\n",
                        crate::metrics::PatternMetrics::csv_header(),
                        m.csv_row()
                    );
                    fs::write(dir.join("metrics.csv"), body)?;
                }
                if wants(output, Format::Json) {
                    write_json(&dir.join("metrics.json"), &m)?;
                }
            }
            Ok(0)
        }
        Command::Sweep { scene, feed_study, d_min, d_max, d_step, objective, overrides, .. } => {
            let scene = AntennaScene::load(scene)?;
            let settings = settings_from(overrides, EngineSettings::default().resolution);
            if *feed_study {
                let objective = match objective {
                    ObjectiveArg::MaxGain => Objective::MaxGain,
                    ObjectiveArg::MaxGainMinSll => Objective::MaxGainMinSll,
                };
                let study = feed_distance_optimize(&scene, *d_min, *d_max, *d_step, objective, &settings)?;
                print!("{}", study.to_table());
                println!(
                    "optimum {} the sampled range",
                    if study.optimum_is_interior() { "lies inside" } else { "is at an end of" }
                );
                if let Some(dir) = out_dir(output)? {
                    fs::write(dir.join("feed_study.txt"), study.to_table())?;
                    let hash = config_hash(Some(&scene), Some(&settings), "feed study");
                    fs::write(dir.join("feed_study.csv"), format!("# config_hash = {hash}\n{}", study.to_csv()))?;
                    if wants(output, Format::Json) {
                        write_json(&dir.join("feed_study.json"), &study)?;
                    }
                }
                return Ok(0);
            }
            let mut report = scan_campaign(&scene, &settings)?;
            print!("{}", report.to_table());
            for w in report.warnings() {
                eprintln!("{w}");
            }
            if let Some(dir) = out_dir(output)? {
                let hash = config_hash(Some(&scene), Some(&settings), "sweep");
                let prov = provenance(&scene, &settings, &hash);
                for r in &mut report.per_port {
                    let name = format!("pattern_F{}.csv", r.port);
                    r.pattern.write_csv(&dir.join(&name), &prov)?;
                    r.pattern_file = Some(name);
                }
                fs::write(dir.join("summary.txt"), report.to_table())?;
                fs::write(dir.join("summary.csv"), format!("# config_hash = {hash}\n{}", report.to_csv()))?;
                if wants(output, Format::Svg) {
                    let list: Vec<(String, &RadiationPattern)> =
                        report.per_port.iter().map(|r| (format!("F{}", r.port), &r.pattern)).collect();
                    fs::write(dir.join("beams.svg"), polar_svg(&list, "scan campaign"))?;
                }
                if wants(output, Format::Json) {
                    write_json(&dir.join("report.json"), &report)?;
                }
            }
            Ok(0)
        }
        Command::Validate { scene, analytic_only, overrides, .. } => {
            let scene = match scene {
                Some(p) => AntennaScene::load(p)?,
                None => default_paper_scene(),
            };
            let mut checks = analytic_self_checks(&scene)?;
            if !analytic_only {
                let settings = settings_from(overrides, 40.0);
                let x = cross_engine(&scene, &settings)?;
                if !x.converged {
                    eprintln!("warning: point-source run still changing by {:.2e} per period after {} periods", x.convergence, x.periods);
                }
                println!(
                    "FDTD: direction {:.3} deg, HPBW {:.3} deg; analytic: direction {:.3} deg, HPBW {:.3} deg",
                    x.fdtd_metrics.peak_direction, x.fdtd_metrics.hpbw, x.analytic_metrics.peak_direction, x.analytic_metrics.hpbw
                );
                checks.extend(x.checks());
                checks.push(absorber_check(&scene, settings.resolution)?);
            }
            let lines: Vec<String> = checks.iter().map(|c| c.line()).collect();
            for l in &lines {
                println!("{l}");
            }
            if let Some(dir) = out_dir(output)? {
                fs::write(dir.join("validate.txt"), lines.join("\n") + "\n")?;
                if wants(output, Format::Json) {
                    write_json(&dir.join("validate.json"), &checks)?;
                }
            }
            Ok(if checks.iter().all(|c| c.pass) { 0 } else { EXIT_CHECK_FAILED })
        }
    }
}

fn provenance(scene: &AntennaScene, s: &EngineSettings, hash: &str) -> Vec<(&'static str, String)> {
    use crate::farfield::fmt_sig;
    vec![
        ("config_hash", hash.to_string()),
        ("resolution_cells_per_lambda0", fmt_sig(s.resolution)),
        ("contour_radius_m", fmt_sig(s.contour_for(scene))),
    ]
}
