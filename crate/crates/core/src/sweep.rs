//! Multi-port scan campaigns and the feed-distance study.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::farfield::{fmt_sig, ntff, RadiationPattern};
use crate::fdtd::{build_domain, run_with_options, PhasorField, RunOptions};
use crate::metrics::{analyze, compare_ports, level_at, CampaignSummary, PatternMetrics};
use crate::scene::{validate_scene, AntennaScene};

/// Numerical settings shared by every run of a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EngineSettings {
    /// Cells per free-space wavelength.
    pub resolution: f64,
    pub max_periods: usize,
    /// NTFF contour radius (m); defaults to the enclosing radius plus 2λ0.
    pub contour_radius: Option<f64>,
    pub angular_resolution: f64,
}

impl Default for EngineSettings {
    fn default() -> Self {
        Self {
            resolution: 20.0,
            max_periods: 200,
            contour_radius: None,
            angular_resolution: 0.25,
        }
    }
}

impl EngineSettings {
    pub fn contour_for(&self, scene: &AntennaScene) -> f64 {
        self.contour_radius
            .unwrap_or_else(|| scene.geometry_radius() + 2.0 * scene.lambda0())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PortResult {
    pub port: usize,
    pub metrics: PatternMetrics,
    #[serde(skip)]
    pub pattern: RadiationPattern,
    pub periods: usize,
    /// Relative phasor change over the last period.
    pub convergence: f64,
    /// False when `max_periods` ran out before the steady-state threshold.
    pub converged: bool,
    /// File the pattern was written to, when the caller saved it.
    pub pattern_file: Option<String>,
}

/// Steady-state field of one excited port. A run that does not settle within
/// `max_periods` comes back with `converged == false`; callers report it.
pub fn simulate_port(scene: &AntennaScene, port: usize, settings: &EngineSettings) -> Result<PhasorField> {
    let domain = build_domain(scene, port, settings.resolution)?;
    run_with_options(
        &domain,
        RunOptions {
            max_periods: settings.max_periods,
            ..RunOptions::default()
        },
    )
}

/// Single-port pipeline: domain, steady state, far field, metrics.
pub fn evaluate_port(scene: &AntennaScene, port: usize, settings: &EngineSettings) -> Result<PortResult> {
    let field = simulate_port(scene, port, settings)?;
    let mut pattern = ntff(&field, settings.contour_for(scene), settings.angular_resolution)?;
    pattern.scene_hash = Some(scene.hash());
    let metrics = analyze(&pattern)?;
    Ok(PortResult {
        port,
        metrics,
        pattern,
        periods: field.periods,
        convergence: field.convergence,
        converged: field.converged,
        pattern_file: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub scene_hash: String,
    pub settings: EngineSettings,
    pub per_port: Vec<PortResult>,
    pub campaign: CampaignSummary,
}

/// Runs every port of the scene, concurrently, and aggregates the beams.
/// Results are ordered by port index. The first failing port (in port order)
/// aborts the campaign; the ports that succeeded travel in the error.
pub fn scan_campaign(scene: &AntennaScene, settings: &EngineSettings) -> Result<SweepReport> {
    let violations = validate_scene(scene);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::Config(format!("invalid scene: {}", list.join("; "))));
    }
    let mut ports: Vec<usize> = scene.ports.iter().map(|p| p.index).collect();
    ports.sort_unstable();
    let outcomes: Vec<(usize, Result<PortResult>)> = ports
        .par_iter()
        .map(|&k| (k, evaluate_port(scene, k, settings)))
        .collect();

    let mut per_port = Vec::with_capacity(outcomes.len());
    let mut failure = None;
    for (k, r) in outcomes {
        match r {
            Ok(v) => per_port.push(v),
            Err(e) if failure.is_none() => failure = Some((k, e)),
            Err(_) => {}
        }
    }
    if let Some((port, e)) = failure {
        return Err(Error::PortFailed {
            port,
            source: Box::new(e),
            partial: per_port,
        });
    }
    fill_crossovers(&mut per_port)?;
    let metrics: Vec<PatternMetrics> = per_port.iter().map(|r| r.metrics.clone()).collect();
    let campaign = compare_ports(&metrics, false)?;
    Ok(SweepReport {
        scene_hash: scene.hash(),
        settings: *settings,
        per_port,
        campaign,
    })
}

/// Level at the midpoint toward each neighbouring beam; the deeper of the two
/// is kept.
fn fill_crossovers(per_port: &mut [PortResult]) -> Result<()> {
    let dirs: Vec<f64> = per_port.iter().map(|r| r.metrics.peak_direction).collect();
    for (k, r) in per_port.iter_mut().enumerate() {
        let mut worst: Option<f64> = None;
        for nb in [k.checked_sub(1), Some(k + 1)].into_iter().flatten() {
            if let Some(&d) = dirs.get(nb) {
                let below = -level_at(&r.pattern, 0.5 * (dirs[k] + d))?;
                worst = Some(worst.map_or(below, |w: f64| w.max(below)));
            }
        }
        r.metrics.crossover_db = worst;
    }
    Ok(())
}

impl SweepReport {
    /// One line per port that stopped at `max_periods` before settling.
    pub fn warnings(&self) -> Vec<String> {
        self.per_port
            .iter()
            .filter(|r| !r.converged)
            .map(|r| unsettled_warning(r.port, r.convergence, r.periods))
            .collect()
    }

    /// Aligned text table, one column per port.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let row = |s: &mut String, name: &str, f: &dyn Fn(&PortResult) -> String| {
            let _ = write!(s, "{name:<22}");
            for r in &self.per_port {
                let _ = write!(s, "{:>9}", f(r));
            }
            s.push('\n');
        };
        row(&mut s, "port", &|r| format!("F{}", r.port));
        row(&mut s, "beam width (deg)", &|r| format!("{:.2}", r.metrics.hpbw));
        row(&mut s, "directivity 2D (dB)", &|r| format!("{:.2}", r.metrics.peak_level_db));
        row(&mut s, "beam direction (deg)", &|r| format!("{:.2}", r.metrics.peak_direction));
        row(&mut s, "sidelobe (dB down)", &|r| {
            r.metrics.sll_db.map_or("-".into(), |v| format!("{v:.1}"))
        });
        row(&mut s, "crossover (dB down)", &|r| {
            r.metrics.crossover_db.map_or("-".into(), |v| format!("{v:.1}"))
        });
        let c = &self.campaign;
        let _ = writeln!(s, "scan range      {:.2} deg", c.scan_range_deg);
        let _ = writeln!(s, "gain ripple     {:.2} dB", c.gain_ripple_db);
        let spacing: Vec<String> = c.spacing_list_deg.iter().map(|v| format!("{v:.2}")).collect();
        let _ = writeln!(s, "beam spacings   {} deg", spacing.join(", "));
        let _ = writeln!(s, "beamwidths      {:.2} .. {:.2} deg", c.hpbw_range.0, c.hpbw_range.1);
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# scan campaign, scene_hash = {}", self.scene_hash);
        let _ = writeln!(
            s,
            "# resolution = {} cells/lambda0, angular_resolution = {} deg",
            fmt_sig(self.settings.resolution),
            fmt_sig(self.settings.angular_resolution)
        );
        let _ = writeln!(
            s,
            "# columns: port [-], peak_direction_deg [deg], peak_level_db [dB 2D directivity], hpbw_deg [deg], sll_db [dB below peak], crossover_db [dB below peak], periods [-], convergence [-]"
        );
        let _ = writeln!(s, "port,{},periods,convergence", PatternMetrics::csv_header());
        for r in &self.per_port {
            let _ = writeln!(s, "{},{},{},{}", r.port, r.metrics.csv_row(), r.periods, fmt_sig(r.convergence));
        }
        s
    }
}

pub fn unsettled_warning(port: usize, convergence: f64, periods: usize) -> String {
    format!("warning: port F{port} still changing by {convergence:.2e} per period after {periods} periods")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MaxGain,
    MaxGainMinSll,
}

/// Weight of sidelobe suppression against directivity in `MaxGainMinSll`
/// (dB of score per dB of suppression).
pub const SLL_WEIGHT: f64 = 0.25;
/// Suppression beyond this many dB earns nothing more.
pub const SLL_CAP_DB: f64 = 30.0;

impl Objective {
    pub fn score(self, m: &PatternMetrics) -> f64 {
        match self {
            Objective::MaxGain => m.peak_level_db,
            Objective::MaxGainMinSll => {
                let sll = m.sll_db.unwrap_or(SLL_CAP_DB).min(SLL_CAP_DB);
                m.peak_level_db + SLL_WEIGHT * sll
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FeedSample {
    pub d_over_r0: f64,
    pub metrics: Option<PatternMetrics>,
    pub objective: Option<f64>,
    /// Why the sample was excluded.
    pub flagged: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeedStudy {
    pub port: usize,
    pub objective: Objective,
    pub optimum_d_over_r0: f64,
    pub samples: Vec<FeedSample>,
}

impl FeedStudy {
    pub fn optimum_is_interior(&self) -> bool {
        let first = self.samples.first().map(|s| s.d_over_r0);
        let last = self.samples.last().map(|s| s.d_over_r0);
        Some(self.optimum_d_over_r0) != first && Some(self.optimum_d_over_r0) != last
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:>8} {:>10} {:>10} {:>10} {:>10}", "d/R0", "D2D (dB)", "HPBW", "SLL (dB)", "score");
        for x in &self.samples {
            match (&x.metrics, x.objective) {
                (Some(m), Some(o)) => {
                    let sll = m.sll_db.map_or("-".into(), |v| format!("{v:.2}"));
                    let _ = writeln!(
                        s,
                        "{:>8.3} {:>10.3} {:>10.3} {:>10} {:>10.3}",
                        x.d_over_r0, m.peak_level_db, m.hpbw, sll, o
                    );
                }
                _ => {
                    let why = x.flagged.as_deref().unwrap_or("");
                    let _ = writeln!(s, "{:>8.3} flagged: {why}", x.d_over_r0);
                }
            }
        }
        let _ = writeln!(s, "optimum d/R0 = {:.3}", self.optimum_d_over_r0);
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# feed distance study, port F{}", self.port);
        let _ = writeln!(s, "# columns: d_over_r0 [-], peak_direction_deg [deg], peak_level_db [dB 2D directivity], hpbw_deg [deg], sll_db [dB below peak], crossover_db [dB below peak], objective [dB]");
        let _ = writeln!(s, "d_over_r0,{},objective", PatternMetrics::csv_header());
        for x in &self.samples {
            let m = x.metrics.as_ref().map(|m| m.csv_row()).unwrap_or_else(|| ",,,,".into());
            let o = x.objective.map(fmt_sig).unwrap_or_default();
            let _ = writeln!(s, "{},{m},{o}", fmt_sig(x.d_over_r0));
        }
        s
    }
}

/// Grid `lo, lo + step, …` up to `hi` inclusive (a rounding slack of 1e-9 steps).
pub fn sample_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) {
        return Err(Error::Input(format!("feed distance range [{lo}, {hi}] must satisfy 0 < lo ≤ hi")));
    }
    if lo == hi {
        return Ok(vec![lo]);
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Input(format!("feed distance step must be positive, got {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

/// Moves the central port over `[lo, hi]·R0` from the rim and keeps the
/// distance with the best objective. Ties go to the smaller distance; samples
/// that fail numerically are flagged and skipped.
pub fn feed_distance_optimize(
    scene: &AntennaScene,
    lo: f64,
    hi: f64,
    step: f64,
    objective: Objective,
    settings: &EngineSettings,
) -> Result<FeedStudy> {
    let grid = sample_grid(lo, hi, step)?;
    let port = scene
        .central_port()
        .ok_or_else(|| Error::Input("scene has no ports".into()))?
        .index;
    let base = scene.with_single_port(port)?;
    let r0 = scene.lens.radius;
    let samples: Vec<Result<FeedSample>> = grid
        .par_iter()
        .map(|&d| {
            let s = base.with_edge_distance(d * r0);
            match evaluate_port(&s, port, settings) {
                Ok(r) => {
                    let o = objective.score(&r.metrics);
                    Ok(if o.is_finite() {
                        FeedSample { d_over_r0: d, metrics: Some(r.metrics), objective: Some(o), flagged: None }
                    } else {
                        FeedSample { d_over_r0: d, metrics: Some(r.metrics), objective: None, flagged: Some("non-finite objective".into()) }
                    })
                }
                Err(e) if e.class() == crate::error::ErrorClass::Numerical => Ok(FeedSample {
                    d_over_r0: d,
                    metrics: None,
                    objective: None,
                    flagged: Some(e.to_string()),
                }),
                Err(e) => Err(e),
            }
        })
        .collect();
    let samples: Vec<FeedSample> = samples.into_iter().collect::<Result<_>>()?;
    let mut best: Option<(f64, f64)> = None;
    for s in &samples {
        if let Some(o) = s.objective {
            if best.is_none_or(|(_, b)| o > b) {
                best = Some((s.d_over_r0, o));
            }
        }
    }
    let (optimum, _) = best.ok_or_else(|| Error::Convergence("every feed distance sample was flagged".into()))?;
    Ok(FeedStudy {
        port,
        objective,
        optimum_d_over_r0: optimum,
        samples,
    })
}
