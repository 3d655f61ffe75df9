//! Self-checks of the analytic solution and the FDTD-against-analytic
//! comparison behind the `validate` command.

use serde::Serialize;

use crate::analytic::bessel::{bessel_jy, derivatives};
use crate::analytic::{farfield_from_solution, solve_line_source, solve_plane_wave, PolarPoint};
use crate::design::effective_permittivity;
use crate::error::{Error, Result};
use crate::farfield::{ntff, RadiationPattern};
use crate::fdtd::{build_with_source, run_to_steady_state, run_with_options, PmlParams, RunOptions, SimulationDomain, SourceShape};
use crate::metrics::{analyze, PatternMetrics};
use crate::scene::{AntennaScene, Point2};
use crate::sweep::EngineSettings;

pub const WRONSKIAN_TOL: f64 = 1e-10;
pub const OPTICAL_THEOREM_TOL: f64 = 1e-8;
pub const CONTINUITY_TOL: f64 = 1e-8;
pub const DIRECTION_TOL_DEG: f64 = 0.5;
pub const HPBW_REL_TOL: f64 = 0.05;
pub const POWER_TOL_DB: f64 = 1.0;
/// Depth of the main lobe compared pointwise.
pub const POWER_WINDOW_DB: f64 = -10.0;
pub const ABSORBER_TOL_DB: f64 = -50.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub limit: f64,
}

impl Check {
    fn below(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            pass: value.is_finite() && value < limit,
            value,
            limit,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {}: {:.3e} (limit {:.1e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.limit
        )
    }
}

/// Largest relative Wronskian error `|J_n Y_n' − J_n' Y_n − 2/(πx)| / (2/(πx))`
/// over orders `0 ..= 60` at a spread of arguments.
pub fn wronskian_error() -> f64 {
    let mut worst: f64 = 0.0;
    for &x in &[0.3, 1.0, 4.5, 12.0, 28.9, 44.6, 60.0] {
        let (j, y) = bessel_jy(61, x);
        let dj = derivatives(&j, x);
        let dy = derivatives(&y, x);
        let want = 2.0 / (std::f64::consts::PI * x);
        for n in 0..=60 {
            let w = j[n] * dy[n] - dj[n] * y[n];
            if w.is_finite() {
                worst = worst.max((w - want).abs() / want);
            }
        }
    }
    worst
}

/// `|C_ext − C_sca| / C_sca` for the scene's lens made lossless.
pub fn optical_theorem_error(scene: &AntennaScene) -> Result<f64> {
    let mut lens = scene.lens.clone();
    lens.tan_delta = 0.0;
    let (eps_in, eps_out) = media(scene)?;
    let s = solve_plane_wave(&lens, eps_out, eps_in, scene.f0)?;
    Ok((s.extinction_width() - s.scattering_width()).abs() / s.scattering_width())
}

/// Largest field jump across the rim over 64 azimuths, relative to the
/// largest rim field, for a line source at the central port.
pub fn rim_continuity_error(scene: &AntennaScene) -> Result<f64> {
    let (eps_in, eps_out) = media(scene)?;
    let sol = solve_line_source(&scene.lens, eps_out, eps_in, scene.f0, central_source(scene)?)?;
    let a = scene.lens.radius;
    let mut jump: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for k in 0..64 {
        let phi = k as f64 * 360.0 / 64.0;
        let inner = sol.interior_field(a, phi);
        let outer = sol.exterior_field(a, phi);
        jump = jump.max((inner - outer).norm());
        peak = peak.max(outer.norm());
    }
    Ok(jump / peak)
}

pub fn analytic_self_checks(scene: &AntennaScene) -> Result<Vec<Check>> {
    Ok(vec![
        Check::below("Bessel Wronskian identity", wronskian_error(), WRONSKIAN_TOL),
        Check::below("optical theorem (lossless lens)", optical_theorem_error(scene)?, OPTICAL_THEOREM_TOL),
        Check::below("field continuity across the rim", rim_continuity_error(scene)?, CONTINUITY_TOL),
    ])
}

/// Worst pointwise difference (dB relative to the largest reference field)
/// between a point source in an empty square domain of half-width
/// `half_extent` and the same source in a domain twice as wide, over the
/// smaller domain's interior outside one wavelength from the source.
pub fn absorber_error_db(f0: f64, resolution: f64, half_extent: f64) -> Result<f64> {
    let build = |h: f64| {
        SimulationDomain::free_space(
            f0,
            1.0,
            h,
            resolution,
            SourceShape::Point { position: Point2::ORIGIN },
            PmlParams::default(),
        )
    };
    let small = run_to_steady_state(&build(half_extent)?, 400)?;
    let large = run_to_steady_state(&build(2.0 * half_extent)?, 400)?;
    let off = (large.nx - small.nx) / 2;
    let l = crate::units::wavelength(f0);
    let (mut diff, mut peak): (f64, f64) = (0.0, 0.0);
    let b = small.interior;
    for i in b.i0..b.i1 {
        for j in b.j0..b.j1 {
            let p = small.node_position(i, j);
            if p.x.hypot(p.y) < l {
                continue;
            }
            let r = large.at(i + off, j + off);
            diff = diff.max((small.at(i, j) - r).norm());
            peak = peak.max(r.norm());
        }
    }
    Ok(20.0 * (diff / peak).log10())
}

pub fn absorber_check(scene: &AntennaScene, resolution: f64) -> Result<Check> {
    let v = absorber_error_db(scene.f0, resolution, scene.domain_padding)?;
    Ok(Check {
        name: "absorber vs doubled domain (dB)".into(),
        pass: v.is_finite() && v < ABSORBER_TOL_DB,
        value: v,
        limit: ABSORBER_TOL_DB,
    })
}

/// `(ε_eff inside, ε_eff outside)` of the scene's plate model.
pub fn media(scene: &AntennaScene) -> Result<(f64, f64)> {
    let inside = effective_permittivity(scene.lens.eps_r, scene.plate_spacing, scene.f0, scene.mode_model)?;
    let outside = effective_permittivity(1.0, scene.plate_spacing, scene.f0, scene.mode_model)?;
    Ok((inside, outside))
}

fn central_source(scene: &AntennaScene) -> Result<PolarPoint> {
    let port = scene
        .central_port()
        .ok_or_else(|| Error::Input("scene has no ports".into()))?;
    Ok(PolarPoint::from_cartesian(port.position(&scene.lens), scene.lens.center))
}

/// FDTD and analytic patterns of a line source at the central port's
/// aperture center, moved onto the nearest grid node so both engines see the
/// same source.
#[derive(Debug, Clone)]
pub struct CrossEngine {
    pub source: Point2,
    pub fdtd: RadiationPattern,
    pub analytic: RadiationPattern,
    pub fdtd_metrics: PatternMetrics,
    pub analytic_metrics: PatternMetrics,
    pub periods: usize,
    pub convergence: f64,
    pub converged: bool,
}

impl CrossEngine {
    pub fn direction_error(&self) -> f64 {
        crate::units::wrap_deg(self.fdtd_metrics.peak_direction - self.analytic_metrics.peak_direction).abs()
    }

    pub fn hpbw_relative_error(&self) -> f64 {
        (self.fdtd_metrics.hpbw - self.analytic_metrics.hpbw).abs() / self.analytic_metrics.hpbw
    }

    /// Largest power difference (dB) over the contiguous main lobe of the
    /// analytic pattern down to `POWER_WINDOW_DB`.
    pub fn main_lobe_power_error(&self) -> f64 {
        let a = self.analytic.power_db();
        let f = self.fdtd.power_db();
        let n = a.len();
        let peak = a
            .iter()
            .enumerate()
            .fold(0, |b, (i, v)| if *v > a[b] { i } else { b });
        let mut worst: f64 = (a[peak] - f[peak]).abs();
        for dir in [1isize, -1] {
            for s in 1..n as isize / 2 {
                let i = (peak as isize + dir * s).rem_euclid(n as isize) as usize;
                if a[i] < POWER_WINDOW_DB {
                    break;
                }
                worst = worst.max((a[i] - f[i]).abs());
            }
        }
        worst
    }

    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::below("beam direction, FDTD vs analytic (deg)", self.direction_error(), DIRECTION_TOL_DEG),
            Check::below("beamwidth, FDTD vs analytic (relative)", self.hpbw_relative_error(), HPBW_REL_TOL),
            Check::below("main-lobe power, FDTD vs analytic (dB)", self.main_lobe_power_error(), POWER_TOL_DB),
        ]
    }
}

pub fn cross_engine(scene: &AntennaScene, settings: &EngineSettings) -> Result<CrossEngine> {
    let port = scene
        .central_port()
        .ok_or_else(|| Error::Input("scene has no ports".into()))?;
    let wanted = port.position(&scene.lens);
    let probe = build_with_source(
        scene,
        SourceShape::Point { position: wanted },
        settings.resolution,
        PmlParams::default(),
    )?;
    let (i, j) = probe.nearest_node(wanted);
    let source = probe.node_position(i, j);
    let domain = build_with_source(scene, SourceShape::Point { position: source }, settings.resolution, PmlParams::default())?;
    let field = run_with_options(
        &domain,
        RunOptions {
            max_periods: settings.max_periods,
            ..RunOptions::default()
        },
    )?;
    let fdtd = ntff(&field, settings.contour_for(scene), settings.angular_resolution)?;

    let (eps_in, eps_out) = media(scene)?;
    let sol = solve_line_source(
        &scene.lens,
        eps_out,
        eps_in,
        scene.f0,
        PolarPoint::from_cartesian(source, scene.lens.center),
    )?;
    let analytic = farfield_from_solution(&sol, settings.angular_resolution)?;
    Ok(CrossEngine {
        source,
        fdtd_metrics: analyze(&fdtd)?,
        analytic_metrics: analyze(&analytic)?,
        fdtd,
        analytic,
        periods: field.periods,
        convergence: field.convergence,
        converged: field.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::default_paper_scene;

    #[test]
    fn analytic_checks_pass_on_default_scene() {
        for c in analytic_self_checks(&default_paper_scene()).unwrap() {
            assert!(c.pass, "{}", c.line());
        }
    }
}
