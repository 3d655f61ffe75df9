use num_complex::Complex64;

use super::cpml::AxisProfile;
use super::{PhasorField, SimulationDomain};
use crate::error::{Error, Result};
use crate::units::{C0, EPS0, MU0};

/// Time-stepping controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub max_periods: usize,
    /// Relative phasor change per period that counts as steady state.
    pub tolerance: f64,
    /// Length of the raised-cosine turn-on, in periods.
    pub ramp_periods: f64,
    /// Courant factor applied to the 2D stability limit.
    pub courant: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            max_periods: 200,
            tolerance: 1e-4,
            ramp_periods: 5.0,
            courant: 0.99,
        }
    }
}

const BLOWUP: f64 = 1e6;

/// Drives the domain with a ramped sinusoid until the single-period phasor
/// settles. A run that hits `max_periods` is returned with `converged = false`.
pub fn run_to_steady_state(domain: &SimulationDomain, max_periods: usize) -> Result<PhasorField> {
    run_with_options(
        domain,
        RunOptions {
            max_periods,
            ..RunOptions::default()
        },
    )
}

struct Fields {
    ez: Vec<f64>,
    hx: Vec<f64>,
    hy: Vec<f64>,
    psi_hx: Vec<f64>,
    psi_hy: Vec<f64>,
    psi_ezx: Vec<f64>,
    psi_ezy: Vec<f64>,
}

pub fn run_with_options(domain: &SimulationDomain, opts: RunOptions) -> Result<PhasorField> {
    let (nx, ny) = (domain.nx, domain.ny);
    let n = nx * ny;
    let dx = domain.dx;
    let period = 1.0 / domain.f0;
    let omega = 2.0 * std::f64::consts::PI * domain.f0;

    let eps_min = domain.eps.iter().cloned().fold(f64::INFINITY, f64::min);
    let dt_max = opts.courant * dx * eps_min.sqrt() / (C0 * std::f64::consts::SQRT_2);
    let steps = (period / dt_max).ceil() as usize;
    let dt = period / steps as f64;

    let px = AxisProfile::new(nx, dx, dt, omega, domain.background_eps, &domain.pml);
    let py = AxisProfile::new(ny, dx, dt, omega, domain.background_eps, &domain.pml);
    let npml = domain.pml.cells;

    let ch = dt / (MU0 * dx);
    let mut ca = vec![0.0; n];
    let mut cb = vec![0.0; n];
    for k in 0..n {
        let e = EPS0 * domain.eps[k];
        let loss = domain.sigma[k] * dt / (2.0 * e);
        ca[k] = (1.0 - loss) / (1.0 + loss);
        cb[k] = dt / e / (1.0 + loss) / dx;
    }

    let mut f = Fields {
        ez: vec![0.0; n],
        hx: vec![0.0; n],
        hy: vec![0.0; n],
        psi_hx: vec![0.0; n],
        psi_hy: vec![0.0; n],
        psi_ezx: vec![0.0; n],
        psi_ezy: vec![0.0; n],
    };
    let mut acc_re = vec![0.0; n];
    let mut acc_im = vec![0.0; n];
    let mut prev: Option<Vec<Complex64>> = None;
    let interior = domain.interior();
    let ramp = opts.ramp_periods * period;
    let drive = |t: f64| -> f64 {
        let r = if t < ramp {
            0.5 * (1.0 - (std::f64::consts::PI * t / ramp).cos())
        } else {
            1.0
        };
        r * (omega * t).sin()
    };
    let norm = 2.0 / steps as f64;

    let mut step_count = 0usize;
    let mut last_change = f64::INFINITY;
    for p in 0..opts.max_periods {
        acc_re.iter_mut().for_each(|v| *v = 0.0);
        acc_im.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..steps {
            update_h(&mut f, nx, ny, npml, ch, dx, &px, &py);
            update_e(&mut f, nx, ny, npml, &ca, &cb, dx, &px, &py);
            let s = drive((step_count as f64 + 0.5) * dt);
            for c in &domain.source {
                f.ez[c.index] += c.weight * s;
            }
            step_count += 1;
            let (sin, cos) = (omega * step_count as f64 * dt).sin_cos();
            for ((e, re), im) in f.ez.iter().zip(acc_re.iter_mut()).zip(acc_im.iter_mut()) {
                *re += e * cos;
                *im -= e * sin;
            }
        }

        let peak = f.ez.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !peak.is_finite() || peak > BLOWUP {
            return Err(Error::Stability(format!(
                "|Ez| reached {peak:e} after {} periods (drive amplitude 1)",
                p + 1
            )));
        }

        let phasor: Vec<Complex64> = acc_re
            .iter()
            .zip(&acc_im)
            .map(|(&r, &i)| Complex64::new(r * norm, i * norm))
            .collect();
        if let Some(old) = &prev {
            let mut diff = 0.0;
            let mut total = 0.0;
            for i in interior.i0..interior.i1 {
                for j in interior.j0..interior.j1 {
                    let k = i * ny + j;
                    diff += (phasor[k] - old[k]).norm_sqr();
                    total += phasor[k].norm_sqr();
                }
            }
            last_change = if total > 0.0 { (diff / total).sqrt() } else { f64::INFINITY };
            let warmed_up = (p + 1) as f64 > opts.ramp_periods;
            if warmed_up && last_change < opts.tolerance {
                return Ok(finish(domain, phasor, p + 1, last_change, true));
            }
        }
        prev = Some(phasor);
    }
    let phasor = prev.unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); n]);
    Ok(finish(domain, phasor, opts.max_periods, last_change, false))
}

fn finish(domain: &SimulationDomain, values: Vec<Complex64>, periods: usize, change: f64, converged: bool) -> PhasorField {
    PhasorField {
        values,
        nx: domain.nx,
        ny: domain.ny,
        dx: domain.dx,
        origin: domain.origin,
        center: domain.center,
        f0: domain.f0,
        background_eps: domain.background_eps,
        interior: domain.interior(),
        enclosed_radius: domain.enclosed_radius,
        periods,
        convergence: change,
        converged,
    }
}

#[allow(clippy::too_many_arguments)]
fn update_h(f: &mut Fields, nx: usize, ny: usize, npml: usize, ch: f64, dx: f64, px: &AxisProfile, py: &AxisProfile) {
    let inv_dx = 1.0 / dx;
    // Hx -= ch * dEz/dy, PML stretch along y (depends on j)
    for i in 0..nx {
        let row = i * ny;
        let ez = &f.ez[row..row + ny];
        let hx = &mut f.hx[row..row + ny];
        let psi = &mut f.psi_hx[row..row + ny];
        let lo = npml.min(ny - 1);
        let hi = (ny - 1 - npml).max(lo);
        for j in lo..hi {
            hx[j] -= ch * (ez[j + 1] - ez[j]);
        }
        for j in (0..lo).chain(hi..ny - 1) {
            let d = ez[j + 1] - ez[j];
            psi[j] = py.b_h[j] * psi[j] + py.c_h[j] * d * inv_dx;
            hx[j] -= ch * (py.kinv_h[j] * d + psi[j] * dx);
        }
    }
    // Hy += ch * dEz/dx, PML stretch along x (depends on i)
    for i in 0..nx - 1 {
        let row = i * ny;
        let (ez_a, ez_b) = f.ez.split_at(row + ny);
        let ez0 = &ez_a[row..];
        let ez1 = &ez_b[..ny];
        let hy = &mut f.hy[row..row + ny];
        if i >= npml && i < nx - 1 - npml {
            for j in 0..ny {
                hy[j] += ch * (ez1[j] - ez0[j]);
            }
        } else {
            let psi = &mut f.psi_hy[row..row + ny];
            let (b, c, k) = (px.b_h[i], px.c_h[i], px.kinv_h[i]);
            for j in 0..ny {
                let d = ez1[j] - ez0[j];
                psi[j] = b * psi[j] + c * d * inv_dx;
                hy[j] += ch * (k * d + psi[j] * dx);
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn update_e(
    f: &mut Fields,
    nx: usize,
    ny: usize,
    npml: usize,
    ca: &[f64],
    cb: &[f64],
    dx: f64,
    px: &AxisProfile,
    py: &AxisProfile,
) {
    let inv_dx = 1.0 / dx;
    let lo = npml.max(1);
    let hi = (ny - npml).max(lo);
    for i in 1..nx - 1 {
        let row = i * ny;
        let hy0 = &f.hy[row - ny..row];
        let hy1 = &f.hy[row..row + ny];
        let hx = &f.hx[row..row + ny];
        let ez = &mut f.ez[row..row + ny];
        let ca = &ca[row..row + ny];
        let cb = &cb[row..row + ny];
        let x_pml = i < npml || i >= nx - npml;
        if !x_pml {
            for j in lo..hi {
                let curl = (hy1[j] - hy0[j]) - (hx[j] - hx[j - 1]);
                ez[j] = ca[j] * ez[j] + cb[j] * curl;
            }
        } else {
            let psi_x = &mut f.psi_ezx[row..row + ny];
            let (b, c, k) = (px.b_e[i], px.c_e[i], px.kinv_e[i]);
            for j in lo..hi {
                let dhy = hy1[j] - hy0[j];
                psi_x[j] = b * psi_x[j] + c * dhy * inv_dx;
                let curl = k * dhy + psi_x[j] * dx - (hx[j] - hx[j - 1]);
                ez[j] = ca[j] * ez[j] + cb[j] * curl;
            }
        }
        let psi_y = &mut f.psi_ezy[row..row + ny];
        let psi_x = &mut f.psi_ezx[row..row + ny];
        for j in (1..lo).chain(hi..ny - 1) {
            let dhy = hy1[j] - hy0[j];
            let dhx = hx[j] - hx[j - 1];
            let mut curl_x = dhy;
            if x_pml {
                psi_x[j] = px.b_e[i] * psi_x[j] + px.c_e[i] * dhy * inv_dx;
                curl_x = px.kinv_e[i] * dhy + psi_x[j] * dx;
            }
            psi_y[j] = py.b_e[j] * psi_y[j] + py.c_e[j] * dhx * inv_dx;
            let curl = curl_x - (py.kinv_e[j] * dhx + psi_y[j] * dx);
            ez[j] = ca[j] * ez[j] + cb[j] * curl;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdtd::{PmlParams, SourceShape};
    use crate::scene::Point2;

    fn small_domain() -> SimulationDomain {
        let f0 = 28e9;
        let l = crate::units::wavelength(f0);
        SimulationDomain::free_space(
            f0,
            1.0,
            2.0 * l,
            20.0,
            SourceShape::Point { position: Point2::ORIGIN },
            PmlParams::default(),
        )
        .unwrap()
    }

    #[test]
    fn runs_are_bit_identical() {
        let d = small_domain();
        let a = run_to_steady_state(&d, 12).unwrap();
        let b = run_to_steady_state(&d, 12).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.periods, b.periods);
    }

    #[test]
    fn phasor_is_finite_and_converges() {
        let d = small_domain();
        let p = run_to_steady_state(&d, 200).unwrap();
        assert!(p.converged, "change {}", p.convergence);
        assert!(p.values.iter().all(|v| v.is_finite()));
        assert!(p.periods <= 60, "{}", p.periods);
    }

    #[test]
    fn unconverged_runs_are_flagged() {
        let d = small_domain();
        let p = run_to_steady_state(&d, 3).unwrap();
        assert!(!p.converged);
        assert_eq!(p.periods, 3);
    }

    #[test]
    fn unstable_time_step_is_detected() {
        let d = small_domain();
        let r = run_with_options(
            &d,
            RunOptions {
                courant: 1.6,
                max_periods: 40,
                ..RunOptions::default()
            },
        );
        assert!(matches!(r, Err(Error::Stability(_))));
    }
}
