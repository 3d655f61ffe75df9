//! Radiation patterns and the near-to-far-field transformation.
//!
//! Equivalent currents on a circle around the radiator give the far field
//! through the 2D Kirchhoff–Helmholtz integral with the large-argument form of
//! the outgoing `H_0^(2)` kernel. Amplitudes follow the analytic module's
//! normalisation, `u ≈ √(2/(πkρ)) e^{−j(kρ − π/4)} A(φ)`, with phase
//! referenced to the lens center.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fdtd::PhasorField;
use crate::units::{wavelength, wavenumber, MU0};

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Fdtd,
    Analytic,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Fdtd => "fdtd",
            Engine::Analytic => "analytic",
        }
    }
}

/// Complex far-field amplitude on a uniform azimuth grid starting at 0°.
///
/// The physical amplitude is `amplitude · √absolute_scale`; peak-normalised
/// patterns carry unit peak magnitude and keep the removed peak power in
/// `absolute_scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiationPattern {
    pub step_deg: f64,
    pub amplitude: Vec<Complex64>,
    pub absolute_scale: f64,
    pub engine: Engine,
    pub scene_hash: Option<String>,
}

/// Number of samples of a grid with `step` degrees, if it tiles 360°.
pub fn samples_for_step(step: f64) -> Result<usize> {
    if !(step > 0.0 && step <= 360.0) {
        return Err(Error::Input(format!("angular resolution must lie in (0, 360], got {step}")));
    }
    let n = (360.0 / step).round();
    if (n * step - 360.0).abs() > 1e-9 {
        return Err(Error::Input(format!("angular resolution {step}° does not divide 360°")));
    }
    Ok(n as usize)
}

impl RadiationPattern {
    pub fn new(step_deg: f64, amplitude: Vec<Complex64>, engine: Engine) -> Result<Self> {
        let n = samples_for_step(step_deg)?;
        if amplitude.len() != n {
            return Err(Error::Input(format!(
                "{} samples do not match a {step_deg}° grid ({n} expected)",
                amplitude.len()
            )));
        }
        Ok(Self {
            step_deg,
            amplitude,
            absolute_scale: 1.0,
            engine,
            scene_hash: None,
        })
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(step_deg: f64, engine: Engine, f: F) -> Result<Self> {
        let n = samples_for_step(step_deg)?;
        let amplitude = (0..n).map(|i| f(i as f64 * step_deg)).collect();
        Self::new(step_deg, amplitude, engine)
    }

    pub fn len(&self) -> usize {
        self.amplitude.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitude.is_empty()
    }

    pub fn angle(&self, i: usize) -> f64 {
        i as f64 * self.step_deg
    }

    /// Stored power `|A|²` (relative when normalised).
    pub fn power(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Power in dB relative to the pattern peak.
    pub fn power_db(&self) -> Vec<f64> {
        let p = self.power();
        let peak = p.iter().cloned().fold(0.0, f64::max);
        p.iter().map(|&v| 10.0 * (v / peak).log10()).collect()
    }

    pub fn physical_amplitude(&self, i: usize) -> Complex64 {
        self.amplitude[i] * self.absolute_scale.sqrt()
    }

    /// Rescales to unit peak magnitude, moving the peak power into
    /// `absolute_scale`. All-zero patterns are returned unchanged.
    pub fn normalized(mut self) -> Self {
        let peak = self.amplitude.iter().map(|a| a.norm()).fold(0.0, f64::max);
        if peak > 0.0 {
            let inv = 1.0 / peak;
            for a in &mut self.amplitude {
                *a *= inv;
            }
            self.absolute_scale *= peak * peak;
        }
        self
    }

    /// Pattern rotated by `shift` samples (`+` rotates counterclockwise).
    pub fn rotated(&self, shift: isize) -> Self {
        let n = self.len() as isize;
        let mut out = self.clone();
        for i in 0..n {
            out.amplitude[(i + shift).rem_euclid(n) as usize] = self.amplitude[i as usize];
        }
        out
    }

    /// CSV with `angle_deg,power_db,phase_deg` rows and a `#` header holding
    /// units, the absolute scale and provenance.
    pub fn to_csv(&self, provenance: &[(&str, String)]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# radiation pattern, engine = {}", self.engine.name());
        let _ = writeln!(s, "# absolute_scale = {}", fmt_sig(self.absolute_scale));
        if let Some(h) = &self.scene_hash {
            let _ = writeln!(s, "# scene_hash = {h}");
        }
        for (k, v) in provenance {
            let _ = writeln!(s, "# {k} = {v}");
        }
        let _ = writeln!(s, "# columns: angle_deg [deg], power_db [dB re peak], phase_deg [deg]");
        s.push_str("angle_deg,power_db,phase_deg\n");
        let db = self.power_db();
        for (i, a) in self.amplitude.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{}",
                fmt_sig(self.angle(i)),
                fmt_sig(db[i]),
                fmt_sig(a.arg().to_degrees())
            );
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut scale = 1.0;
        let mut engine = Engine::Fdtd;
        let mut hash = None;
        let mut angles = Vec::new();
        let mut amps = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                if let Some((k, v)) = c.split_once('=') {
                    let (k, v) = (k.trim(), v.trim());
                    match k {
                        "absolute_scale" => {
                            scale = v.parse().map_err(|_| Error::Input(format!("bad absolute_scale `{v}`")))?
                        }
                        "scene_hash" => hash = Some(v.to_string()),
                        "radiation pattern, engine" if v == "analytic" => engine = Engine::Analytic,
                        _ => {}
                    }
                }
                continue;
            }
            if line.starts_with("angle_deg") {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::Input(format!("pattern CSV row needs 3 columns: `{line}`")));
            }
            let num = |s: &str| -> Result<f64> {
                s.trim().parse::<f64>().map_err(|_| Error::Input(format!("bad number `{s}`")))
            };
            let (a, db, ph) = (num(cols[0])?, num(cols[1])?, num(cols[2])?);
            angles.push(a);
            amps.push(Complex64::from_polar(10f64.powf(db / 20.0), ph.to_radians()));
        }
        if angles.len() < 2 {
            return Err(Error::Input("pattern CSV holds fewer than two samples".into()));
        }
        let step = angles[1] - angles[0];
        let n = samples_for_step(step)?;
        let on_grid = angles.iter().enumerate().all(|(i, a)| (a - i as f64 * step).abs() < 1e-6);
        if n != angles.len() || angles[0] != 0.0 || !on_grid {
            return Err(Error::Input("pattern CSV angles must be a uniform grid starting at 0°".into()));
        }
        let step = 360.0 / n as f64;
        let mut p = Self::new(step, amps, engine)?;
        p.absolute_scale = scale;
        p.scene_hash = hash;
        Ok(p)
    }

    pub fn write_csv(&self, path: &Path, provenance: &[(&str, String)]) -> Result<()> {
        std::fs::write(path, self.to_csv(provenance))?;
        Ok(())
    }
}

/// Nine significant digits, the fixed precision of every data file.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.8e}");
    // trim trailing zeros in the mantissa, keep the exponent
    let (m, e) = s.split_once('e').unwrap();
    let m = if m.contains('.') { m.trim_end_matches('0').trim_end_matches('.') } else { m };
    if e == "0" {
        m.to_string()
    } else {
        format!("{m}e{e}")
    }
}

/// `∫ |A(φ)|² dφ` over the full circle (radians), with the absolute scale.
pub fn pattern_power_integral(p: &RadiationPattern) -> f64 {
    let sum: f64 = p.amplitude.iter().map(|a| a.norm_sqr()).sum();
    sum * p.step_deg.to_radians() * p.absolute_scale
}

/// Four-point Lagrange weights for nodes `-1, 0, 1, 2` at offset `t ∈ [0, 1)`.
fn lagrange4(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

/// Bicubic interpolation of `get(i, j)` at fractional index `(fx, fy)`.
fn interp<F: Fn(usize, usize) -> Complex64>(get: F, fx: f64, fy: f64) -> Complex64 {
    let (i0, j0) = (fx.floor(), fy.floor());
    let wx = lagrange4(fx - i0);
    let wy = lagrange4(fy - j0);
    let (i0, j0) = (i0 as usize, j0 as usize);
    let mut s = Complex64::new(0.0, 0.0);
    for (a, wa) in wx.iter().enumerate() {
        let mut col = Complex64::new(0.0, 0.0);
        for (b, wb) in wy.iter().enumerate() {
            col += *wb * get(i0 + a - 1, j0 + b - 1);
        }
        s += *wa * col;
    }
    s
}

/// Sample on the circular contour: position, outward normal, arc weight, and
/// the equivalent currents `J_z = n̂×H` and `Ez` (the magnetic current is `Ez t̂`).
struct ContourSample {
    x: f64,
    y: f64,
    nx: f64,
    ny: f64,
    weight: f64,
    ez: Complex64,
    jz: Complex64,
}

/// Far-field pattern of `field` from equivalent currents on a circle of
/// `contour_radius` about the lens center, peak-normalised.
pub fn ntff(field: &PhasorField, contour_radius: f64, angular_resolution: f64) -> Result<RadiationPattern> {
    let n_ang = samples_for_step(angular_resolution)?;
    let dx = field.dx;
    if !(contour_radius > field.enclosed_radius + dx) {
        return Err(Error::Contour(format!(
            "contour radius {:.3} mm does not enclose the lens and source ({:.3} mm)",
            contour_radius * 1e3,
            field.enclosed_radius * 1e3
        )));
    }
    // stencil reach of the staggered bicubic interpolation
    let reach = 3.0;
    let c = field.center;
    let lo_x = (c.x - contour_radius - field.origin.x) / dx - reach;
    let hi_x = (c.x + contour_radius - field.origin.x) / dx + reach;
    let lo_y = (c.y - contour_radius - field.origin.y) / dx - reach;
    let hi_y = (c.y + contour_radius - field.origin.y) / dx + reach;
    let b = field.interior;
    if lo_x < b.i0 as f64 || hi_x > (b.i1 - 1) as f64 || lo_y < b.j0 as f64 || hi_y > (b.j1 - 1) as f64 {
        return Err(Error::Contour(format!(
            "contour radius {:.3} mm reaches into the absorbing layer",
            contour_radius * 1e3
        )));
    }

    let k0 = wavenumber(field.f0);
    let k = k0 * field.background_eps.sqrt();
    let omega_mu = 2.0 * std::f64::consts::PI * field.f0 * MU0;
    let spacing = (wavelength(field.f0) / 10.0).min(dx);
    let n_pts = ((2.0 * std::f64::consts::PI * contour_radius / spacing).ceil() as usize).max(64);
    let weight = 2.0 * std::f64::consts::PI * contour_radius / n_pts as f64;

    let ny = field.ny;
    let ez_at = |i: usize, j: usize| field.values[i * ny + j];
    // discrete curl on the staggered grid: ∂Ez/∂x at (i+½, j), ∂Ez/∂y at (i, j+½)
    let dex = |i: usize, j: usize| (field.values[(i + 1) * ny + j] - field.values[i * ny + j]) / dx;
    let dey = |i: usize, j: usize| (field.values[i * ny + j + 1] - field.values[i * ny + j]) / dx;

    let samples: Vec<ContourSample> = (0..n_pts)
        .map(|q| {
            let theta = 2.0 * std::f64::consts::PI * q as f64 / n_pts as f64;
            let (s, co) = theta.sin_cos();
            let x = c.x + contour_radius * co;
            let y = c.y + contour_radius * s;
            let fx = (x - field.origin.x) / dx;
            let fy = (y - field.origin.y) / dx;
            let ez = interp(ez_at, fx, fy);
            let dedx = interp(dex, fx - 0.5, fy);
            let dedy = interp(dey, fx, fy - 0.5);
            // jωμ H = ∇×E:  Hx = −∂yEz/(jωμ),  Hy = ∂xEz/(jωμ)
            let hx = -dedy / (J * omega_mu);
            let hy = dedx / (J * omega_mu);
            ContourSample {
                x: x - c.x,
                y: y - c.y,
                nx: co,
                ny: s,
                weight,
                ez,
                jz: co * hy - s * hx,
            }
        })
        .collect();

    let amplitude: Vec<Complex64> = (0..n_ang)
        .map(|a| {
            let phi = (a as f64 * angular_resolution).to_radians();
            let (rs, rc) = phi.sin_cos();
            let mut sum = Complex64::new(0.0, 0.0);
            for p in &samples {
                let cos_n = rc * p.nx + rs * p.ny;
                let phase = Complex64::from_polar(1.0, k * (rc * p.x + rs * p.y));
                let term = J * k * cos_n * p.ez - J * omega_mu * p.jz;
                sum += p.weight * term * phase;
            }
            -0.25 * J * sum
        })
        .collect();
    Ok(RadiationPattern::new(angular_resolution, amplitude, Engine::Fdtd)?.normalized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::bessel::hankel2_0;
    use crate::scene::Point2;

    const F0: f64 = 28e9;

    fn line_source_field(sources: &[(Point2, Complex64)], half_lambda: f64, cells_per_lambda: f64) -> PhasorField {
        let l = wavelength(F0);
        let dx = l / cells_per_lambda;
        let half = (half_lambda * l / dx).ceil() as usize;
        let k = wavenumber(F0);
        let extent = sources.iter().map(|(p, _)| p.norm()).fold(0.0, f64::max);
        PhasorField::from_fn(F0, dx, half, 4, extent, |p| {
            sources
                .iter()
                .map(|(s, a)| {
                    let r = p.sub(*s).norm();
                    // the singular source node is never reached by the contour stencil
                    if r < 0.5 * dx {
                        Complex64::new(0.0, 0.0)
                    } else {
                        a * hankel2_0(k * r)
                    }
                })
                .sum()
        })
    }

    #[test]
    fn free_line_source_is_omnidirectional() {
        let f = line_source_field(&[(Point2::ORIGIN, Complex64::new(1.0, 0.0))], 2.0, 40.0);
        let p = ntff(&f, 1.5 * wavelength(F0), 1.0).unwrap();
        let db = p.power_db();
        let spread = db.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread > -0.05, "{spread}");
        // absolute level: a unit line source has |A| = 1
        assert!((p.absolute_scale.sqrt() - 1.0).abs() < 0.01, "{}", p.absolute_scale);
    }

    #[test]
    fn two_element_array_factor() {
        let l = wavelength(F0);
        let s = [
            (Point2::new(-l / 4.0, 0.0), Complex64::new(1.0, 0.0)),
            (Point2::new(l / 4.0, 0.0), Complex64::new(1.0, 0.0)),
        ];
        let f = line_source_field(&s, 2.5, 40.0);
        let p = ntff(&f, 1.8 * l, 1.0).unwrap();
        let db = p.power_db();
        for (i, v) in db.iter().enumerate() {
            let phi = (i as f64).to_radians();
            let af = (0.5 * std::f64::consts::PI * phi.cos()).cos().abs();
            let want = 20.0 * af.log10();
            if want > -20.0 {
                assert!((v - want).abs() < 0.1, "φ = {i}: {v} vs {want}");
            }
        }
        assert!(db[0] < -30.0 && db[180] < -30.0);
    }

    #[test]
    fn translation_changes_only_phase() {
        let l = wavelength(F0);
        // kd stays below π so the phase needs no unwrapping
        let d = 0.4 * l;
        let phi_d: f64 = 35.0;
        let src = Point2::from_polar(d, phi_d);
        let centered = line_source_field(&[(Point2::ORIGIN, Complex64::new(1.0, 0.0))], 2.5, 40.0);
        let moved = line_source_field(&[(src, Complex64::new(1.0, 0.0))], 2.5, 40.0);
        let a = ntff(&centered, 1.8 * l, 1.0).unwrap();
        let b = ntff(&moved, 1.8 * l, 1.0).unwrap();
        assert!(b.power_db().iter().all(|v| *v > -0.05));
        // least squares slope of Δphase against cos(φ − φd)
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for i in 0..a.len() {
            let x = (i as f64 - phi_d).to_radians().cos();
            let y = (b.physical_amplitude(i) / a.physical_amplitude(i)).arg();
            sxx += x * x;
            sxy += x * y;
        }
        let slope = sxy / sxx;
        let kd = wavenumber(F0) * d;
        assert!((slope / kd - 1.0).abs() < 0.01, "{slope} vs {kd}");
    }

    #[test]
    fn scaling_is_linear() {
        let f = line_source_field(&[(Point2::new(1e-3, 2e-3), Complex64::new(1.0, 0.0))], 2.0, 30.0);
        let a = Complex64::new(-0.7, 2.3);
        let r = 1.5 * wavelength(F0);
        let p = ntff(&f, r, 2.0).unwrap();
        let q = ntff(&f.scaled(a), r, 2.0).unwrap();
        for i in 0..p.len() {
            let want = a * p.physical_amplitude(i);
            assert!((q.physical_amplitude(i) - want).norm() <= 1e-12 * want.norm().max(1e-30));
        }
    }

    #[test]
    fn contour_checks() {
        let l = wavelength(F0);
        let f = line_source_field(&[(Point2::new(0.5 * l, 0.0), Complex64::new(1.0, 0.0))], 2.0, 20.0);
        assert!(matches!(ntff(&f, 0.3 * l, 1.0), Err(Error::Contour(_))));
        assert!(matches!(ntff(&f, 1.95 * l, 1.0), Err(Error::Contour(_))));
        assert!(matches!(ntff(&f, 1.0 * l, 0.7), Err(Error::Input(_))));
    }

    #[test]
    fn power_integral_basics() {
        let one = RadiationPattern::from_fn(0.5, Engine::Analytic, |_| Complex64::new(1.0, 0.0)).unwrap();
        assert!((pattern_power_integral(&one) - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        let two = RadiationPattern::from_fn(0.5, Engine::Analytic, |_| Complex64::new(2.0, 0.0)).unwrap();
        assert!((pattern_power_integral(&two) / pattern_power_integral(&one) - 4.0).abs() < 1e-12);
        // normalisation keeps the physical power
        let n = two.clone().normalized();
        assert!((pattern_power_integral(&n) - pattern_power_integral(&two)).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let p = RadiationPattern::from_fn(0.25, Engine::Analytic, |a| {
            Complex64::from_polar(1.0 + 0.5 * a.to_radians().cos(), a.to_radians())
        })
        .unwrap()
        .normalized();
        let text = p.to_csv(&[("config_hash", "abc".to_string())]);
        assert!(text.starts_with("# radiation pattern"));
        let q = RadiationPattern::from_csv(&text).unwrap();
        assert_eq!(q.len(), p.len());
        assert_eq!(q.engine, Engine::Analytic);
        for (a, b) in p.amplitude.iter().zip(&q.amplitude) {
            assert!((a - b).norm() < 1e-7);
        }
        assert!((q.absolute_scale / p.absolute_scale - 1.0).abs() < 1e-8);
    }

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.25), "2.5e-1");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-3.0103), "-3.0103");
        assert_eq!(fmt_sig(123456789.123), "1.23456789e8");
    }
}
