//! Exact cylindrical-harmonic solutions for a homogeneous dielectric disk lit
//! by a line source or a plane wave. These are the reference solutions the
//! FDTD engine is checked against.
//!
//! Time convention is `e^{jωt}`; outgoing waves are `H^(2)`. With the
//! harmonic index `n` measured from the source azimuth, fields read
//!
//! ```text
//! inside   u = Σ b_n J_n(k_in ρ)  e^{jn(φ−φs)}
//! outside  u = H_0(k_out |r − rs|) + Σ a_n H_n(k_out ρ) e^{jn(φ−φs)}
//! ```
//!
//! and only `n ≥ 0` is stored: `a_{−n} = (−1)^n a_n`, `b_{−n} = (−1)^n b_n`.

pub mod bessel;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::farfield::{Engine, RadiationPattern};
use crate::scene::{LensSpec, Point2};
use crate::units::wavenumber;

use bessel::{bessel_j, bessel_j_complex, bessel_jy, derivatives, hankel2, hankel2_0};

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };
/// Relative far-field change accepted between successive truncations.
const TRUNCATION_TOL: f64 = 1e-9;
/// Far-field probe grid used by the truncation test (degrees).
const PROBE_STEP_DEG: f64 = 0.5;

/// Point in polar coordinates about the lens center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    pub rho: f64,
    pub phi_deg: f64,
}

impl PolarPoint {
    pub fn new(rho: f64, phi_deg: f64) -> Self {
        Self { rho, phi_deg }
    }

    pub fn from_cartesian(p: Point2, center: Point2) -> Self {
        let d = p.sub(center);
        Self::new(d.norm(), d.y.atan2(d.x).to_degrees())
    }
}

#[derive(Debug, Clone)]
pub struct HarmonicSolution {
    pub n_max: usize,
    /// `a_n`, `n = 0 ..= n_max`.
    pub coeffs_scattered: Vec<Complex64>,
    /// `b_n`, `n = 0 ..= n_max`.
    pub coeffs_interior: Vec<Complex64>,
    pub k_out: f64,
    pub k_in: Complex64,
    pub radius: f64,
    pub center: Point2,
    pub source: PolarPoint,
}

/// Lens-interior permittivity including the loss tangent.
fn interior_permittivity(lens: &LensSpec, eps_eff_in: f64) -> Complex64 {
    Complex64::new(eps_eff_in, -lens.eps_r * lens.tan_delta)
}

/// `J_n(k_in a)` and its derivative, orders `0 ..= n`, staying on the real
/// routine when the interior is lossless so a no-contrast lens cancels exactly.
fn interior_bessel(n: usize, k_in: Complex64, a: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    if k_in.im == 0.0 {
        let x = k_in.re * a;
        let j = bessel_j(n + 1, x);
        let d = derivatives(&j, x);
        let c = |v: &[f64]| v.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>();
        (c(&j[..=n]), c(&d))
    } else {
        let z = k_in * a;
        let j = bessel_j_complex(n + 1, z);
        let d = derivatives(&j, z);
        (j[..=n].to_vec(), d)
    }
}

/// Exterior-side quantities at the rim: `J_n(k a)`, `J_n'`, `H_n(k a)`, `H_n'`.
struct RimFunctions {
    j: Vec<f64>,
    dj: Vec<f64>,
    h: Vec<Complex64>,
    dh: Vec<Complex64>,
    jin: Vec<Complex64>,
    djin: Vec<Complex64>,
}

impl RimFunctions {
    fn new(n: usize, k_out: f64, k_in: Complex64, a: f64) -> Self {
        let x = k_out * a;
        let (j, y) = bessel_jy(n + 1, x);
        let dj = derivatives(&j, x);
        let dy = derivatives(&y, x);
        let h = j.iter().zip(&y).map(|(&a, &b)| Complex64::new(a, -b)).collect::<Vec<_>>();
        let dh = dj.iter().zip(&dy).map(|(&a, &b)| Complex64::new(a, -b)).collect();
        let (jin, djin) = interior_bessel(n, k_in, a);
        Self {
            j: j[..=n].to_vec(),
            dj,
            h: h[..=n].to_vec(),
            dh,
            jin,
            djin,
        }
    }

    /// Scattering coefficient `c_n` for unit exterior illumination `J_n(k ρ)`,
    /// plus the shared denominator.
    fn scattering(&self, n: usize, k_out: f64, k_in: Complex64) -> (Complex64, Complex64) {
        let k0 = Complex64::new(k_out, 0.0);
        let den = k0 * self.dh[n] * self.jin[n] - k_in * self.h[n] * self.djin[n];
        let num = k_in * self.j[n] * self.djin[n] - k0 * self.jin[n] * self.dj[n];
        (num / den, den)
    }
}

fn check_media(eps_out: f64, eps_in: f64, f0: f64) -> Result<()> {
    if !(eps_out > 0.0 && eps_in > 0.0) {
        return Err(Error::Domain(format!(
            "effective permittivities must be positive, got in {eps_in}, out {eps_out}"
        )));
    }
    if !(f0 > 0.0) {
        return Err(Error::Domain(format!("f0 must be positive, got {f0}")));
    }
    Ok(())
}

fn max_relative_change(a: &[Complex64], b: &[Complex64]) -> f64 {
    let peak = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / peak
}

/// Runs the truncation doubling: `n0`, `2 n0`, `4 n0`, returning the first
/// order whose far field differs from the previous one by less than the tolerance.
fn converge<T, F, P>(n0: usize, mut build: F, probe: P) -> Result<T>
where
    F: FnMut(usize) -> Result<T>,
    P: Fn(&T) -> Vec<Complex64>,
{
    let mut prev = build(n0)?;
    let mut prev_probe = probe(&prev);
    let mut n = n0;
    while n < 4 * n0 {
        n *= 2;
        let next = build(n)?;
        let next_probe = probe(&next);
        if next_probe.iter().any(|v| !v.is_finite()) {
            break;
        }
        let change = max_relative_change(&prev_probe, &next_probe);
        if change < TRUNCATION_TOL {
            return Ok(next);
        }
        prev = next;
        prev_probe = next_probe;
    }
    let _ = prev;
    Err(Error::Convergence(format!(
        "far field still changing beyond n_max = {} (4x the initial {n0})",
        4 * n0
    )))
}

fn initial_order(k_in: Complex64, a: f64) -> usize {
    (k_in.norm() * a).ceil() as usize + 12
}

/// Line source at `source` (polar about the lens center) outside the lens.
pub fn solve_line_source(
    lens: &LensSpec,
    eps_eff_out: f64,
    eps_eff_in: f64,
    f0: f64,
    source: PolarPoint,
) -> Result<HarmonicSolution> {
    check_media(eps_eff_out, eps_eff_in, f0)?;
    if !(source.rho > lens.radius) {
        return Err(Error::UnsupportedGeometry(format!(
            "line source at ρ = {} m must lie outside the lens (R0 = {} m)",
            source.rho, lens.radius
        )));
    }
    let k0 = wavenumber(f0);
    let k_out = k0 * eps_eff_out.sqrt();
    let k_in = k0 * interior_permittivity(lens, eps_eff_in).sqrt();
    let a = lens.radius;

    let build = |n: usize| -> Result<HarmonicSolution> {
        let rim = RimFunctions::new(n, k_out, k_in, a);
        let hs = hankel2(n, k_out * source.rho);
        let mut scattered = Vec::with_capacity(n + 1);
        let mut interior = Vec::with_capacity(n + 1);
        for m in 0..=n {
            let (c, den) = rim.scattering(m, k_out, k_in);
            scattered.push(c * hs[m]);
            interior.push(-2.0 * J * hs[m] / (std::f64::consts::PI * a * den));
        }
        if scattered.iter().chain(&interior).any(|v| !v.is_finite()) {
            return Err(Error::Convergence(format!(
                "non-finite harmonic coefficients at n_max = {n}"
            )));
        }
        Ok(HarmonicSolution {
            n_max: n,
            coeffs_scattered: scattered,
            coeffs_interior: interior,
            k_out,
            k_in,
            radius: a,
            center: lens.center,
            source,
        })
    };
    converge(initial_order(k_in, a), build, |s| {
        let n = (360.0 / PROBE_STEP_DEG).round() as usize;
        (0..n).map(|i| s.farfield_amplitude(i as f64 * PROBE_STEP_DEG)).collect()
    })
}

impl HarmonicSolution {
    /// `a_n` for any signed order.
    pub fn scattered_coeff(&self, n: i64) -> Complex64 {
        let v = self.coeffs_scattered[n.unsigned_abs() as usize];
        if n < 0 && n % 2 != 0 {
            -v
        } else {
            v
        }
    }

    pub fn interior_coeff(&self, n: i64) -> Complex64 {
        let v = self.coeffs_interior[n.unsigned_abs() as usize];
        if n < 0 && n % 2 != 0 {
            -v
        } else {
            v
        }
    }

    /// Far-field amplitude `A(φ)` with `u ≈ √(2/(π k ρ)) e^{−j(kρ − π/4)} A(φ)`,
    /// phase referenced to the lens center; includes the direct source wave.
    pub fn farfield_amplitude(&self, phi_deg: f64) -> Complex64 {
        let dphi = (phi_deg - self.source.phi_deg).to_radians();
        let direct = Complex64::from_polar(1.0, self.k_out * self.source.rho * dphi.cos());
        direct + self.scattered_sum_far(dphi)
    }

    fn scattered_sum_far(&self, dphi: f64) -> Complex64 {
        let mut sum = self.coeffs_scattered[0];
        let mut jn = Complex64::new(1.0, 0.0);
        for n in 1..=self.n_max {
            jn *= J;
            sum += 2.0 * jn * self.coeffs_scattered[n] * (n as f64 * dphi).cos();
        }
        sum
    }

    /// Interior series at `(ρ, φ)`, valid for `ρ ≤ R0`.
    pub fn interior_field(&self, rho: f64, phi_deg: f64) -> Complex64 {
        let dphi = (phi_deg - self.source.phi_deg).to_radians();
        let (jv, _) = interior_bessel(self.n_max, self.k_in, rho);
        let mut sum = self.coeffs_interior[0] * jv[0];
        for n in 1..=self.n_max {
            sum += 2.0 * self.coeffs_interior[n] * jv[n] * (n as f64 * dphi).cos();
        }
        sum
    }

    /// Exterior field (direct + scattered) at `(ρ, φ)`, valid for `ρ ≥ R0`.
    pub fn exterior_field(&self, rho: f64, phi_deg: f64) -> Complex64 {
        let p = Point2::from_polar(rho, phi_deg);
        let s = Point2::from_polar(self.source.rho, self.source.phi_deg);
        let dist = p.sub(s).norm();
        let direct = hankel2_0(self.k_out * dist);
        let dphi = (phi_deg - self.source.phi_deg).to_radians();
        let h = hankel2(self.n_max, self.k_out * rho);
        let mut sum = self.coeffs_scattered[0] * h[0];
        for n in 1..=self.n_max {
            sum += 2.0 * self.coeffs_scattered[n] * h[n] * (n as f64 * dphi).cos();
        }
        direct + sum
    }

    /// Total field at a scene point.
    pub fn field_at(&self, p: Point2) -> Complex64 {
        let q = PolarPoint::from_cartesian(p, self.center);
        if q.rho < self.radius {
            self.interior_field(q.rho, q.phi_deg)
        } else {
            self.exterior_field(q.rho, q.phi_deg)
        }
    }
}

/// Samples the far field on a uniform grid and normalises it to unit peak.
pub fn farfield_from_solution(sol: &HarmonicSolution, angular_resolution: f64) -> Result<RadiationPattern> {
    RadiationPattern::from_fn(angular_resolution, Engine::Analytic, |phi| sol.farfield_amplitude(phi))
        .map(|p| p.normalized())
}

/// Plane-wave scattering coefficients `c_n`, `n ≥ 0` (`c_{−n} = c_n`), for a
/// wave travelling along `+x`.
#[derive(Debug, Clone)]
pub struct PlaneWaveSolution {
    pub n_max: usize,
    pub coeffs: Vec<Complex64>,
    pub k_out: f64,
}

impl PlaneWaveSolution {
    /// Scattering amplitude `T(φ) = Σ c_n e^{jnφ}`; forward is `φ = 0`.
    pub fn amplitude(&self, phi_deg: f64) -> Complex64 {
        let phi = phi_deg.to_radians();
        let mut sum = self.coeffs[0];
        for n in 1..=self.n_max {
            sum += 2.0 * self.coeffs[n] * (n as f64 * phi).cos();
        }
        sum
    }

    /// Bistatic echo width `σ2D(φ) = (4/k) |T(φ)|²` (m).
    pub fn echo_width(&self, phi_deg: f64) -> f64 {
        4.0 / self.k_out * self.amplitude(phi_deg).norm_sqr()
    }

    /// Total scattering width from the modal sum, `(4/k) Σ |c_n|²`.
    pub fn scattering_width(&self) -> f64 {
        let s: f64 = self.coeffs.iter().skip(1).map(|c| c.norm_sqr()).sum();
        4.0 / self.k_out * (self.coeffs[0].norm_sqr() + 2.0 * s)
    }

    /// Extinction width from the forward amplitude, `−(4/k) Re T(0)`.
    pub fn extinction_width(&self) -> f64 {
        -4.0 / self.k_out * self.amplitude(0.0).re
    }
}

pub fn solve_plane_wave(lens: &LensSpec, eps_eff_out: f64, eps_eff_in: f64, f0: f64) -> Result<PlaneWaveSolution> {
    check_media(eps_eff_out, eps_eff_in, f0)?;
    let k0 = wavenumber(f0);
    let k_out = k0 * eps_eff_out.sqrt();
    let k_in = k0 * interior_permittivity(lens, eps_eff_in).sqrt();
    let a = lens.radius;
    let build = |n: usize| -> Result<PlaneWaveSolution> {
        let rim = RimFunctions::new(n, k_out, k_in, a);
        let coeffs: Vec<Complex64> = (0..=n).map(|m| rim.scattering(m, k_out, k_in).0).collect();
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Convergence(format!("non-finite coefficients at n_max = {n}")));
        }
        Ok(PlaneWaveSolution { n_max: n, coeffs, k_out })
    };
    converge(initial_order(k_in, a), build, |s| {
        let n = (360.0 / PROBE_STEP_DEG).round() as usize;
        (0..n).map(|i| s.amplitude(i as f64 * PROBE_STEP_DEG)).collect()
    })
}

/// Bistatic echo width pattern; `power` of each sample is `σ2D(φ)` in meters.
pub fn plane_wave_echo_width(
    lens: &LensSpec,
    eps_eff_out: f64,
    eps_eff_in: f64,
    f0: f64,
    angular_resolution: f64,
) -> Result<RadiationPattern> {
    let sol = solve_plane_wave(lens, eps_eff_out, eps_eff_in, f0)?;
    let scale = (4.0 / sol.k_out).sqrt();
    RadiationPattern::from_fn(angular_resolution, Engine::Analytic, |phi| scale * sol.amplitude(phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::farfield::pattern_power_integral;
    use crate::scene::default_paper_scene;

    fn default_lens() -> LensSpec {
        let mut l = default_paper_scene().lens;
        l.tan_delta = 0.0;
        l
    }

    fn central_feed() -> PolarPoint {
        let s = default_paper_scene();
        PolarPoint::new(1.32 * s.lens.radius, 180.0)
    }

    #[test]
    fn no_contrast_means_no_scattering() {
        let lens = default_lens();
        let sol = solve_line_source(&lens, 1.0, 1.0, 28e9, central_feed()).unwrap();
        assert!(sol.coeffs_scattered.iter().all(|c| *c == Complex64::new(0.0, 0.0)));
        let p = farfield_from_solution(&sol, 0.5).unwrap();
        for a in &p.amplitude {
            assert!((a.norm() - 1.0).abs() < 1e-10);
        }
        // interior equals the free line source
        let q = Point2::new(0.01, -0.02);
        let s = Point2::from_polar(sol.source.rho, 180.0);
        let free = hankel2_0(sol.k_out * q.sub(s).norm());
        assert!((sol.field_at(q) - free).norm() < 1e-9 * free.norm());
    }

    #[test]
    fn axis_source_beams_through_the_center() {
        let sol = solve_line_source(&default_lens(), 1.0, 2.1, 28e9, central_feed()).unwrap();
        let p = farfield_from_solution(&sol, 0.25).unwrap();
        let (imax, _) = p
            .amplitude
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        assert_eq!(imax, 0);
        for k in 1..720 {
            let a = p.amplitude[k].norm();
            let b = p.amplitude[1440 - k].norm();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn source_inside_lens_is_rejected() {
        let lens = default_lens();
        let r = solve_line_source(&lens, 1.0, 2.1, 28e9, PolarPoint::new(0.5 * lens.radius, 0.0));
        assert!(matches!(r, Err(Error::UnsupportedGeometry(_))));
    }

    #[test]
    fn rotating_the_source_rotates_the_pattern() {
        let lens = default_lens();
        let a = solve_line_source(&lens, 1.0, 2.1, 28e9, central_feed()).unwrap();
        let b = solve_line_source(&lens, 1.0, 2.1, 28e9, PolarPoint::new(a.source.rho, 180.0 + 7.5)).unwrap();
        let pa = farfield_from_solution(&a, 0.5).unwrap();
        let pb = farfield_from_solution(&b, 0.5).unwrap();
        let n = pa.len();
        for i in 0..n {
            let j = (i + 15) % n;
            assert!((pa.amplitude[i].norm() - pb.amplitude[j].norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn resolutions_agree_pointwise() {
        let sol = solve_line_source(&default_lens(), 1.0, 2.1, 28e9, central_feed()).unwrap();
        let coarse = farfield_from_solution(&sol, 0.5).unwrap();
        let fine = farfield_from_solution(&sol, 0.1).unwrap();
        for (i, a) in coarse.amplitude.iter().enumerate() {
            let b = fine.amplitude[5 * i];
            assert!((a - b).norm() < 1e-12, "{i}");
        }
    }

    #[test]
    fn field_is_continuous_across_the_rim() {
        let mut lens = default_lens();
        for tan_delta in [0.0, 0.0002] {
            lens.tan_delta = tan_delta;
            let sol = solve_line_source(&lens, 1.0, 2.1, 28e9, central_feed()).unwrap();
            for k in 0..64 {
                let phi = k as f64 * 360.0 / 64.0;
                let inner = sol.interior_field(lens.radius, phi);
                let outer = sol.exterior_field(lens.radius, phi);
                assert!((inner - outer).norm() <= 1e-8 * outer.norm(), "φ = {phi}: {inner} vs {outer}");
            }
        }
    }

    #[test]
    fn optical_theorem_for_lossless_lens() {
        let lens = default_lens();
        let pattern = plane_wave_echo_width(&lens, 1.0, 2.1, 28e9, 0.25).unwrap();
        let sol = solve_plane_wave(&lens, 1.0, 2.1, 28e9).unwrap();
        let scattering = pattern_power_integral(&pattern) / (2.0 * std::f64::consts::PI);
        let extinction = sol.extinction_width();
        assert!((scattering - extinction).abs() <= 1e-8 * extinction);
        assert!((sol.scattering_width() - extinction).abs() <= 1e-8 * extinction);
    }

    #[test]
    fn lossy_lens_absorbs() {
        let mut lens = default_lens();
        lens.tan_delta = 0.005;
        let sol = solve_plane_wave(&lens, 1.0, 2.1, 28e9).unwrap();
        assert!(sol.extinction_width() > sol.scattering_width() * (1.0 + 1e-6));
    }

    #[test]
    fn no_contrast_echo_width_vanishes() {
        let p = plane_wave_echo_width(&default_lens(), 1.0, 1.0, 28e9, 1.0).unwrap();
        assert!(p.amplitude.iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn rayleigh_regime_slope() {
        // Regress log(σ2D/R0) on log(kR0) using the series itself at tiny radii.
        let f0 = 28e9;
        let k = wavenumber(f0);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..=10 {
            let r = 1e-5 * 10f64.powf(i as f64 / 10.0);
            let lens = LensSpec { center: Point2::ORIGIN, radius: r, eps_r: 2.1, tan_delta: 0.0 };
            let sol = solve_plane_wave(&lens, 1.0, 2.1, f0).unwrap();
            xs.push((k * r).ln());
            ys.push((sol.echo_width(0.0) / r).ln());
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!((slope - 3.0).abs() < 0.01, "slope {slope}");
    }

    #[test]
    fn forward_echo_width_regression_pin() {
        let lens = default_lens();
        let sol = solve_plane_wave(&lens, 1.0, 2.1, 28e9).unwrap();
        let sigma = sol.echo_width(0.0);
        assert!((sigma - FORWARD_ECHO_WIDTH_M).abs() < 1e-9 * FORWARD_ECHO_WIDTH_M, "{sigma:.15e}");
    }

    // Independent evaluation of the same series with SciPy's Bessel and
    // Hankel routines, 241 harmonics.
    const FORWARD_ECHO_WIDTH_M: f64 = 3.187184506982571;
}
