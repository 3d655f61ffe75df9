//! Closed-form design rules: lens sizing from the E-plane beamwidth rule, the
//! plate-spacing mode window and the effective-index reduction of the plate
//! region to a 2D medium.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scene::ModeModel;
use crate::units::{wavelength, EPS0};

/// Beamwidth constant of the lens sizing rule, `BW_E ≈ 29.4 λ0 / R0` (degrees).
pub const BEAMWIDTH_CONSTANT_DEG: f64 = 29.4;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// E-plane half-power beamwidth (degrees) of a lens of radius `r0` at `f0`.
pub fn predicted_hpbw(f0: f64, r0: f64) -> Result<f64> {
    positive("f0", f0)?;
    positive("R0", r0)?;
    Ok(BEAMWIDTH_CONSTANT_DEG * wavelength(f0) / r0)
}

/// Lens radius (m) giving `target_hpbw` degrees at `f0`.
pub fn required_radius(f0: f64, target_hpbw: f64) -> Result<f64> {
    positive("f0", f0)?;
    positive("target beamwidth", target_hpbw)?;
    Ok(BEAMWIDTH_CONSTANT_DEG * wavelength(f0) / target_hpbw)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlateCheck {
    pub pass: bool,
    pub message: String,
}

/// Checks the single-mode window `λ0/2 < h < λ0` for the TE1 plate mode.
pub fn validate_plate_spacing(h: f64, f0: f64) -> PlateCheck {
    let lambda0 = wavelength(f0);
    let ratio = h / lambda0;
    if h <= 0.5 * lambda0 {
        PlateCheck {
            pass: false,
            message: format!(
                "h = {ratio:.4} λ0 is at or below λ0/2: TE1 is cut off (fc = {:.3} GHz)",
                crate::units::C0 / (2.0 * h) / 1e9
            ),
        }
    } else if h >= lambda0 {
        PlateCheck {
            pass: false,
            message: format!("h = {ratio:.4} λ0 is at or above λ0: higher-order modes propagate (overmoded)"),
        }
    } else {
        PlateCheck {
            pass: true,
            message: format!("h = {ratio:.4} λ0 lies inside (λ0/2, λ0)"),
        }
    }
}

/// Permittivity seen by the in-plane wave once the vertical standing wave is
/// factored out. TEM keeps the material value; TE1 subtracts `(λ0 / 2h)²`.
pub fn effective_permittivity(eps_r: f64, h: f64, f0: f64, mode: ModeModel) -> Result<f64> {
    if !(eps_r >= 1.0) {
        return Err(Error::Domain(format!("eps_r must be >= 1, got {eps_r}")));
    }
    positive("plate spacing", h)?;
    positive("f0", f0)?;
    match mode {
        ModeModel::Tem => Ok(eps_r),
        ModeModel::Te1 => {
            let cutoff = wavelength(f0) / (2.0 * h);
            let eps = eps_r - cutoff * cutoff;
            if eps <= 0.0 {
                Err(Error::Evanescent(format!(
                    "TE1 is below cutoff in ε_r = {eps_r}: fc = {:.3} GHz exceeds f0 = {:.3} GHz",
                    crate::units::C0 / (2.0 * h * eps_r.sqrt()) / 1e9,
                    f0 / 1e9
                )))
            } else {
                Ok(eps)
            }
        }
    }
}

/// Equivalent conductivity (S/m) reproducing a loss tangent at `f0`.
pub fn loss_conductivity(f0: f64, eps_r: f64, tan_delta: f64) -> f64 {
    2.0 * std::f64::consts::PI * f0 * EPS0 * eps_r * tan_delta
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub frequency_hz: f64,
    pub lambda0: f64,
    pub required_r0: f64,
    pub predicted_hpbw: f64,
    pub plate_spacing: f64,
    pub mode_model: ModeModel,
    pub mode_check: PlateCheck,
    pub eps_eff_inside: f64,
    pub eps_eff_outside: f64,
}

impl DesignReport {
    /// Sizes the lens for `target_hpbw` and reduces the plate region.
    pub fn new(f0: f64, target_hpbw: f64, h: f64, eps_r: f64, mode: ModeModel) -> Result<Self> {
        let required_r0 = required_radius(f0, target_hpbw)?;
        let predicted = predicted_hpbw(f0, required_r0)?;
        let inside = effective_permittivity(eps_r, h, f0, mode)?;
        let outside = effective_permittivity(1.0, h, f0, mode)?;
        if !(inside > outside) {
            return Err(Error::Domain(format!(
                "lens does not focus: ε_eff inside {inside} is not above outside {outside}"
            )));
        }
        Ok(Self {
            frequency_hz: f0,
            lambda0: wavelength(f0),
            required_r0,
            predicted_hpbw: predicted,
            plate_spacing: h,
            mode_model: mode,
            mode_check: validate_plate_spacing(h, f0),
            eps_eff_inside: inside,
            eps_eff_outside: outside,
        })
    }
}

impl fmt::Display for DesignReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = self.lambda0;
        writeln!(f, "frequency = {:.6} GHz", self.frequency_hz / 1e9)?;
        writeln!(f, "lambda0 = {:.6} mm", l * 1e3)?;
        writeln!(f, "required_R0 = {:.2} mm ({:.4} lambda0)", self.required_r0 * 1e3, self.required_r0 / l)?;
        writeln!(f, "predicted_hpbw = {:.4} deg", self.predicted_hpbw)?;
        writeln!(f, "plate_spacing = {:.4} mm ({:.4} lambda0)", self.plate_spacing * 1e3, self.plate_spacing / l)?;
        writeln!(
            f,
            "mode_check = {} ({})",
            if self.mode_check.pass { "pass" } else { "fail" },
            self.mode_check.message
        )?;
        writeln!(f, "mode_model = {}", self.mode_model)?;
        writeln!(f, "eps_eff_inside = {:.4}", self.eps_eff_inside)?;
        write!(f, "eps_eff_outside = {:.4}", self.eps_eff_outside)
    }
}
