//! Physical constants and unit helpers. Everything internal is SI; angles
//! cross module boundaries in degrees.

/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;
/// Vacuum permeability (H/m), CODATA 2018.
pub const MU0: f64 = 1.256_637_062_12e-6;
/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 1.0 / (MU0 * C0 * C0);
/// Free-space wave impedance (ohm).
pub const ETA0: f64 = MU0 * C0;

/// Free-space wavelength at `f0` hertz.
pub fn wavelength(f0: f64) -> f64 {
    C0 / f0
}

pub fn wavenumber(f0: f64) -> f64 {
    2.0 * std::f64::consts::PI * f0 / C0
}

/// Wraps an angle in degrees into `(-180, 180]`.
pub fn wrap_deg(a: f64) -> f64 {
    let mut w = a.rem_euclid(360.0);
    if w > 180.0 {
        w -= 360.0;
    }
    w
}

/// Wraps an angle in degrees into `[0, 360)`.
pub fn wrap_deg_positive(a: f64) -> f64 {
    let w = a.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavelength_at_28ghz() {
        assert!((wavelength(28e9) * 1e3 - 10.707).abs() < 5e-4);
    }

    #[test]
    fn impedance_of_free_space() {
        assert!((ETA0 - 376.730_313).abs() < 1e-5);
        assert!((1.0 / (EPS0 * MU0).sqrt() - C0).abs() < 1e-6);
    }

    #[test]
    fn wrapping() {
        assert_eq!(wrap_deg(190.0), -170.0);
        assert_eq!(wrap_deg(-180.0), 180.0);
        assert_eq!(wrap_deg(360.0), 0.0);
        assert_eq!(wrap_deg_positive(-0.25), 359.75);
    }
}
