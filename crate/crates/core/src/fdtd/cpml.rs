//! Convolutional PML (Roden & Gedney) with polynomial grading and a
//! complex-frequency-shifted pole.

use crate::units::{EPS0, ETA0};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlParams {
    /// Layer thickness in cells.
    pub cells: usize,
    /// Polynomial grading order of σ and κ.
    pub order: f64,
    /// Normal-incidence reflection the grading is designed for.
    pub reflection: f64,
    pub kappa_max: f64,
    /// Peak CFS shift as a fraction of `ω0 ε0`.
    pub alpha_max_rel: f64,
}

impl Default for PmlParams {
    fn default() -> Self {
        Self {
            cells: 10,
            order: 3.0,
            reflection: 1e-6,
            kappa_max: 1.0,
            alpha_max_rel: 0.05,
        }
    }
}

/// Update coefficients along one axis, for integer (E) and half-integer (H)
/// positions. Outside the layer `b = 1, c = 0, 1/κ = 1`.
#[derive(Debug, Clone)]
pub(crate) struct AxisProfile {
    pub b_e: Vec<f64>,
    pub c_e: Vec<f64>,
    pub kinv_e: Vec<f64>,
    pub b_h: Vec<f64>,
    pub c_h: Vec<f64>,
    pub kinv_h: Vec<f64>,
}

impl AxisProfile {
    pub fn new(n: usize, dx: f64, dt: f64, omega: f64, background_eps: f64, p: &PmlParams) -> Self {
        let thickness = p.cells as f64 * dx;
        let sigma_max = -(p.order + 1.0) * p.reflection.ln() / (2.0 * ETA0 * background_eps.sqrt() * thickness);
        let alpha_max = p.alpha_max_rel * omega * EPS0;
        let last = (n - 1) as f64;
        let cells = p.cells as f64;
        let depth = |pos: f64| -> f64 {
            let left = cells - pos;
            let right = pos - (last - cells);
            left.max(right).max(0.0) / cells
        };
        let coeffs = |g: f64| -> (f64, f64, f64) {
            if g <= 0.0 {
                return (1.0, 0.0, 1.0);
            }
            let gm = g.powf(p.order);
            let sigma = sigma_max * gm;
            let kappa = 1.0 + (p.kappa_max - 1.0) * gm;
            let alpha = alpha_max * (1.0 - g);
            let b = (-(sigma / kappa + alpha) * dt / EPS0).exp();
            let c = sigma * (b - 1.0) / (kappa * (sigma + kappa * alpha));
            (b, c, 1.0 / kappa)
        };
        let mut prof = AxisProfile {
            b_e: vec![1.0; n],
            c_e: vec![0.0; n],
            kinv_e: vec![1.0; n],
            b_h: vec![1.0; n],
            c_h: vec![0.0; n],
            kinv_h: vec![1.0; n],
        };
        for i in 0..n {
            let (b, c, k) = coeffs(depth(i as f64));
            prof.b_e[i] = b;
            prof.c_e[i] = c;
            prof.kinv_e[i] = k;
            let (b, c, k) = coeffs(depth(i as f64 + 0.5));
            prof.b_h[i] = b;
            prof.c_h[i] = c;
            prof.kinv_h[i] = k;
        }
        prof
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_is_symmetric_and_inactive_inside() {
        let p = PmlParams::default();
        let n = 61;
        let prof = AxisProfile::new(n, 1e-3, 1e-12, 2.0 * std::f64::consts::PI * 28e9, 1.0, &p);
        for i in 0..n {
            assert_eq!(prof.c_e[i], prof.c_e[n - 1 - i]);
            if i + 1 < n {
                assert_eq!(prof.c_h[i], prof.c_h[n - 2 - i]);
            }
        }
        for i in p.cells..=n - 1 - p.cells {
            assert_eq!(prof.c_e[i], 0.0);
            assert_eq!(prof.b_e[i], 1.0);
        }
        assert!(prof.c_e[0] < 0.0 && prof.b_e[0] < 1.0);
    }
}
