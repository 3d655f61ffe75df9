//! Beam metrics of a single pattern and campaign aggregates across ports.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::farfield::{fmt_sig, RadiationPattern};
use crate::units::{wrap_deg, wrap_deg_positive};

/// Exact half-power level in dB.
pub const HALF_POWER_DB: f64 = -3.010_299_956_639_812;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternMetrics {
    /// Beam direction in degrees, wrapped to (−180, 180].
    pub peak_direction: f64,
    /// Peak 2D directivity in dB.
    pub peak_level_db: f64,
    pub hpbw: f64,
    /// Highest sidelobe, dB below peak. `None` when nothing rises outside the main lobe.
    pub sll_db: Option<f64>,
    /// Level at the midpoint toward the nearest neighbouring beam, dB below peak.
    pub crossover_db: Option<f64>,
}

impl PatternMetrics {
    pub fn csv_header() -> &'static str {
        "peak_direction_deg,peak_level_db,hpbw_deg,sll_db,crossover_db"
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_sig).unwrap_or_default();
        format!(
            "{},{},{},{},{}",
            fmt_sig(self.peak_direction),
            fmt_sig(self.peak_level_db),
            fmt_sig(self.hpbw),
            opt(self.sll_db),
            opt(self.crossover_db)
        )
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "peak_direction_deg = {:.3}", self.peak_direction);
        let _ = writeln!(s, "directivity_2d_db = {:.3}", self.peak_level_db);
        let _ = writeln!(s, "hpbw_deg = {:.3}", self.hpbw);
        match self.sll_db {
            Some(v) => writeln!(s, "sll_db = {v:.2}"),
            None => writeln!(s, "sll_db = none"),
        }
        .ok();
        if let Some(v) = self.crossover_db {
            let _ = writeln!(s, "crossover_db = {v:.2}");
        }
        s
    }
}

struct Peak {
    index: usize,
    /// Fractional sample position of the interpolated peak.
    position: f64,
    /// Interpolated peak power, linear.
    power: f64,
}

fn to_db(p: f64) -> f64 {
    10.0 * p.log10()
}

fn find_peak(power: &[f64]) -> Result<Peak> {
    let n = power.len();
    if n < 3 {
        return Err(Error::DegeneratePattern(format!("{n} samples")));
    }
    if power.iter().any(|p| !p.is_finite()) {
        return Err(Error::DegeneratePattern("non-finite power".into()));
    }
    let mut index = 0;
    for (i, &p) in power.iter().enumerate() {
        if p > power[index] {
            index = i;
        }
    }
    let peak = power[index];
    if !(peak > 0.0) {
        return Err(Error::DegeneratePattern("zero power everywhere".into()));
    }
    let (ym, y0, yp) = (
        to_db(power[(index + n - 1) % n].max(peak * 1e-30)),
        to_db(peak),
        to_db(power[(index + 1) % n].max(peak * 1e-30)),
    );
    let curv = ym - 2.0 * y0 + yp;
    let (delta, level) = if curv < 0.0 {
        let d = 0.5 * (ym - yp) / curv;
        (d, y0 - 0.25 * (ym - yp) * d)
    } else {
        (0.0, y0)
    };
    Ok(Peak {
        index,
        position: index as f64 + delta,
        power: 10f64.powf(level / 10.0),
    })
}

/// Peak 2D directivity `2π |F(peak)|² / ∫|F|² dφ` in dB.
pub fn directivity(p: &RadiationPattern) -> Result<f64> {
    let power = p.power();
    let peak = find_peak(&power)?;
    Ok(directivity_db(&power, peak.power))
}

fn directivity_db(power: &[f64], peak_power: f64) -> f64 {
    let total: f64 = power.iter().sum();
    to_db(peak_power * power.len() as f64 / total)
}

/// Walks from the peak in direction `dir` (±1) to the half-power crossing,
/// returning its fractional sample offset from the peak sample.
fn half_power_crossing(db: &[f64], peak: usize, dir: isize) -> Option<f64> {
    let n = db.len() as isize;
    let mut prev = db[peak];
    for s in 1..=n / 2 {
        let v = db[(peak as isize + dir * s).rem_euclid(n) as usize];
        if v <= HALF_POWER_DB {
            let t = (prev - HALF_POWER_DB) / (prev - v);
            return Some((s - 1) as f64 + t);
        }
        prev = v;
    }
    None
}

/// Number of samples from the peak to the main-lobe edge on side `dir`: the
/// first local minimum at least 3 dB down.
fn main_lobe_edge(db: &[f64], peak: usize, dir: isize) -> usize {
    let n = db.len() as isize;
    let at = |s: isize| db[(peak as isize + dir * s).rem_euclid(n) as usize];
    for s in 1..n / 2 {
        if at(s) <= HALF_POWER_DB && at(s + 1) > at(s) {
            return s as usize;
        }
    }
    (n / 2) as usize
}

/// Extracts beam direction, half-power beamwidth, sidelobe level and
/// directivity. Ties in the peak go to the smallest angle.
pub fn analyze(p: &RadiationPattern) -> Result<PatternMetrics> {
    let power = p.power();
    let n = power.len();
    let peak = find_peak(&power)?;
    let db: Vec<f64> = power
        .iter()
        .map(|&v| to_db((v / peak.power).max(1e-30)))
        .collect();

    let (left, right) = match (
        half_power_crossing(&db, peak.index, -1),
        half_power_crossing(&db, peak.index, 1),
    ) {
        (Some(l), Some(r)) => (l, r),
        _ => {
            return Err(Error::BeamwidthUndefined(
                "no half-power crossing within 180° of the peak".into(),
            ))
        }
    };
    let hpbw = (left + right) * p.step_deg;
    if !(hpbw > 0.0 && hpbw < 360.0) {
        return Err(Error::BeamwidthUndefined(format!("beamwidth {hpbw}°")));
    }

    let lo = main_lobe_edge(&db, peak.index, -1);
    let hi = main_lobe_edge(&db, peak.index, 1);
    let mut sll: Option<f64> = None;
    if lo + hi < n {
        // samples strictly outside the main lobe, walking from its right edge
        for s in hi + 1..n - lo {
            let i = (peak.index + s) % n;
            let v = db[i];
            if v > db[(i + n - 1) % n] && v >= db[(i + 1) % n] {
                sll = Some(sll.map_or(v, |m: f64| m.max(v)));
            }
        }
    }

    Ok(PatternMetrics {
        peak_direction: wrap_deg(peak.position * p.step_deg),
        peak_level_db: directivity_db(&power, peak.power),
        hpbw,
        sll_db: sll.map(|v| -v),
        crossover_db: None,
    })
}

/// Pattern level at `angle_deg` in dB relative to the interpolated peak,
/// linear in dB between samples.
pub fn level_at(p: &RadiationPattern, angle_deg: f64) -> Result<f64> {
    let power = p.power();
    let peak = find_peak(&power)?;
    let n = power.len();
    let x = wrap_deg_positive(angle_deg) / p.step_deg;
    let i = x.floor() as usize % n;
    let t = x - x.floor();
    let a = to_db((power[i] / peak.power).max(1e-30));
    let b = to_db((power[(i + 1) % n] / peak.power).max(1e-30));
    Ok(a + t * (b - a))
}

/// Cross-port aggregates of a scan campaign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignSummary {
    pub scan_range_deg: f64,
    pub gain_ripple_db: f64,
    pub spacing_list_deg: Vec<f64>,
    /// Smallest and largest beamwidth.
    pub hpbw_range: (f64, f64),
}

/// Aggregates metrics listed in port order. Directions must strictly
/// increase; `allow_identical` admits equal directions (identical-port test
/// mode). A single entry yields a zero span and ripple.
pub fn compare_ports(list: &[PatternMetrics], allow_identical: bool) -> Result<CampaignSummary> {
    if list.is_empty() {
        return Err(Error::Input("no port metrics to compare".into()));
    }
    let mut spacing = Vec::with_capacity(list.len() - 1);
    for (k, w) in list.windows(2).enumerate() {
        let d = w[1].peak_direction - w[0].peak_direction;
        let ok = if allow_identical { d >= 0.0 } else { d > 0.0 };
        if !ok {
            return Err(Error::Input(format!(
                "beam directions must increase: entry {} at {}° follows {}°",
                k + 2,
                w[1].peak_direction,
                w[0].peak_direction
            )));
        }
        spacing.push(d);
    }
    let fold = |f: fn(&PatternMetrics) -> f64| {
        list.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
    };
    let gain = fold(|m| m.peak_level_db);
    Ok(CampaignSummary {
        scan_range_deg: list[list.len() - 1].peak_direction - list[0].peak_direction,
        gain_ripple_db: gain.1 - gain.0,
        spacing_list_deg: spacing,
        hpbw_range: fold(|m| m.hpbw),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::farfield::Engine;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn from_power<F: Fn(f64) -> f64>(step: f64, f: F) -> RadiationPattern {
        RadiationPattern::from_fn(step, Engine::Analytic, |a| Complex64::new(f(wrap_deg(a)).sqrt(), 0.0)).unwrap()
    }

    fn gaussian(s: f64, center: f64) -> impl Fn(f64) -> f64 {
        move |a| (-(wrap_deg(a - center)).powi(2) / (2.0 * s * s)).exp()
    }

    #[test]
    fn cos_squared() {
        let p = from_power(0.25, |a| a.to_radians().cos().powi(2));
        let m = analyze(&p).unwrap();
        assert!(m.peak_direction.abs() < 1e-9);
        assert!((m.hpbw - 90.0).abs() < 0.1, "{}", m.hpbw);
    }

    #[test]
    fn isotropic() {
        let p = from_power(1.0, |_| 1.0);
        assert!(directivity(&p).unwrap().abs() < 1e-12);
        assert!(matches!(analyze(&p), Err(Error::BeamwidthUndefined(_))));
    }

    #[test]
    fn zero_pattern_is_degenerate() {
        let p = from_power(1.0, |_| 0.0);
        assert!(matches!(analyze(&p), Err(Error::DegeneratePattern(_))));
    }

    #[test]
    fn gaussian_width() {
        let s = 2.717;
        let want = 2.0 * s * (2.0 * 2f64.ln()).sqrt();
        for step in [0.25, 0.05] {
            let m = analyze(&from_power(step, gaussian(s, 0.0))).unwrap();
            assert!((m.hpbw - 6.40).abs() < 0.02, "{}", m.hpbw);
            assert!((m.hpbw - want).abs() < 0.02);
        }
    }

    #[test]
    fn off_grid_peak_is_interpolated() {
        let m = analyze(&from_power(0.25, gaussian(3.0, 12.1))).unwrap();
        assert!((m.peak_direction - 12.1).abs() < 0.01, "{}", m.peak_direction);
    }

    #[test]
    fn sidelobes() {
        // main beam plus a −13 dB lobe at 40°
        let p = from_power(0.25, |a| gaussian(3.0, 0.0)(a) + 0.05 * gaussian(3.0, 40.0)(a));
        let m = analyze(&p).unwrap();
        let sll = m.sll_db.unwrap();
        assert!((sll - 13.0103).abs() < 0.01, "{sll}");
        let clean = analyze(&from_power(0.25, gaussian(3.0, 0.0))).unwrap();
        assert_eq!(clean.sll_db, None);
    }

    #[test]
    fn wide_beam_has_no_beamwidth() {
        let p = from_power(1.0, |a| 1.0 + 0.15 * a.to_radians().cos());
        assert!(matches!(analyze(&p), Err(Error::BeamwidthUndefined(_))));
    }

    #[test]
    fn directivity_of_known_pattern() {
        // |cos φ|² integrates to π, so D = 2π/π = 2
        let p = from_power(0.5, |a| a.to_radians().cos().powi(2));
        assert!((directivity(&p).unwrap() - to_db(2.0)).abs() < 1e-9);
    }

    #[test]
    fn level_at_midpoint() {
        let p = from_power(0.25, gaussian(3.0, 0.0));
        let v = level_at(&p, 3.0).unwrap();
        assert!((v - to_db((-0.5f64).exp())).abs() < 1e-3, "{v}");
    }

    fn table_metrics() -> Vec<PatternMetrics> {
        let hpbw = [6.37, 6.15, 6.56, 6.22, 6.38, 6.36, 6.42, 6.15, 6.37];
        let gain = [18.5, 18.9, 18.7, 18.9, 18.8, 18.7, 18.5, 18.9, 18.5];
        let dir = [151.0, 158.5, 166.0, 173.0, 180.0, 187.0, 194.0, 201.5, 208.5];
        (0..9)
            .map(|k| PatternMetrics {
                peak_direction: dir[k],
                peak_level_db: gain[k],
                hpbw: hpbw[k],
                sll_db: None,
                crossover_db: None,
            })
            .collect()
    }

    #[test]
    fn table_campaign() {
        let s = compare_ports(&table_metrics(), false).unwrap();
        assert_eq!(s.scan_range_deg, 57.5);
        assert!((s.gain_ripple_db - 0.4).abs() < 1e-9);
        assert_eq!(s.spacing_list_deg, vec![7.5, 7.5, 7.0, 7.0, 7.0, 7.0, 7.5, 7.0]);
        assert_eq!(s.hpbw_range, (6.15, 6.56));
    }

    #[test]
    fn unsorted_and_duplicates() {
        let mut t = table_metrics();
        t.swap(2, 3);
        assert!(matches!(compare_ports(&t, false), Err(Error::Input(_))));
        let same = vec![table_metrics()[4].clone(); 2];
        assert!(matches!(compare_ports(&same, false), Err(Error::Input(_))));
        let s = compare_ports(&same, true).unwrap();
        assert_eq!((s.scan_range_deg, s.gain_ripple_db), (0.0, 0.0));
        assert!(compare_ports(&[], false).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn scale_invariance(re in -5.0f64..5.0, im in -5.0f64..5.0, center in -60.0f64..60.0) {
            prop_assume!(re.abs() + im.abs() > 1e-3);
            let a = Complex64::new(re, im);
            let p = from_power(0.25, |x| gaussian(3.0, center)(x) + 0.02 * gaussian(2.0, center + 30.0)(x));
            let mut q = p.clone();
            for v in &mut q.amplitude { *v *= a; }
            let m = analyze(&p).unwrap();
            let n = analyze(&q).unwrap();
            prop_assert!((m.peak_direction - n.peak_direction).abs() < 1e-9);
            prop_assert!((m.hpbw - n.hpbw).abs() < 1e-9);
            prop_assert!((m.peak_level_db - n.peak_level_db).abs() < 1e-9);
            prop_assert!((m.sll_db.unwrap() - n.sll_db.unwrap()).abs() < 1e-9);
        }

        #[test]
        fn rotation_covariance(shift in -720isize..720) {
            let p = from_power(0.25, |x| gaussian(3.0, 10.0)(x) + 0.03 * gaussian(2.0, 50.0)(x));
            let q = p.rotated(shift);
            let m = analyze(&p).unwrap();
            let n = analyze(&q).unwrap();
            let d = wrap_deg(n.peak_direction - m.peak_direction - shift as f64 * 0.25);
            prop_assert!(d.abs() < 1e-9);
            prop_assert!((m.hpbw - n.hpbw).abs() < 1e-9);
            prop_assert!((m.sll_db.unwrap() - n.sll_db.unwrap()).abs() < 1e-9);
        }
    }
}
